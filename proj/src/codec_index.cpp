#include "rreh/codec_index.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <limits>
#include <numeric>

#include "text_util.hpp"

namespace rreh {

namespace {

constexpr std::string_view kBcodMagic = "BCOD1\n";

}  // namespace

CodeDatabase::CodeDatabase(Index bits, Index count) : bits_(bits), count_(count) {
  if (bits < 1) throw ValidationError("code length must be at least 1");
  if (count < 0) throw ValidationError("item count must be non-negative");
  words_per_code_ = (bits + 63) / 64;
  words_.assign(static_cast<std::size_t>(count * words_per_code_), 0);
  ids_.resize(static_cast<std::size_t>(count));
  std::iota(ids_.begin(), ids_.end(), std::uint64_t{0});
}

std::span<const std::uint64_t> CodeDatabase::code(Index item) const {
  if (item < 0 || item >= count_) throw ValidationError("code item out of range");
  return {words_.data() + item * words_per_code_, static_cast<std::size_t>(words_per_code_)};
}

std::span<std::uint64_t> CodeDatabase::code(Index item) {
  if (item < 0 || item >= count_) throw ValidationError("code item out of range");
  return {words_.data() + item * words_per_code_, static_cast<std::size_t>(words_per_code_)};
}

void CodeDatabase::set_ids(std::vector<std::uint64_t> ids) {
  if (static_cast<Index>(ids.size()) != count_)
    throw ValidationError("id count does not match the item count");
  ids_ = std::move(ids);
}

CodeDatabase pack_codes(const Matrix& signs) {
  if (signs.rows() < 1) throw ValidationError("pack_codes needs at least one code row");
  CodeDatabase db(signs.rows(), signs.cols());
  for (Index item = 0; item < signs.cols(); ++item) {
    auto words = db.code(item);
    for (Index row = 0; row < signs.rows(); ++row) {
      const double v = signs(row, item);
      if (v != 1.0 && v != -1.0)
        throw ValidationError("pack_codes: entries must be exactly +1 or -1");
      if (v == 1.0) words[static_cast<std::size_t>(row / 64)] |= std::uint64_t{1} << (row % 64);
    }
  }
  return db;
}

Matrix unpack_codes(const CodeDatabase& db) {
  Matrix signs(db.bits(), db.count());
  for (Index item = 0; item < db.count(); ++item) {
    auto words = db.code(item);
    for (Index row = 0; row < db.bits(); ++row)
      signs(row, item) =
          (words[static_cast<std::size_t>(row / 64)] >> (row % 64)) & 1 ? 1.0 : -1.0;
  }
  return signs;
}

Index hamming_distance(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y) {
  if (x.size() != y.size()) throw ValidationError("hamming_distance: code lengths differ");
  Index distance = 0;
  for (std::size_t w = 0; w < x.size(); ++w) distance += std::popcount(x[w] ^ y[w]);
  return distance;
}

std::vector<RankedHit> query(const CodeDatabase& db, std::span<const std::uint64_t> code,
                             std::optional<Index> top_k) {
  if (static_cast<Index>(code.size()) != db.words_per_code())
    throw ValidationError("query: code length does not match the database");
  std::vector<RankedHit> hits(static_cast<std::size_t>(db.count()));
  for (Index item = 0; item < db.count(); ++item)
    hits[static_cast<std::size_t>(item)] = {db.ids()[static_cast<std::size_t>(item)],
                                            hamming_distance(db.code(item), code)};
  auto order = [](const RankedHit& lhs, const RankedHit& rhs) {
    return lhs.distance != rhs.distance ? lhs.distance < rhs.distance : lhs.id < rhs.id;
  };
  const Index k = top_k ? std::min<Index>(*top_k, db.count()) : db.count();
  if (k < 0) throw ValidationError("query: top_k must be non-negative");
  if (k < db.count())
    std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), order);
  else
    std::sort(hits.begin(), hits.end(), order);
  hits.resize(static_cast<std::size_t>(k));
  return hits;
}

void write_bcod(const CodeDatabase& db, std::ostream& out) {
  out << kBcodMagic << db.bits() << ' ' << db.count() << '\n';
  if (db.count() > 0)
    out.write(reinterpret_cast<const char*>(db.code(0).data()),
              static_cast<std::streamsize>(sizeof(std::uint64_t)) * db.count() *
                  db.words_per_code());
  if (!out) throw IoError("BCOD write failed");
}

void write_bcod(const CodeDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_bcod(db, out);
}

CodeDatabase read_bcod(std::istream& in) {
  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() != 6 || std::string_view(magic, 6) != kBcodMagic)
    throw FormatError("bad BCOD magic at byte offset 0");
  std::string dims_line;
  char c = 0;
  while (in.get(c) && c != '\n') {
    dims_line.push_back(c);
    if (dims_line.size() > 64) throw FormatError("oversized BCOD dimension line at byte offset 6");
  }
  if (c != '\n') throw FormatError("truncated BCOD dimension line at byte offset 6");
  const auto parts = detail::split(dims_line, ' ');
  if (parts.size() != 2) throw FormatError("malformed BCOD dimension line at byte offset 6");
  const auto bits = detail::parse_int<std::uint64_t>(detail::trim(parts[0]), "BCOD bits");
  const auto count = detail::parse_int<std::uint64_t>(detail::trim(parts[1]), "BCOD count");
  if (bits < 1) throw FormatError("BCOD code length must be positive at byte offset 6");
  const std::uint64_t words_per_code = (bits + 63) / 64;
  constexpr std::uint64_t kMaxWords = std::numeric_limits<std::uint64_t>::max() / 8;
  if (count != 0 && words_per_code > kMaxWords / count)
    throw FormatError("BCOD dimension overflow at byte offset 6");

  CodeDatabase db(static_cast<Index>(bits), static_cast<Index>(count));
  const std::uint64_t payload_start = 6 + dims_line.size() + 1;
  const std::streamsize payload =
      static_cast<std::streamsize>(count * words_per_code * sizeof(std::uint64_t));
  if (count > 0) {
    in.read(reinterpret_cast<char*>(db.code(0).data()), payload);
    if (in.gcount() != payload)
      throw FormatError("truncated BCOD payload at byte offset " +
                        std::to_string(payload_start + static_cast<std::uint64_t>(in.gcount())));
  }
  // Padding bits beyond `bits` must be zero.
  const Index tail_bits = static_cast<Index>(bits % 64);
  if (tail_bits != 0) {
    const std::uint64_t mask = ~((std::uint64_t{1} << tail_bits) - 1);
    for (Index item = 0; item < db.count(); ++item)
      if (db.code(item).back() & mask)
        throw FormatError("BCOD padding bits are not zero (item " + std::to_string(item) + ")");
  }
  return db;
}

CodeDatabase read_bcod(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_bcod(in);
}

}  // namespace rreh
