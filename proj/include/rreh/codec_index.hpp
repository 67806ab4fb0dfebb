#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rreh/data_model.hpp"

namespace rreh {

/// Bit-packed binary codes: one item is ceil(bits/64) little-endian words,
/// code row w*64+b stored in bit b of word w, +1 -> 1 and -1 -> 0. Padding
/// bits beyond `bits` are zero.
class CodeDatabase {
 public:
  CodeDatabase() = default;
  CodeDatabase(Index bits, Index count);

  Index bits() const { return bits_; }
  Index count() const { return count_; }
  Index words_per_code() const { return words_per_code_; }
  std::span<const std::uint64_t> code(Index item) const;
  std::span<std::uint64_t> code(Index item);
  const std::vector<std::uint64_t>& ids() const { return ids_; }
  void set_ids(std::vector<std::uint64_t> ids);

 private:
  Index bits_ = 0;
  Index count_ = 0;
  Index words_per_code_ = 0;
  std::vector<std::uint64_t> words_;
  std::vector<std::uint64_t> ids_;  // defaults to 0..count-1
};

/// Packs a sign matrix (one item per column, entries exactly +-1).
CodeDatabase pack_codes(const Matrix& signs);
Matrix unpack_codes(const CodeDatabase& db);

/// Popcount of XOR; spans must have equal length.
Index hamming_distance(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y);

struct RankedHit {
  std::uint64_t id = 0;
  Index distance = 0;
};

/// Exhaustive Hamming scan, ascending distance with ties broken by ascending
/// id; truncated to top_k when given.
std::vector<RankedHit> query(const CodeDatabase& db, std::span<const std::uint64_t> code,
                             std::optional<Index> top_k = std::nullopt);

// BCOD container: "BCOD1\n", an ASCII "<bits> <count>\n" line, then
// count*ceil(bits/64) little-endian 64-bit words, item-major.
void write_bcod(const CodeDatabase& db, std::ostream& out);
void write_bcod(const CodeDatabase& db, const std::filesystem::path& path);
CodeDatabase read_bcod(std::istream& in);
CodeDatabase read_bcod(const std::filesystem::path& path);

}  // namespace rreh
