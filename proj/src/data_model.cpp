#include "rreh/data_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "text_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "FMAT/BCOD serialization assumes a little-endian host");

namespace rreh {

namespace {

constexpr std::string_view kFmatMagic = "FMAT1\n";

std::string offset_msg(const std::string& what, std::uint64_t offset) {
  return what + " at byte offset " + std::to_string(offset);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite values present");
}

}  // namespace

CenterResult center(const Matrix& features) {
  require_finite(features, "center");
  CenterResult result;
  result.mean = features.rowwise().mean();
  result.centered = features.colwise() - result.mean;
  return result;
}

LabelMatrix::LabelMatrix(Eigen::MatrixXi entries) : entries_(std::move(entries)) {
  for (Index i = 0; i < entries_.rows(); ++i)
    for (Index j = 0; j < entries_.cols(); ++j)
      if (entries_(i, j) != 0 && entries_(i, j) != 1)
        throw ValidationError("label entries must be 0 or 1");
  words_per_row_ = (entries_.cols() + 63) / 64;
  masks_.assign(static_cast<std::size_t>(entries_.rows() * words_per_row_), 0);
  for (Index i = 0; i < entries_.rows(); ++i) {
    bool any = false;
    for (Index j = 0; j < entries_.cols(); ++j) {
      if (entries_(i, j) == 1) {
        masks_[static_cast<std::size_t>(i * words_per_row_ + j / 64)] |= std::uint64_t{1}
                                                                         << (j % 64);
        any = true;
      }
    }
    if (!any) ++zero_rows_;
  }
}

bool LabelMatrix::row_has_labels(Index row) const {
  auto words = mask_row(row);
  return std::any_of(words.begin(), words.end(), [](std::uint64_t w) { return w != 0; });
}

std::span<const std::uint64_t> LabelMatrix::mask_row(Index row) const {
  if (row < 0 || row >= rows()) throw ValidationError("label row out of range");
  return {masks_.data() + row * words_per_row_, static_cast<std::size_t>(words_per_row_)};
}

bool share_label(const LabelMatrix& a, Index row_a, const LabelMatrix& b, Index row_b) {
  if (a.label_count() != b.label_count())
    throw ValidationError("label matrices have different label counts");
  auto wa = a.mask_row(row_a);
  auto wb = b.mask_row(row_b);
  for (std::size_t w = 0; w < wa.size(); ++w)
    if (wa[w] & wb[w]) return true;
  return false;
}

LabelMatrix read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path.string());
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    std::vector<int> row;
    for (auto part : detail::split(trimmed, ','))
      row.push_back(detail::parse_int<int>(detail::trim(part), "label entry"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged label CSV: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty label file: " + path.string());
  Eigen::MatrixXi entries(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < entries.rows(); ++i)
    for (Index j = 0; j < entries.cols(); ++j)
      entries(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return LabelMatrix(std::move(entries));
}

void write_labels_csv(const LabelMatrix& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open label file for writing: " + path.string());
  const auto& entries = labels.entries();
  for (Index i = 0; i < entries.rows(); ++i) {
    for (Index j = 0; j < entries.cols(); ++j) {
      if (j) out << ',';
      out << entries(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("label write failed: " + path.string());
}

void ModalityDataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1)
    throw ValidationError("modality features must be at least 1x1");
  require_finite(features, "modality features");
  if (paired_count < 0 || unpaired_count < 0 || paired_count + unpaired_count != features.cols())
    throw ValidationError("paired/unpaired partition does not cover the columns");
  if (centering_mean.size() != 0 && centering_mean.size() != features.rows())
    throw ValidationError("centering mean has wrong dimension");
  Index prev = -1;
  for (Index a : anchor_indices) {
    if (a <= prev || a < 0 || a >= paired_count)
      throw ValidationError("anchor indices must be strictly increasing within the paired block");
    prev = a;
  }
}

Index MultiModalCorpus::paired_count() const {
  return modalities.empty() ? 0 : modalities.front().paired_count;
}

void MultiModalCorpus::validate() const {
  if (modalities.size() < 2) throw ValidationError("a corpus needs at least two modalities");
  for (const auto& m : modalities) m.validate();
  for (const auto& m : modalities) {
    if (m.paired_count != paired_count())
      throw ValidationError("modalities disagree on the paired count");
    if (m.anchor_indices != modalities.front().anchor_indices)
      throw ValidationError("anchor lists differ across modalities");
  }
  if (labels.empty()) return;
  if (labels.size() != modalities.size())
    throw ValidationError("labels must be absent or given for every modality");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].rows() != modalities[i].sample_count())
      throw ValidationError("label rows must match the modality's sample count");
    if (labels[i].label_count() != labels.front().label_count())
      throw ValidationError("label matrices disagree on the label count");
  }
  // Paired columns describe the same items, so their label rows must agree.
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i].entries().topRows(paired_count()) !=
        labels.front().entries().topRows(paired_count()))
      throw ValidationError("paired label rows differ across modalities");
}

std::vector<Index> select_anchors(MultiModalCorpus& corpus, Index count, std::uint64_t seed) {
  corpus.validate();
  const Index n_c = corpus.paired_count();
  if (count < 1) throw ValidationError("anchor count must be positive");
  if (count > n_c) throw ValidationError("anchor count exceeds the paired sample count");
  std::mt19937_64 rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(n_c));
  std::iota(pool.begin(), pool.end(), Index{0});
  // Partial Fisher-Yates: the first `count` entries are a uniform sample
  // without replacement.
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n_c - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Index> anchors(pool.begin(), pool.begin() + count);
  std::sort(anchors.begin(), anchors.end());
  for (auto& m : corpus.modalities) m.anchor_indices = anchors;
  return anchors;
}

MultiModalCorpus synth_corpus(const SynthParams& params) {
  if (params.classes < 2) throw ValidationError("synth needs at least two classes");
  if (params.per_class < 1) throw ValidationError("per_class must be positive");
  if (params.dims.size() < 2) throw ValidationError("synth needs at least two modalities");
  for (Index d : params.dims)
    if (d < 1) throw ValidationError("modality dimensions must be positive");
  if (!(params.pairing_ratio > 0.0 && params.pairing_ratio <= 1.0))
    throw ValidationError("pairing_ratio must be in (0, 1]");
  if (params.noise_sigma < 0.0) throw ValidationError("noise_sigma must be non-negative");

  const Index n = static_cast<Index>(params.classes) * params.per_class;
  const Index n_c = static_cast<Index>(std::floor(params.pairing_ratio * static_cast<double>(n)));
  if (n_c < 1) throw ValidationError("pairing_ratio leaves no paired samples");
  const Index latent_dim = 2 * static_cast<Index>(params.classes);
  const Index m = static_cast<Index>(params.dims.size());

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill_normal = [&](Matrix& mat) {
    for (Index j = 0; j < mat.cols(); ++j)
      for (Index i = 0; i < mat.rows(); ++i) mat(i, j) = normal(rng);
  };

  Matrix centers(latent_dim, params.classes);
  fill_normal(centers);

  // One sample per item and modality; the same latent center drives every
  // modality, all within-class variation comes from the per-modality noise.
  std::vector<Matrix> samples(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    Matrix map(params.dims[static_cast<std::size_t>(i)], latent_dim);
    fill_normal(map);
    map /= std::sqrt(static_cast<double>(latent_dim));
    Matrix noise(params.dims[static_cast<std::size_t>(i)], n);
    fill_normal(noise);
    Matrix& s = samples[static_cast<std::size_t>(i)];
    s.resize(params.dims[static_cast<std::size_t>(i)], n);
    for (Index j = 0; j < n; ++j) {
      const Index cls = j / params.per_class;
      s.col(j) = map * centers.col(cls) + params.noise_sigma * noise.col(j);
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> paired_items(order.begin(), order.begin() + n_c);
  std::sort(paired_items.begin(), paired_items.end());
  const std::vector<Index> rest(order.begin() + n_c, order.end());

  MultiModalCorpus corpus;
  for (Index i = 0; i < m; ++i) {
    std::vector<Index> unpaired_items = rest;
    std::shuffle(unpaired_items.begin(), unpaired_items.end(), rng);
    std::vector<Index> columns = paired_items;
    columns.insert(columns.end(), unpaired_items.begin(), unpaired_items.end());

    ModalityDataset dataset;
    dataset.features.resize(params.dims[static_cast<std::size_t>(i)], n);
    Eigen::MatrixXi label_entries =
        Eigen::MatrixXi::Zero(n, static_cast<Index>(params.classes));
    for (Index c = 0; c < n; ++c) {
      const Index item = columns[static_cast<std::size_t>(c)];
      dataset.features.col(c) = samples[static_cast<std::size_t>(i)].col(item);
      label_entries(c, item / params.per_class) = 1;
    }
    dataset.paired_count = n_c;
    dataset.unpaired_count = n - n_c;
    corpus.modalities.push_back(std::move(dataset));
    corpus.labels.emplace_back(std::move(label_entries));
  }
  corpus.validate();
  return corpus;
}

MultiModalCorpus split_corpus(const MultiModalCorpus& corpus, double pairing_ratio,
                              std::uint64_t seed) {
  corpus.validate();
  if (!(pairing_ratio > 0.0 && pairing_ratio <= 1.0))
    throw ValidationError("pairing_ratio must be in (0, 1]");
  const Index n = corpus.paired_count();
  for (const auto& m : corpus.modalities)
    if (m.unpaired_count != 0)
      throw ValidationError("split requires a fully paired corpus");

  const Index n_c = static_cast<Index>(std::floor(pairing_ratio * static_cast<double>(n)));
  if (n_c < 1) throw ValidationError("pairing_ratio leaves no paired samples");

  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> paired_items(order.begin(), order.begin() + n_c);
  std::sort(paired_items.begin(), paired_items.end());
  const std::vector<Index> rest(order.begin() + n_c, order.end());

  MultiModalCorpus result;
  for (std::size_t i = 0; i < corpus.modalities.size(); ++i) {
    std::vector<Index> unpaired_items = rest;
    std::shuffle(unpaired_items.begin(), unpaired_items.end(), rng);
    std::vector<Index> columns = paired_items;
    columns.insert(columns.end(), unpaired_items.begin(), unpaired_items.end());

    const auto& src = corpus.modalities[i];
    ModalityDataset dataset;
    dataset.features.resize(src.dim(), n);
    Eigen::MatrixXi label_entries;
    if (corpus.has_labels())
      label_entries.resize(n, corpus.labels[i].label_count());
    for (Index c = 0; c < n; ++c) {
      const Index item = columns[static_cast<std::size_t>(c)];
      dataset.features.col(c) = src.features.col(item);
      if (corpus.has_labels()) label_entries.row(c) = corpus.labels[i].entries().row(item);
    }
    dataset.paired_count = n_c;
    dataset.unpaired_count = n - n_c;
    result.modalities.push_back(std::move(dataset));
    if (corpus.has_labels()) result.labels.emplace_back(std::move(label_entries));
  }
  result.validate();
  return result;
}

void write_fmat(const Matrix& matrix, std::ostream& out) {
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw ValidationError("FMAT matrices must be at least 1x1");
  require_finite(matrix, "FMAT write");
  out << kFmatMagic << matrix.rows() << ' ' << matrix.cols() << '\n';
  out.write(reinterpret_cast<const char*>(matrix.data()),
            static_cast<std::streamsize>(sizeof(double)) * matrix.size());
  if (!out) throw IoError("FMAT write failed");
}

void write_fmat(const Matrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_fmat(matrix, out);
}

Matrix read_fmat(std::istream& in) {
  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() != 6 || std::string_view(magic, 6) != kFmatMagic)
    throw FormatError(offset_msg("bad FMAT magic", 0));

  std::string dims_line;
  char c = 0;
  while (in.get(c) && c != '\n') {
    dims_line.push_back(c);
    if (dims_line.size() > 64) throw FormatError(offset_msg("oversized FMAT dimension line", 6));
  }
  if (c != '\n') throw FormatError(offset_msg("truncated FMAT dimension line", 6));
  const auto parts = detail::split(dims_line, ' ');
  if (parts.size() != 2) throw FormatError(offset_msg("malformed FMAT dimension line", 6));
  std::uint64_t rows = 0, cols = 0;
  try {
    rows = detail::parse_int<std::uint64_t>(detail::trim(parts[0]), "FMAT rows");
    cols = detail::parse_int<std::uint64_t>(detail::trim(parts[1]), "FMAT cols");
  } catch (const FormatError&) {
    throw FormatError(offset_msg("malformed FMAT dimension line", 6));
  }
  if (rows < 1 || cols < 1) throw FormatError(offset_msg("FMAT dimensions must be positive", 6));
  constexpr std::uint64_t kMaxElems = std::numeric_limits<std::uint64_t>::max() / sizeof(double);
  if (cols != 0 && rows > kMaxElems / cols)
    throw FormatError(offset_msg("FMAT dimension overflow", 6));
  if (rows > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
      cols > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
      rows * cols > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
    throw FormatError(offset_msg("FMAT dimension overflow", 6));

  const std::uint64_t payload_start = 6 + dims_line.size() + 1;
  Matrix matrix(static_cast<Index>(rows), static_cast<Index>(cols));
  const std::streamsize payload = static_cast<std::streamsize>(rows * cols * sizeof(double));
  in.read(reinterpret_cast<char*>(matrix.data()), payload);
  if (in.gcount() != payload)
    throw FormatError(offset_msg("truncated FMAT payload",
                                 payload_start + static_cast<std::uint64_t>(in.gcount())));
  require_finite(matrix, "FMAT read");
  return matrix;
}

Matrix read_fmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_fmat(in);
}

Matrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() == 6 && std::string_view(magic, 6) == kFmatMagic) {
    in.seekg(0);
    return read_fmat(in);
  }
  in.clear();
  in.seekg(0);

  // CSV fallback: one sample per row, transposed so columns are samples.
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    std::vector<double> row;
    for (auto part : detail::split(trimmed, ','))
      row.push_back(detail::parse_double(detail::trim(part), "feature value"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged feature CSV: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty())
    throw FormatError("empty feature file: " + path.string());
  Matrix matrix(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
  for (Index j = 0; j < matrix.cols(); ++j)
    for (Index i = 0; i < matrix.rows(); ++i)
      matrix(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  require_finite(matrix, "feature CSV");
  return matrix;
}

void save_corpus(const MultiModalCorpus& corpus, const std::filesystem::path& dir) {
  corpus.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());

  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  manifest << "m = " << corpus.modality_count() << '\n';
  manifest << "paired = " << corpus.paired_count() << '\n';
  for (Index i = 0; i < corpus.modality_count(); ++i) {
    const auto& m = corpus.modalities[static_cast<std::size_t>(i)];
    const std::string fname = "modality_" + std::to_string(i) + ".fmat";
    manifest << "features_" << i << " = " << fname << '\n';
    manifest << "dim_" << i << " = " << m.dim() << '\n';
    manifest << "samples_" << i << " = " << m.sample_count() << '\n';
    manifest << "unpaired_" << i << " = " << m.unpaired_count << '\n';
    write_fmat(m.features, dir / fname);
    if (corpus.has_labels()) {
      const std::string lname = "labels_" + std::to_string(i) + ".csv";
      manifest << "labels_" << i << " = " << lname << '\n';
      write_labels_csv(corpus.labels[static_cast<std::size_t>(i)], dir / lname);
    }
  }
  if (!manifest) throw IoError("manifest write failed in " + dir.string());
}

namespace {

std::map<std::string, std::string> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  while (std::getline(in, line)) {
    auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto pos = trimmed.find('=');
    if (pos == std::string_view::npos)
      throw FormatError("manifest line without '=': " + std::string(trimmed));
    values[std::string(detail::trim(trimmed.substr(0, pos)))] =
        std::string(detail::trim(trimmed.substr(pos + 1)));
  }
  return values;
}

const std::string& manifest_get(const std::map<std::string, std::string>& values,
                                const std::string& key) {
  auto it = values.find(key);
  if (it == values.end()) throw FormatError("manifest missing key: " + key);
  return it->second;
}

}  // namespace

MultiModalCorpus load_corpus(const std::filesystem::path& dir_or_manifest) {
  std::filesystem::path manifest_path = dir_or_manifest;
  if (std::filesystem::is_directory(manifest_path)) manifest_path /= "manifest.txt";
  const auto dir = manifest_path.parent_path();
  const auto values = parse_manifest(manifest_path);

  const Index m = detail::parse_int<Index>(manifest_get(values, "m"), "manifest m");
  const Index paired = detail::parse_int<Index>(manifest_get(values, "paired"), "manifest paired");
  if (m < 2) throw FormatError("manifest declares fewer than two modalities");

  MultiModalCorpus corpus;
  bool any_labels = values.count("labels_0") > 0;
  for (Index i = 0; i < m; ++i) {
    const std::string suffix = std::to_string(i);
    ModalityDataset dataset;
    dataset.features = read_fmat(dir / manifest_get(values, "features_" + suffix));
    dataset.paired_count = paired;
    dataset.unpaired_count =
        detail::parse_int<Index>(manifest_get(values, "unpaired_" + suffix), "manifest unpaired");
    const Index dim = detail::parse_int<Index>(manifest_get(values, "dim_" + suffix), "manifest dim");
    const Index samples =
        detail::parse_int<Index>(manifest_get(values, "samples_" + suffix), "manifest samples");
    if (dataset.features.rows() != dim || dataset.features.cols() != samples)
      throw FormatError("manifest dimensions disagree with FMAT contents for modality " + suffix);
    corpus.modalities.push_back(std::move(dataset));
    if (any_labels)
      corpus.labels.push_back(read_labels_csv(dir / manifest_get(values, "labels_" + suffix)));
  }
  corpus.validate();
  return corpus;
}

}  // namespace rreh
