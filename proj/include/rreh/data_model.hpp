#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rreh/error.hpp"

namespace rreh {

// One sample per column throughout: a d x n matrix holds n samples of
// dimension d.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct CenterResult {
  Matrix centered;
  Vector mean;
};

/// Subtract the per-feature mean taken over all columns. Rejects non-finite
/// input. The mean is kept for out-of-sample centering later.
CenterResult center(const Matrix& features);

/// Binary multi-label assignment, one row per sample. Two samples are
/// relevant to each other when their rows share at least one set label.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  explicit LabelMatrix(Eigen::MatrixXi entries);

  Index rows() const { return entries_.rows(); }
  Index label_count() const { return entries_.cols(); }
  Index zero_label_rows() const { return zero_rows_; }
  bool row_has_labels(Index row) const;
  const Eigen::MatrixXi& entries() const { return entries_; }
  std::span<const std::uint64_t> mask_row(Index row) const;

 private:
  Eigen::MatrixXi entries_;
  std::vector<std::uint64_t> masks_;  // row-major packed label bits
  Index words_per_row_ = 0;
  Index zero_rows_ = 0;
};

/// True when the two rows share at least one label.
bool share_label(const LabelMatrix& a, Index row_a, const LabelMatrix& b, Index row_b);

LabelMatrix read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const LabelMatrix& labels, const std::filesystem::path& path);

/// One modality's feature matrix. Columns [0, paired_count) are the paired
/// block, columns [paired_count, paired_count + unpaired_count) the unpaired
/// block. Anchors index into the paired block.
struct ModalityDataset {
  Matrix features;
  Vector centering_mean;  // size 0 until centered
  Index paired_count = 0;
  Index unpaired_count = 0;
  std::vector<Index> anchor_indices;  // strictly increasing, within [0, paired_count)

  Index dim() const { return features.rows(); }
  Index sample_count() const { return features.cols(); }
  auto paired_block() const { return features.leftCols(paired_count); }
  auto unpaired_block() const { return features.rightCols(unpaired_count); }
  void validate() const;
};

/// m >= 2 modalities with a common paired prefix. Labels, when present, are
/// per modality and aligned to that modality's columns; the paired prefix
/// rows agree across modalities.
struct MultiModalCorpus {
  std::vector<ModalityDataset> modalities;
  std::vector<LabelMatrix> labels;  // empty or one per modality

  Index modality_count() const { return static_cast<Index>(modalities.size()); }
  Index paired_count() const;
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

/// Sample `count` indices uniformly without replacement from the paired block
/// and install the same ascending list in every modality.
std::vector<Index> select_anchors(MultiModalCorpus& corpus, Index count, std::uint64_t seed);

struct SynthParams {
  int classes = 4;
  int per_class = 100;
  std::vector<Index> dims{16, 24};  // one feature dimension per modality
  double pairing_ratio = 0.5;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

/// Clustered multi-modal corpus: class centers drawn in a latent space, one
/// random linear map per modality plus Gaussian noise. The first
/// floor(pairing_ratio * n) samples (after a seeded shuffle) stay paired;
/// the remainder is re-shuffled independently per modality. Labels are
/// one-hot class ids.
MultiModalCorpus synth_corpus(const SynthParams& params);

/// Unpair a seeded random fraction of a fully paired corpus: keeps
/// floor(pairing_ratio * n) samples paired and moves the rest into
/// independently shuffled per-modality unpaired blocks.
MultiModalCorpus split_corpus(const MultiModalCorpus& corpus, double pairing_ratio,
                              std::uint64_t seed);

// FMAT container: "FMAT1\n", an ASCII "<rows> <cols>\n" line, then
// rows*cols little-endian IEEE-754 doubles in column-major order.
void write_fmat(const Matrix& matrix, std::ostream& out);
void write_fmat(const Matrix& matrix, const std::filesystem::path& path);
Matrix read_fmat(std::istream& in);
Matrix read_fmat(const std::filesystem::path& path);

/// Reads FMAT or plain CSV (one sample per row, transposed on load); the
/// format is sniffed from the leading bytes.
Matrix read_features(const std::filesystem::path& path);

/// Writes manifest.txt, modality_<i>.fmat and (if labelled) labels_<i>.csv.
void save_corpus(const MultiModalCorpus& corpus, const std::filesystem::path& dir);
MultiModalCorpus load_corpus(const std::filesystem::path& dir_or_manifest);

}  // namespace rreh
