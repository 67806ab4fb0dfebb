#pragma once

#include <Eigen/Cholesky>

#include <cstdint>
#include <string>
#include <vector>

#include "rreh/data_model.hpp"
#include "rreh/kernel.hpp"
#include "rreh/reconstruction.hpp"

namespace rreh {

/// Ablation variants: NoKernel drops the RBF lift, NoReconstruction trains on
/// the paired block only, Neither drops both.
enum class Variant { Full, NoKernel, NoReconstruction, Neither };

Variant variant_from_string(const std::string& name);  // full | k | r | x
std::string to_string(Variant variant);

struct Hyperparams {
  Index bits = 32;
  double beta = 1e-2;
  double theta = 1e-5;
  double gamma = 1e-4;   // projection-update ridge
  double lambda = 1e-3;  // reconstruction ridge
  Index anchors = 600;
  std::vector<Index> kernel_dims;  // per modality; empty -> defaults clipped to data
  int max_iters = 50;
  double tol = 1e-5;  // relative objective change
  std::uint64_t seed = 0;
  KernelExponent kernel_exponent = KernelExponent::Sq;
  bool literal_eq13 = false;  // printed non-anchor update, without theta on the code term
  Variant variant = Variant::Full;

  void validate() const;
};

/// Default kernel dimension: 500 for the first modality, 1000 for the rest,
/// clipped to the modality's sample count.
std::vector<Index> default_kernel_dims(const MultiModalCorpus& corpus, Variant variant);

/// Elementwise sign with sign(0) := +1.
Matrix sign_matrix(const Matrix& values);

/// Mutable blocks of the alternating optimization. Paired columns are in
/// anchor-first order; code entries are exactly +-1.
struct LatentState {
  Matrix latent_anchor;                // r x a
  Matrix latent_rest;                  // r x (n_c - a)
  Matrix shared_codes;                 // r x n_c
  std::vector<Matrix> unpaired_codes;  // per modality, r x nu_i
  std::vector<Matrix> projections;     // per modality, r x k_i
};

/// Lifted blocks of one modality, anchor-first paired order.
struct KernelizedModality {
  Matrix anchors;   // k_i x a
  Matrix rest;      // k_i x (n_c - a)
  Matrix unpaired;  // k_i x nu_i
};
using KernelizedCorpus = std::vector<KernelizedModality>;

/// Exact block minimizers of the training objective. The per-modality
/// projection Grams and the anchor-latent Gram are factorized once here and
/// reused across iterations.
class BlockDescent {
 public:
  BlockDescent(const KernelizedCorpus& data, const std::vector<ReconstructionFactor>& factors,
               const Hyperparams& hp);

  void update_projections(LatentState& state) const;
  void update_latent(LatentState& state) const;
  void update_codes(LatentState& state) const;
  double objective(const LatentState& state) const;

 private:
  const KernelizedCorpus& data_;
  const std::vector<ReconstructionFactor>& factors_;
  Hyperparams hp_;
  std::vector<Eigen::LLT<Matrix>> projection_grams_;
  Eigen::LLT<Matrix> latent_gram_;
};

/// Objective of one state; convenience wrapper over BlockDescent.
double objective(const LatentState& state, const KernelizedCorpus& data,
                 const std::vector<ReconstructionFactor>& factors, const Hyperparams& hp);

struct TrainLogEntry {
  int iteration = 0;
  double after_projections = 0.0;
  double after_latent = 0.0;
  double after_codes = 0.0;
};

struct ModalityModel {
  Vector centering_mean;
  FeatureMap feature_map;
  Matrix projection;  // r x k_i
};

/// The deployable artifact: everything needed to hash an out-of-sample
/// feature vector of any modality.
struct HashModel {
  std::vector<ModalityModel> modalities;
  Index bits = 0;
  Hyperparams hp;
  std::vector<Index> paired_permutation;  // training order of paired columns; first `a` are anchors
  std::vector<Index> unpaired_counts;     // nu_i seen in training
  std::vector<TrainLogEntry> log;
  int iterations = 0;
  bool converged = false;

  Index modality_count() const { return static_cast<Index>(modalities.size()); }
};

/// Center with the stored mean, lift, project, take signs. Accepts n = 0.
Matrix encode(const HashModel& model, Index modality, const Matrix& samples);

struct TrainResult {
  HashModel model;
  std::vector<Matrix> codes;  // per modality, r x n_i, original column order
  std::vector<ReconstructionFactor> factors;
  LatentState state;  // final optimization blocks, anchor-first order
};

/// Full pipeline: center, fit kernels, lift, fit reconstruction factors,
/// then alternate exact block updates until the relative objective change
/// drops below tol or max_iters is reached.
TrainResult train(const MultiModalCorpus& corpus, const Hyperparams& hp);

void write_train_log_csv(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path);

}  // namespace rreh
