#include "rreh/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "text_util.hpp"

namespace rreh {

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "k") return Variant::NoKernel;
  if (name == "r") return Variant::NoReconstruction;
  if (name == "x") return Variant::Neither;
  throw ValidationError("unknown variant: " + name + " (expected full, k, r or x)");
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Full: return "full";
    case Variant::NoKernel: return "k";
    case Variant::NoReconstruction: return "r";
    case Variant::Neither: return "x";
  }
  throw ValidationError("invalid variant value");
}

void Hyperparams::validate() const {
  if (bits < 1) throw ValidationError("bits must be at least 1");
  if (beta < 0.0 || !std::isfinite(beta)) throw ValidationError("beta must be non-negative");
  if (theta < 0.0 || !std::isfinite(theta)) throw ValidationError("theta must be non-negative");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
  if (lambda < 0.0 || !std::isfinite(lambda)) throw ValidationError("lambda must be non-negative");
  if (anchors < 1) throw ValidationError("anchor count must be at least 1");
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  for (Index k : kernel_dims)
    if (k < 1) throw ValidationError("kernel dimensions must be positive");
}

std::vector<Index> default_kernel_dims(const MultiModalCorpus& corpus, Variant variant) {
  const bool paired_only =
      variant == Variant::NoReconstruction || variant == Variant::Neither;
  std::vector<Index> dims;
  for (Index i = 0; i < corpus.modality_count(); ++i) {
    const auto& m = corpus.modalities[static_cast<std::size_t>(i)];
    const Index available = paired_only ? m.paired_count : m.sample_count();
    dims.push_back(std::min<Index>(i == 0 ? 500 : 1000, available));
  }
  return dims;
}

Matrix sign_matrix(const Matrix& values) {
  return values.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

namespace {

double objective_impl(const LatentState& state, const KernelizedCorpus& data,
                      const std::vector<ReconstructionFactor>& factors, const Hyperparams& hp) {
  const Index a = state.latent_anchor.cols();
  double fit = 0.0;
  double quant = (state.shared_codes.leftCols(a) - state.latent_anchor).squaredNorm() +
                 (state.shared_codes.rightCols(state.latent_rest.cols()) - state.latent_rest)
                     .squaredNorm();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix& w = state.projections[i];
    const Matrix recon = state.latent_anchor * factors[i].matrix;
    fit += (w * data[i].anchors - state.latent_anchor).squaredNorm();
    fit += (w * data[i].rest - state.latent_rest).squaredNorm();
    fit += hp.beta * (w * data[i].unpaired - recon).squaredNorm();
    quant += (state.unpaired_codes[i] - recon).squaredNorm();
  }
  return fit + hp.theta * quant;
}

void check_state(const LatentState& state, const KernelizedCorpus& data,
                 const std::vector<ReconstructionFactor>& factors, Index bits) {
  const std::size_t m = data.size();
  if (state.projections.size() != m || state.unpaired_codes.size() != m ||
      factors.size() != m)
    throw ValidationError("state/corpus modality counts differ");
  const Index a = data.front().anchors.cols();
  const Index rest = data.front().rest.cols();
  if (state.latent_anchor.rows() != bits || state.latent_anchor.cols() != a ||
      state.latent_rest.rows() != bits || state.latent_rest.cols() != rest ||
      state.shared_codes.rows() != bits || state.shared_codes.cols() != a + rest)
    throw ValidationError("latent/code blocks have inconsistent shapes");
  for (std::size_t i = 0; i < m; ++i) {
    if (data[i].anchors.cols() != a || data[i].rest.cols() != rest)
      throw ValidationError("kernelized blocks disagree on the paired partition");
    if (state.projections[i].rows() != bits ||
        state.projections[i].cols() != data[i].anchors.rows())
      throw ValidationError("projection shape mismatch");
    if (factors[i].matrix.rows() != a ||
        factors[i].matrix.cols() != data[i].unpaired.cols() ||
        state.unpaired_codes[i].rows() != bits ||
        state.unpaired_codes[i].cols() != data[i].unpaired.cols())
      throw ValidationError("unpaired block shape mismatch");
  }
}

}  // namespace

BlockDescent::BlockDescent(const KernelizedCorpus& data,
                           const std::vector<ReconstructionFactor>& factors,
                           const Hyperparams& hp)
    : data_(data), factors_(factors), hp_(hp) {
  if (data_.empty() || data_.size() != factors_.size())
    throw ValidationError("kernelized corpus and factors disagree");
  const Index a = data_.front().anchors.cols();
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const auto& d = data_[i];
    Matrix gram = d.anchors * d.anchors.transpose() + d.rest * d.rest.transpose() +
                  hp_.beta * (d.unpaired * d.unpaired.transpose());
    gram.diagonal().array() += hp_.gamma;
    projection_grams_.emplace_back(gram);
    if (projection_grams_.back().info() != Eigen::Success)
      throw NumericalError("projection Gram is not positive definite; gamma must be > 0");
  }
  Matrix latent_gram = Matrix::Zero(a, a);
  for (const auto& factor : factors_)
    latent_gram += factor.matrix * factor.matrix.transpose();
  latent_gram *= hp_.beta + hp_.theta;
  latent_gram.diagonal().array() += static_cast<double>(data_.size()) + hp_.theta;
  latent_gram_.compute(latent_gram);
  if (latent_gram_.info() != Eigen::Success)
    throw NumericalError("anchor-latent Gram is not positive definite");
}

void BlockDescent::update_projections(LatentState& state) const {
  check_state(state, data_, factors_, state.latent_anchor.rows());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const Matrix recon = state.latent_anchor * factors_[i].matrix;
    const Matrix rhs = state.latent_anchor * data_[i].anchors.transpose() +
                       state.latent_rest * data_[i].rest.transpose() +
                       hp_.beta * (recon * data_[i].unpaired.transpose());
    state.projections[i] = projection_grams_[i].solve(rhs.transpose()).transpose();
  }
}

void BlockDescent::update_latent(LatentState& state) const {
  check_state(state, data_, factors_, state.latent_anchor.rows());
  const Index a = state.latent_anchor.cols();
  const Index rest_cols = state.latent_rest.cols();
  const double m = static_cast<double>(data_.size());

  Matrix t = hp_.theta * state.shared_codes.leftCols(a);
  Matrix rest_sum = Matrix::Zero(state.latent_rest.rows(), rest_cols);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    t += state.projections[i] * data_[i].anchors;
    t += hp_.beta * ((state.projections[i] * data_[i].unpaired) * factors_[i].matrix.transpose());
    t += hp_.theta * (state.unpaired_codes[i] * factors_[i].matrix.transpose());
    rest_sum += state.projections[i] * data_[i].rest;
  }
  state.latent_anchor = latent_gram_.solve(t.transpose()).transpose();

  const double code_weight = hp_.literal_eq13 ? 1.0 : hp_.theta;
  state.latent_rest =
      (rest_sum + code_weight * state.shared_codes.rightCols(rest_cols)) / (m + hp_.theta);
}

void BlockDescent::update_codes(LatentState& state) const {
  check_state(state, data_, factors_, state.latent_anchor.rows());
  const Index a = state.latent_anchor.cols();
  state.shared_codes.leftCols(a) = sign_matrix(state.latent_anchor);
  state.shared_codes.rightCols(state.latent_rest.cols()) = sign_matrix(state.latent_rest);
  for (std::size_t i = 0; i < data_.size(); ++i)
    state.unpaired_codes[i] = sign_matrix(state.latent_anchor * factors_[i].matrix);
}

double BlockDescent::objective(const LatentState& state) const {
  check_state(state, data_, factors_, state.latent_anchor.rows());
  return objective_impl(state, data_, factors_, hp_);
}

double objective(const LatentState& state, const KernelizedCorpus& data,
                 const std::vector<ReconstructionFactor>& factors, const Hyperparams& hp) {
  check_state(state, data, factors, state.latent_anchor.rows());
  return objective_impl(state, data, factors, hp);
}

Matrix encode(const HashModel& model, Index modality, const Matrix& samples) {
  if (modality < 0 || modality >= model.modality_count())
    throw ValidationError("unknown modality index: " + std::to_string(modality));
  const auto& mod = model.modalities[static_cast<std::size_t>(modality)];
  if (samples.rows() != mod.centering_mean.size())
    throw ValidationError("sample dimension does not match the modality");
  if (samples.cols() == 0) return Matrix(model.bits, 0);
  if (!samples.allFinite()) throw ValidationError("encode: non-finite samples");
  const Matrix centered = samples.colwise() - mod.centering_mean;
  return sign_matrix(mod.projection * mod.feature_map.apply(centered));
}

TrainResult train(const MultiModalCorpus& corpus, const Hyperparams& hp) {
  hp.validate();
  corpus.validate();

  const bool paired_only =
      hp.variant == Variant::NoReconstruction || hp.variant == Variant::Neither;
  const bool identity_map = hp.variant == Variant::NoKernel || hp.variant == Variant::Neither;

  MultiModalCorpus working;
  working.modalities.reserve(corpus.modalities.size());
  for (const auto& src : corpus.modalities) {
    ModalityDataset d;
    d.paired_count = src.paired_count;
    d.unpaired_count = paired_only ? 0 : src.unpaired_count;
    d.features = src.features.leftCols(d.paired_count + d.unpaired_count);
    working.modalities.push_back(std::move(d));
  }

  std::mt19937_64 master(hp.seed);
  const std::uint64_t anchor_seed = master();
  std::vector<std::uint64_t> kernel_seeds;
  for (std::size_t i = 0; i < working.modalities.size(); ++i) kernel_seeds.push_back(master());
  const std::uint64_t init_seed = master();

  const auto anchors = select_anchors(working, hp.anchors, anchor_seed);
  const Index a = static_cast<Index>(anchors.size());
  const Index n_c = working.paired_count();
  const Index m = working.modality_count();

  std::vector<Index> kernel_dims = hp.kernel_dims;
  if (!identity_map) {
    if (kernel_dims.empty()) kernel_dims = default_kernel_dims(corpus, hp.variant);
    if (static_cast<Index>(kernel_dims.size()) != m)
      throw ValidationError("kernel_dims must list one dimension per modality");
  }

  // Anchor-first order of the paired block; inverted when emitting codes.
  std::vector<Index> permutation = anchors;
  {
    std::vector<char> is_anchor(static_cast<std::size_t>(n_c), 0);
    for (Index idx : anchors) is_anchor[static_cast<std::size_t>(idx)] = 1;
    for (Index idx = 0; idx < n_c; ++idx)
      if (!is_anchor[static_cast<std::size_t>(idx)]) permutation.push_back(idx);
  }

  HashModel model;
  model.bits = hp.bits;
  model.hp = hp;
  model.hp.anchors = a;
  model.hp.kernel_dims.assign(static_cast<std::size_t>(m), 0);
  model.paired_permutation = permutation;
  KernelizedCorpus kernelized(static_cast<std::size_t>(m));
  std::vector<ReconstructionFactor> factors;

  for (Index i = 0; i < m; ++i) {
    auto& dataset = working.modalities[static_cast<std::size_t>(i)];
    auto centered = center(dataset.features);
    dataset.features = std::move(centered.centered);

    ModalityModel mod;
    mod.centering_mean = std::move(centered.mean);
    if (!identity_map)
      mod.feature_map.kernel = fit_kernel(dataset.features, kernel_dims[static_cast<std::size_t>(i)],
                                          kernel_seeds[static_cast<std::size_t>(i)],
                                          hp.kernel_exponent);
    model.hp.kernel_dims[static_cast<std::size_t>(i)] = mod.feature_map.output_dim(dataset.dim());

    Matrix anchor_cols(dataset.dim(), a);
    Matrix rest_cols(dataset.dim(), n_c - a);
    for (Index j = 0; j < n_c; ++j) {
      if (j < a)
        anchor_cols.col(j) = dataset.features.col(permutation[static_cast<std::size_t>(j)]);
      else
        rest_cols.col(j - a) = dataset.features.col(permutation[static_cast<std::size_t>(j)]);
    }
    auto& k = kernelized[static_cast<std::size_t>(i)];
    k.anchors = mod.feature_map.apply(anchor_cols);
    k.rest = mod.feature_map.apply(rest_cols);
    k.unpaired = mod.feature_map.apply(dataset.unpaired_block());
    factors.push_back(fit_reconstruction(k.anchors, k.unpaired, hp.lambda));

    model.modalities.push_back(std::move(mod));
    model.unpaired_counts.push_back(dataset.unpaired_count);
  }

  // Random latent start, codes from its signs, projections from a first
  // closed-form pass; every block then begins conditionally optimal.
  LatentState state;
  {
    std::mt19937_64 rng(init_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill_normal = [&](Matrix& mat) {
      for (Index j = 0; j < mat.cols(); ++j)
        for (Index r = 0; r < mat.rows(); ++r) mat(r, j) = normal(rng);
    };
    state.latent_anchor.resize(hp.bits, a);
    fill_normal(state.latent_anchor);
    state.latent_rest.resize(hp.bits, n_c - a);
    fill_normal(state.latent_rest);
    state.shared_codes.resize(hp.bits, n_c);
    state.shared_codes.leftCols(a) = sign_matrix(state.latent_anchor);
    state.shared_codes.rightCols(n_c - a) = sign_matrix(state.latent_rest);
    for (Index i = 0; i < m; ++i) {
      state.unpaired_codes.push_back(
          sign_matrix(state.latent_anchor * factors[static_cast<std::size_t>(i)].matrix));
      state.projections.emplace_back(hp.bits,
                                     kernelized[static_cast<std::size_t>(i)].anchors.rows());
    }
  }

  BlockDescent descent(kernelized, factors, hp);
  descent.update_projections(state);
  double previous = descent.objective(state);

  model.converged = false;
  model.iterations = 0;
  for (int iter = 1; iter <= hp.max_iters; ++iter) {
    TrainLogEntry entry;
    entry.iteration = iter;
    descent.update_projections(state);
    entry.after_projections = descent.objective(state);
    descent.update_latent(state);
    entry.after_latent = descent.objective(state);
    descent.update_codes(state);
    entry.after_codes = descent.objective(state);
    model.log.push_back(entry);
    model.iterations = iter;
    if (!std::isfinite(entry.after_codes))
      throw NumericalError("objective became non-finite during training");
    const double change = std::abs(entry.after_codes - previous);
    if (change / std::max(previous, 1e-12) < hp.tol) {
      model.converged = true;
      break;
    }
    previous = entry.after_codes;
  }

  for (Index i = 0; i < m; ++i)
    model.modalities[static_cast<std::size_t>(i)].projection =
        state.projections[static_cast<std::size_t>(i)];

  TrainResult result;
  result.codes.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const auto& dataset = working.modalities[static_cast<std::size_t>(i)];
    Matrix codes(hp.bits, dataset.sample_count());
    for (Index j = 0; j < n_c; ++j)
      codes.col(permutation[static_cast<std::size_t>(j)]) = state.shared_codes.col(j);
    codes.rightCols(dataset.unpaired_count) = state.unpaired_codes[static_cast<std::size_t>(i)];
    result.codes.push_back(std::move(codes));
  }
  result.model = std::move(model);
  result.factors = std::move(factors);
  result.state = std::move(state);
  return result;
}

void write_train_log_csv(const std::vector<TrainLogEntry>& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open log for writing: " + path.string());
  out << "iteration,objective,after_projections,after_latent,after_codes\n";
  for (const auto& entry : log) {
    out << entry.iteration << ',' << detail::format_double(entry.after_codes) << ','
        << detail::format_double(entry.after_projections) << ','
        << detail::format_double(entry.after_latent) << ','
        << detail::format_double(entry.after_codes) << '\n';
  }
  if (!out) throw IoError("log write failed: " + path.string());
}

}  // namespace rreh
