// Test-only reference computations, kept independent of the library's solve
// paths: plain Eigen expressions, gradient descent with exact line search,
// exhaustive enumeration, and naive rankings.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <unordered_set>
#include <vector>

#include "rreh/codec_index.hpp"
#include "rreh/trainer.hpp"

namespace oracles {

using rreh::Index;
using rreh::Matrix;

// Gradient descent with exact line search on || A X - B ||_F^2 + ridge ||X||^2
// expressed through a caller-supplied gradient and curvature form. Runs until
// the gradient norm is tiny; intended for tiny instances only.
template <typename Grad, typename Curv>
Matrix descend(Matrix x, Grad grad, Curv curvature, int max_iters = 2000000,
               double tol = 1e-12) {
  for (int it = 0; it < max_iters; ++it) {
    const Matrix g = grad(x);
    const double gnorm = g.norm();
    if (gnorm <= tol * (1.0 + x.norm())) break;
    const double curv = curvature(g);
    if (!(curv > 0.0)) break;
    x -= (g.squaredNorm() / curv) * g;
  }
  return x;
}

// min_R ||phi_u - phi_a R||^2 + lambda ||R||^2
inline Matrix gd_reconstruction(const Matrix& phi_a, const Matrix& phi_u, double lambda) {
  Matrix r0 = Matrix::Zero(phi_a.cols(), phi_u.cols());
  auto grad = [&](const Matrix& r) -> Matrix {
    return 2.0 * phi_a.transpose() * (phi_a * r - phi_u) + 2.0 * lambda * r;
  };
  auto curv = [&](const Matrix& d) {
    return 2.0 * ((phi_a * d).squaredNorm() + lambda * d.squaredNorm());
  };
  return descend(r0, grad, curv);
}

// min_W ||W phi_p - V||^2 + beta ||W phi_u - T||^2 + gamma ||W||^2
inline Matrix gd_projection(const Matrix& phi_p, const Matrix& phi_u, const Matrix& v,
                            const Matrix& target_u, double beta, double gamma) {
  Matrix w0 = Matrix::Zero(v.rows(), phi_p.rows());
  auto grad = [&](const Matrix& w) -> Matrix {
    return 2.0 * (w * phi_p - v) * phi_p.transpose() +
           2.0 * beta * (w * phi_u - target_u) * phi_u.transpose() + 2.0 * gamma * w;
  };
  auto curv = [&](const Matrix& d) {
    return 2.0 * ((d * phi_p).squaredNorm() + beta * (d * phi_u).squaredNorm() +
                  gamma * d.squaredNorm());
  };
  return descend(w0, grad, curv);
}

// Joint descent over the stacked latent blocks [V_anchor | V_rest] of the
// training objective with projections, factors and codes held fixed.
struct LatentOracleProblem {
  const rreh::KernelizedCorpus& data;
  const std::vector<rreh::ReconstructionFactor>& factors;
  const rreh::LatentState& state;  // provides projections and codes
  double beta;
  double theta;
};

inline std::pair<Matrix, Matrix> gd_latent(const LatentOracleProblem& p) {
  const Index a = p.data.front().anchors.cols();
  const Index rest = p.data.front().rest.cols();
  const Index bits = p.state.shared_codes.rows();
  Matrix va = Matrix::Zero(bits, a);
  Matrix vr = Matrix::Zero(bits, rest);
  const Matrix code_anchor = p.state.shared_codes.leftCols(a);
  const Matrix code_rest = p.state.shared_codes.rightCols(rest);

  auto grad_a = [&](const Matrix& x) -> Matrix {
    Matrix g = p.theta * 2.0 * (x - code_anchor);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const Matrix& r = p.factors[i].matrix;
      g += 2.0 * (x - p.state.projections[i] * p.data[i].anchors);
      g += 2.0 * p.beta * (x * r - p.state.projections[i] * p.data[i].unpaired) * r.transpose();
      g += 2.0 * p.theta * (x * r - p.state.unpaired_codes[i]) * r.transpose();
    }
    return g;
  };
  auto grad_r = [&](const Matrix& x) -> Matrix {
    Matrix g = p.theta * 2.0 * (x - code_rest);
    for (std::size_t i = 0; i < p.data.size(); ++i)
      g += 2.0 * (x - p.state.projections[i] * p.data[i].rest);
    return g;
  };
  const double m = static_cast<double>(p.data.size());
  auto curv_a = [&](const Matrix& d) {
    double c = (m + p.theta) * d.squaredNorm();
    for (std::size_t i = 0; i < p.data.size(); ++i)
      c += (p.beta + p.theta) * (d * p.factors[i].matrix).squaredNorm();
    return 2.0 * c;
  };
  auto curv_r = [&](const Matrix& d) { return 2.0 * (m + p.theta) * d.squaredNorm(); };

  va = descend(va, grad_a, curv_a);
  vr = descend(vr, grad_r, curv_r);
  return {va, vr};
}

// Elementwise training objective, written with explicit loops.
inline double naive_objective(const rreh::LatentState& state, const rreh::KernelizedCorpus& data,
                              const std::vector<rreh::ReconstructionFactor>& factors, double beta,
                              double theta) {
  const Index a = state.latent_anchor.cols();
  auto sq_diff = [](const Matrix& x, const Matrix& y) {
    double s = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) {
        const double d = x(i, j) - y(i, j);
        s += d * d;
      }
    return s;
  };
  double total = 0.0;
  double quant = sq_diff(state.shared_codes.leftCols(a), state.latent_anchor) +
                 sq_diff(state.shared_codes.rightCols(state.latent_rest.cols()),
                         state.latent_rest);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix recon = state.latent_anchor * factors[i].matrix;
    total += sq_diff(state.projections[i] * data[i].anchors, state.latent_anchor);
    total += sq_diff(state.projections[i] * data[i].rest, state.latent_rest);
    total += beta * sq_diff(state.projections[i] * data[i].unpaired, recon);
    quant += sq_diff(state.unpaired_codes[i], recon);
  }
  return total + theta * quant;
}

// Central finite differences of the objective with respect to one block.
template <typename Objective>
double max_central_difference(Matrix& block, Objective objective, double step = 1e-5) {
  double max_grad = 0.0;
  for (Index i = 0; i < block.rows(); ++i)
    for (Index j = 0; j < block.cols(); ++j) {
      const double saved = block(i, j);
      block(i, j) = saved + step;
      const double hi = objective();
      block(i, j) = saved - step;
      const double lo = objective();
      block(i, j) = saved;
      max_grad = std::max(max_grad, std::abs(hi - lo) / (2.0 * step));
    }
  return max_grad;
}

// Distance by explicit bit loops, ranking by stable (distance, id) sort.
inline std::vector<rreh::RankedHit> naive_ranking(const rreh::CodeDatabase& db,
                                                  std::span<const std::uint64_t> code) {
  std::vector<rreh::RankedHit> hits;
  for (Index item = 0; item < db.count(); ++item) {
    auto words = db.code(item);
    Index d = 0;
    for (Index bit = 0; bit < db.bits(); ++bit) {
      const auto w = static_cast<std::size_t>(bit / 64);
      const auto b = bit % 64;
      if (((words[w] >> b) & 1) != ((code[w] >> b) & 1)) ++d;
    }
    hits.push_back({db.ids()[static_cast<std::size_t>(item)], d});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& l, const auto& r) {
    return l.distance != r.distance ? l.distance < r.distance : l.id < r.id;
  });
  return hits;
}

inline double naive_average_precision(const std::vector<rreh::RankedHit>& ranking,
                                      const std::unordered_set<std::uint64_t>& relevant) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
    if (!relevant.count(ranking[rank].id)) continue;
    ++hits;
    int in_prefix = 0;
    for (std::size_t k = 0; k <= rank; ++k)
      if (relevant.count(ranking[k].id)) ++in_prefix;
    sum += static_cast<double>(in_prefix) / static_cast<double>(rank + 1);
  }
  return sum / static_cast<double>(hits);
}

// Expected MAP of a run under uniformly shuffled rankings, averaged over
// seeded shuffles.
inline double random_baseline_map(const std::vector<std::vector<char>>& relevance,
                                  Index gallery_count, int shuffles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(gallery_count));
  double total = 0.0;
  int runs = 0;
  for (int s = 0; s < shuffles; ++s) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    double map_sum = 0.0;
    int evaluable = 0;
    for (const auto& rel : relevance) {
      int total_rel = 0;
      for (char c : rel) total_rel += c;
      if (total_rel == 0) continue;
      ++evaluable;
      double ap = 0.0;
      int hits = 0;
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (rel[static_cast<std::size_t>(order[rank])]) {
          ++hits;
          ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
      }
      map_sum += ap / static_cast<double>(total_rel);
    }
    if (evaluable > 0) {
      total += map_sum / evaluable;
      ++runs;
    }
  }
  return total / runs;
}

}  // namespace oracles
