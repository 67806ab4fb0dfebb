#include "rreh/evaluation.hpp"

#include <array>
#include <fstream>

#include "text_util.hpp"

namespace rreh {

void RetrievalRun::validate() const {
  if (!queries || !query_labels || !gallery || !gallery_labels)
    throw ValidationError("retrieval run is missing codes or labels");
  if (queries->bits() != gallery->bits())
    throw ValidationError("query and gallery code lengths differ");
  if (query_labels->rows() != queries->count() || gallery_labels->rows() != gallery->count())
    throw ValidationError("label rows do not match the code counts");
  if (query_labels->label_count() != gallery_labels->label_count())
    throw ValidationError("query and gallery label matrices disagree on the label count");
}

double average_precision(const std::vector<RankedHit>& ranking,
                         const std::unordered_set<std::uint64_t>& relevant) {
  if (relevant.empty()) throw ValidationError("average_precision needs a non-empty relevant set");
  double sum = 0.0;
  Index hits = 0;
  for (std::size_t rank = 0; rank < ranking.size(); ++rank) {
    if (relevant.count(ranking[rank].id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw ValidationError("average_precision: no relevant item in the ranking");
  return sum / static_cast<double>(hits);
}

namespace {

std::unordered_set<std::uint64_t> relevant_set(const RetrievalRun& run, Index q) {
  std::unordered_set<std::uint64_t> relevant;
  for (Index g = 0; g < run.gallery->count(); ++g)
    if (share_label(*run.query_labels, q, *run.gallery_labels, g))
      relevant.insert(run.gallery->ids()[static_cast<std::size_t>(g)]);
  return relevant;
}

}  // namespace

MapResult mean_average_precision(const RetrievalRun& run) {
  run.validate();
  MapResult result;
  double sum = 0.0;
  for (Index q = 0; q < run.queries->count(); ++q) {
    const auto relevant = relevant_set(run, q);
    if (relevant.empty()) {
      ++result.skipped;
      continue;
    }
    sum += average_precision(query(*run.gallery, run.queries->code(q)), relevant);
    ++result.evaluated;
  }
  if (result.evaluated == 0) throw ValidationError("no evaluable queries (all relevant sets empty)");
  result.map = sum / static_cast<double>(result.evaluated);
  return result;
}

std::vector<PRPoint> pr_curve(const RetrievalRun& run) {
  run.validate();
  const Index n = run.gallery->count();
  std::vector<double> precision_sum(static_cast<std::size_t>(n), 0.0);
  std::vector<double> recall_sum(static_cast<std::size_t>(n), 0.0);
  Index evaluated = 0;
  for (Index q = 0; q < run.queries->count(); ++q) {
    const auto relevant = relevant_set(run, q);
    if (relevant.empty()) continue;
    ++evaluated;
    const auto ranking = query(*run.gallery, run.queries->code(q));
    Index hits = 0;
    for (Index rank = 0; rank < n; ++rank) {
      if (relevant.count(ranking[static_cast<std::size_t>(rank)].id)) ++hits;
      precision_sum[static_cast<std::size_t>(rank)] +=
          static_cast<double>(hits) / static_cast<double>(rank + 1);
      recall_sum[static_cast<std::size_t>(rank)] +=
          static_cast<double>(hits) / static_cast<double>(relevant.size());
    }
  }
  if (evaluated == 0) throw ValidationError("no evaluable queries (all relevant sets empty)");
  std::vector<PRPoint> points(static_cast<std::size_t>(n));
  for (Index rank = 0; rank < n; ++rank) {
    points[static_cast<std::size_t>(rank)] = {
        rank + 1, precision_sum[static_cast<std::size_t>(rank)] / static_cast<double>(evaluated),
        recall_sum[static_cast<std::size_t>(rank)] / static_cast<double>(evaluated)};
  }
  return points;
}

std::vector<SweepPoint> sweep(const MultiModalCorpus& corpus, const Hyperparams& base,
                              std::span<const double> beta_grid,
                              std::span<const double> theta_grid) {
  corpus.validate();
  if (!corpus.has_labels()) throw ValidationError("sweep needs a labelled corpus");
  if (beta_grid.empty() || theta_grid.empty()) throw ValidationError("sweep grid is empty");

  std::vector<SweepPoint> points;
  for (double beta : beta_grid) {
    for (double theta : theta_grid) {
      Hyperparams hp = base;
      hp.beta = beta;
      hp.theta = theta;
      const TrainResult trained = train(corpus, hp);

      std::array<CodeDatabase, 2> dbs;
      for (Index i = 0; i < 2; ++i)
        dbs[static_cast<std::size_t>(i)] = pack_codes(
            encode(trained.model, i, corpus.modalities[static_cast<std::size_t>(i)].features));
      const std::array<std::pair<Index, Index>, 2> directions{{{0, 1}, {1, 0}}};
      const std::array<std::string, 2> tags{"I2T", "T2I"};
      for (std::size_t d = 0; d < 2; ++d) {
        const auto [qi, gi] = directions[d];
        RetrievalRun run;
        run.queries = &dbs[static_cast<std::size_t>(qi)];
        run.query_labels = &corpus.labels[static_cast<std::size_t>(qi)];
        run.gallery = &dbs[static_cast<std::size_t>(gi)];
        run.gallery_labels = &corpus.labels[static_cast<std::size_t>(gi)];
        run.direction = tags[d];
        points.push_back({beta, theta, tags[d], mean_average_precision(run).map});
      }
    }
  }
  return points;
}

std::span<const double> default_sweep_grid() {
  static constexpr std::array<double, 6> grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0};
  return grid;
}

void write_map_csv(const std::vector<MapCsvRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "method,direction,bits,pairing_ratio,map,queries_evaluated,queries_skipped\n";
  for (const auto& row : rows) {
    out << row.method << ',' << row.direction << ',' << row.bits << ',';
    if (row.pairing_ratio) out << detail::format_double(*row.pairing_ratio);
    out << ',' << detail::format_double(row.result.map) << ',' << row.result.evaluated << ','
        << row.result.skipped << '\n';
  }
  if (!out) throw IoError("CSV write failed: " + path.string());
}

void write_pr_csv(const std::vector<PRPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "rank,precision,recall\n";
  for (const auto& p : points)
    out << p.rank << ',' << detail::format_double(p.precision) << ','
        << detail::format_double(p.recall) << '\n';
  if (!out) throw IoError("CSV write failed: " + path.string());
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "beta,theta,direction,map\n";
  for (const auto& p : points)
    out << detail::format_double(p.beta) << ',' << detail::format_double(p.theta) << ','
        << p.direction << ',' << detail::format_double(p.map) << '\n';
  if (!out) throw IoError("CSV write failed: " + path.string());
}

}  // namespace rreh
