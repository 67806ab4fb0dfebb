#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rreh/codec_index.hpp"
#include "rreh/trainer.hpp"

namespace rreh {

/// One retrieval direction: every query code is ranked against the gallery.
struct RetrievalRun {
  const CodeDatabase* queries = nullptr;
  const LabelMatrix* query_labels = nullptr;
  const CodeDatabase* gallery = nullptr;
  const LabelMatrix* gallery_labels = nullptr;
  std::string direction;

  void validate() const;
};

/// Average precision over the full ranking; `relevant` must be non-empty.
double average_precision(const std::vector<RankedHit>& ranking,
                         const std::unordered_set<std::uint64_t>& relevant);

struct MapResult {
  double map = 0.0;
  Index evaluated = 0;  // queries with a non-empty relevant set
  Index skipped = 0;
};

/// Mean AP over evaluable queries; relevance is sharing >= 1 label.
MapResult mean_average_precision(const RetrievalRun& run);

struct PRPoint {
  Index rank = 0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Rank-based pooled curve: precision and recall at every rank cutoff,
/// averaged over evaluable queries.
std::vector<PRPoint> pr_curve(const RetrievalRun& run);

struct SweepPoint {
  double beta = 0.0;
  double theta = 0.0;
  std::string direction;
  double map = 0.0;
};

/// Trains one model per (beta, theta) grid point on the corpus and evaluates
/// both retrieval directions between the first two modalities.
std::vector<SweepPoint> sweep(const MultiModalCorpus& corpus, const Hyperparams& base,
                              std::span<const double> beta_grid, std::span<const double> theta_grid);

std::span<const double> default_sweep_grid();  // 1e-5 .. 1e0, log-spaced

struct MapCsvRow {
  std::string method;
  std::string direction;
  Index bits = 0;
  std::optional<double> pairing_ratio;
  MapResult result;
};

void write_map_csv(const std::vector<MapCsvRow>& rows, const std::filesystem::path& path);
void write_pr_csv(const std::vector<PRPoint>& points, const std::filesystem::path& path);
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path);

}  // namespace rreh
