#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "odis/linalg.hpp"
#include "odis/pca.hpp"
#include "odis/types.hpp"

namespace odis {

struct CorrelationMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Mat values;  // Pearson coefficients in [-1, 1]; 0 where degenerate
  std::vector<bool> row_degenerate;
  std::vector<bool> col_degenerate;
};

// Pairwise Pearson correlation across the m score dimensions. Zero-variance
// dimensions are flagged and report r = 0.
CorrelationMatrix dimension_correlations(const ScoreMatrix& matrix);

// m x K loadings: correlation between each original dimension and each raw
// PC score over the reference set.
CorrelationMatrix structure_loadings(const PcaModel& model,
                                     const ScoreMatrix& matrix);

struct EmbeddingSet {
  std::vector<std::string> ids;
  Mat vectors;  // one row per id
  bool normalized = false;
  int components_removed = 0;
  Mat removed_components;  // components_removed rows of dimension d
};

EmbeddingSet embedding_set_from_records(
    const std::vector<struct EmbeddingRecord>& recs);

// L2-normalize, fit PCA over the normalized cloud, subtract projections onto
// the top c components, re-normalize. Zero vectors (before or after removal)
// raise an error listing the offending ids.
EmbeddingSet postprocess_embeddings(const EmbeddingSet& raw, int c);

struct DistanceStats {
  size_t sample_size = 0;
  size_t pair_count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::map<int, double> percentiles;  // {1,5,25,50,75,95,99}
  std::array<int64_t, 50> histogram{};  // 50 bins over [0, 2]
};

// Cosine distances over all pairs of a seeded sample (Fisher-Yates draw of
// min(sample_n, N) rows). The sampled set is canonicalized by id before the
// pair sweep, so input order does not affect the result.
DistanceStats pairwise_distance_stats(const EmbeddingSet& emb, size_t sample_n,
                                      uint64_t seed);
DistanceStats pairwise_distance_stats_serial(const EmbeddingSet& emb,
                                             size_t sample_n, uint64_t seed);

// All pairwise cosine distances of the given rows, fixed (i < j) order.
// The OpenMP variant fills fixed slots per pair, so it matches the serial
// sweep bit for bit.
std::vector<double> pairwise_cosine_distances(const Mat& rows);
std::vector<double> pairwise_cosine_distances_serial(const Mat& rows);

// Fixed 50-bin histograms over [0, 5] per (domain, PC). Rows missing a
// domain tag group under "unknown".
struct ScoreDistributionReport {
  int num_pcs = 0;
  // domain -> per-PC bin counts
  std::map<std::string, std::vector<std::array<int64_t, 50>>> histograms;
  int64_t total_rows = 0;
};

ScoreDistributionReport score_distribution_report(
    const std::vector<PcScoreVector>& pc_scores,
    const std::map<std::string, std::string>& domain_by_id);

// Plot-ready serializations.
std::string correlation_to_csv(const CorrelationMatrix& cm);
std::string distance_stats_to_json(const DistanceStats& s);
std::string distance_histogram_to_csv(const DistanceStats& s);
std::string score_distribution_to_csv(const ScoreDistributionReport& r);

}  // namespace odis
