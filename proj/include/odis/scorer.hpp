#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odis/features.hpp"
#include "odis/types.hpp"

namespace odis {

struct ScorerMetrics {
  double rmse = 0.0;
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
  size_t n = 0;
};

// Per-PC linear regressor on hashed n-gram features. Predictions clip to
// [0, 5], the range the rescaled PC targets live on.
struct SurrogateScorer {
  int pc_index = 0;
  FeatureConfig features;
  double lambda = 1.0;
  bool fit_bias = true;
  std::vector<double> weights;  // dense, length features.buckets
  double bias = 0.0;
  ScorerMetrics train_metrics;
  ScorerMetrics holdout_metrics;  // n == 0 when no holdout was used
  uint64_t reference_fingerprint = 0;

  double predict_features(const FeatureVector& f) const;
  double predict_text(std::string_view text) const;
};

struct ScorerFitOptions {
  FeatureConfig features;
  double lambda = 1.0;
  bool fit_bias = true;
  int pc_index = 0;
  double cg_tol = 1e-8;
  int cg_max_iters = 2000;
  uint64_t reference_fingerprint = 0;
};

// Ridge least squares (bias unpenalized) by conjugate gradient on the normal
// equations. Deterministic: accumulation follows input order. All-identical
// feature inputs degrade gracefully to a bias-only model.
SurrogateScorer fit_scorer(const std::vector<FeatureVector>& feats,
                           const std::vector<double>& targets,
                           const ScorerFitOptions& opts);

SurrogateScorer fit_scorer_texts(const std::vector<std::string>& texts,
                                 const std::vector<double>& targets,
                                 const ScorerFitOptions& opts);

// Scores documents in input order. The OpenMP variant writes into
// per-document slots, so its output is identical to the serial one.
std::vector<double> predict_batch(const SurrogateScorer& scorer,
                                  const std::vector<Document>& docs);
std::vector<double> predict_batch_serial(const SurrogateScorer& scorer,
                                         const std::vector<Document>& docs);

// RMSE / Pearson / Spearman of predictions against targets.
// Throws InsufficientDataError when fewer than 2 pairs.
ScorerMetrics evaluate_scorer(const std::vector<double>& predictions,
                              const std::vector<double>& targets);

std::string scorer_to_json(const SurrogateScorer& s);
SurrogateScorer scorer_from_json(const std::string& text);
void save_scorer(const std::string& path, const SurrogateScorer& s);
SurrogateScorer load_scorer(const std::string& path);

}  // namespace odis
