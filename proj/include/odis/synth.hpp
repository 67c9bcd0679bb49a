#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odis/diagnostics.hpp"
#include "odis/jsonl.hpp"
#include "odis/pca.hpp"
#include "odis/scorer.hpp"
#include "odis/selector.hpp"
#include "odis/types.hpp"

namespace odis {

// Self-contained synthetic experiment: documents carry latent quality
// factors that drive their 11 dimension scores, their text (through
// factor-level tokens a surrogate can learn), and their embedding direction.
// Per-factor top selections then form near-disjoint caps in latent space,
// which is the regime the selection pipeline is built for.
struct SynthConfig {
  uint64_t seed = 42;
  int n_target = 10000;
  int n_reference = 2000;
  int k_true = 4;
  int embed_dim = 64;
  double budget_fraction = 0.2;  // of total target tokens
  int pca_k = 4;
  double scorer_lambda = 1.0;
  double holdout_fraction = 0.1;
  size_t distance_sample = 1000;
  int components_removed = 3;
  int bootstrap_resamples = 20;

  uint64_t config_hash() const;
};

struct SynthCorpus {
  std::vector<Document> reference;
  std::vector<Document> target;
  ScoreMatrix reference_scores;  // true 11-dim scores
  ScoreMatrix target_scores;     // true scores, withheld from the pipeline
  std::vector<EmbeddingRecord> target_embeddings;
};

SynthCorpus generate_synth_corpus(const SynthConfig& cfg);

struct SetDistanceSummary {
  std::string name;
  size_t set_docs = 0;
  int64_t set_tokens = 0;
  DistanceStats stats;
  double bootstrap_se = 0.0;  // of the mean pairwise distance
};

struct SynthEvalReport {
  SynthConfig config;
  PcaModel model;
  std::vector<int> active_pcs;                 // 0-based, non-degenerate
  std::vector<ScorerMetrics> holdout_metrics;  // per active pc
  std::vector<double> target_spearman_true;    // predictions vs true PC scores
  int64_t total_budget = 0;
  SelectionResult selection;
  double decorrelation_max_offdiag_rel = 0.0;  // |cov_ij| / lambda_1, i != j
  double decorrelation_max_pearson = 0.0;
  SetDistanceSummary odis_union;
  SetDistanceSummary pc1_top;
  SetDistanceSummary avg_top;
};

// Runs generation, PCA, scorer training, target scoring, selection, the
// baselines, and the diversity/overlap diagnostics. When out_dir is
// non-empty, all pipeline artifacts land there (atomically).
SynthEvalReport run_synth_eval(const SynthConfig& cfg,
                               const std::string& out_dir);

std::string synth_report_to_json(const SynthEvalReport& r);

}  // namespace odis
