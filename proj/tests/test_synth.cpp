#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "odis/synth.hpp"

using namespace odis;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.n_target = 1500;
  cfg.n_reference = 600;
  cfg.distance_sample = 300;
  return cfg;
}

}  // namespace

TEST_CASE("generate_synth_corpus produces a valid labeled corpus") {
  SynthConfig cfg = small_config();
  SynthCorpus corpus = generate_synth_corpus(cfg);

  CHECK(corpus.reference.size() == 600);
  CHECK(corpus.target.size() == 1500);
  CHECK(corpus.target_embeddings.size() == 1500);

  const auto& reg = default_dimension_registry();
  for (const auto& row : corpus.reference_scores.rows)
    validate_score_vector(row, reg);
  for (const auto& row : corpus.target_scores.rows)
    validate_score_vector(row, reg);

  std::set<std::string> ids;
  for (const auto& d : corpus.target) {
    CHECK(!d.text.empty());
    CHECK(d.token_count >= 200);
    CHECK(d.token_count <= 1200);
    CHECK(d.domain_tag.has_value());
    ids.insert(d.id);
  }
  CHECK(ids.size() == corpus.target.size());
  for (const auto& e : corpus.target_embeddings)
    CHECK(e.vector.size() == static_cast<size_t>(cfg.embed_dim));

  SUBCASE("generation is deterministic") {
    SynthCorpus again = generate_synth_corpus(cfg);
    CHECK(again.target[42].text == corpus.target[42].text);
    CHECK(again.target[42].token_count == corpus.target[42].token_count);
    CHECK(again.target_scores.rows[42].values == corpus.target_scores.rows[42].values);
    CHECK(again.target_embeddings[42].vector == corpus.target_embeddings[42].vector);
  }
  SUBCASE("different seeds diverge") {
    SynthConfig other = cfg;
    other.seed = 8;
    SynthCorpus again = generate_synth_corpus(other);
    CHECK(again.target[0].text != corpus.target[0].text);
  }
}

TEST_CASE("run_synth_eval satisfies the pipeline invariants end to end") {
  SynthConfig cfg = small_config();
  SynthEvalReport report = run_synth_eval(cfg, "");

  SUBCASE("per-dimension budget adherence is exact") {
    REQUIRE(report.selection.budgets.size() == report.selection.per_dim_token_totals.size());
    for (size_t d = 0; d < report.selection.budgets.size(); ++d)
      CHECK(report.selection.per_dim_token_totals[d] <= report.selection.budgets[d]);
    int64_t budget_sum = 0;
    for (int64_t b : report.selection.budgets) budget_sum += b;
    CHECK(budget_sum == report.total_budget);
  }
  SUBCASE("decorrelation residuals surface end to end") {
    CHECK(report.decorrelation_max_offdiag_rel <= 1e-8);
    CHECK(report.decorrelation_max_pearson <= 1e-6);
  }
  SUBCASE("the union outspreads both baselines even at this small size") {
    CHECK(report.odis_union.stats.mean > report.pc1_top.stats.mean);
    CHECK(report.odis_union.stats.mean > report.avg_top.stats.mean);
  }
  SUBCASE("surrogates track the true scores") {
    for (const auto& m : report.holdout_metrics) CHECK(m.spearman_rho >= 0.7);
    for (double rho : report.target_spearman_true) CHECK(rho >= 0.7);
  }
  SUBCASE("union members carry tokens and the overlap stays modest") {
    CHECK(report.selection.union_token_total > 0);
    CHECK(report.selection.overlap_ratio_tokens <= 0.10);
  }
}

TEST_CASE("synth-eval artifact writing and config hash") {
  namespace fs = std::filesystem;
  SynthConfig cfg = small_config();
  cfg.n_target = 400;
  cfg.n_reference = 200;
  cfg.distance_sample = 120;
  std::string dir = "/tmp/odis_synth_artifacts";
  fs::remove_all(dir);
  run_synth_eval(cfg, dir);

  for (const char* name :
       {"ref_corpus.jsonl", "reference_scores.jsonl", "target_corpus.jsonl",
        "target_scores_true.jsonl", "embeddings.jsonl", "pca_model.json",
        "selection_manifest.json", "selected.jsonl", "synth_report.json"})
    CHECK(fs::exists(fs::path(dir) / name));

  CHECK(cfg.config_hash() != SynthConfig{}.config_hash());
  fs::remove_all(dir);
}
