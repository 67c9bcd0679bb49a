#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "odis/jsonl.hpp"
#include "odis/labeler.hpp"
#include "odis/pipeline.hpp"
#include "odis/synth.hpp"

using namespace odis;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

// A small corpus plus a full set of mock replies for it.
void write_label_inputs(const TempDir& dir, int n_docs) {
  std::vector<Document> docs;
  for (int i = 0; i < n_docs; ++i)
    docs.push_back({"d" + std::to_string(100 + i),
                    "document body number " + std::to_string(i) +
                        " with a few extra words",
                    50 + i, std::string(i % 2 ? "even" : "odd")});
  write_corpus(dir.sub("corpus.jsonl"), docs);

  std::string replies;
  for (const auto& d : docs) {
    for (const auto& spec : default_dimension_registry()) {
      nlohmann::json j;
      j["id"] = d.id;
      j["dimension"] = spec.name;
      int score = static_cast<int>(d.token_count) % (spec.scale_max + 1);
      j["reply"] = "Reasoning. " + spec.score_tag + " " + std::to_string(score);
      replies += j.dump() + "\n";
    }
  }
  atomic_write_file(dir.sub("replies.jsonl"), replies);
}

}  // namespace

TEST_CASE("config: file loading, overrides, and hashing") {
  TempDir dir("odis_test_config");
  atomic_write_file(dir.sub("config.json"),
                    "{\"pca.k\": 3, \"scorer.lambda\": 0.5, "
                    "\"selection.strategy\": \"uniform\", \"pca.standardize\": true}\n");
  Config cfg = Config::load_file(dir.sub("config.json"));
  CHECK(cfg.get_int("pca.k", 0) == 3);
  CHECK(cfg.get_double("scorer.lambda", 0) == 0.5);
  CHECK(cfg.get_or("selection.strategy", "") == "uniform");
  CHECK(cfg.get_bool("pca.standardize", false));

  uint64_t h1 = cfg.hash();
  cfg.set("pca.k", "4");  // flag override
  CHECK(cfg.get_int("pca.k", 0) == 4);
  CHECK(cfg.hash() != h1);

  Config same = Config::load_file(dir.sub("config.json"));
  same.set("pca.k", "4");
  CHECK(same.hash() == cfg.hash());

  CHECK_THROWS_AS(cfg.get_int("selection.strategy", 0), OdisError);
}

TEST_CASE("full pipeline over the mock transport") {
  TempDir dir("odis_test_pipeline");
  write_label_inputs(dir, 60);

  // the same corpus serves as reference and target in this smoke flow
  Config cfg;
  cfg.set("out.dir", dir.sub("out"));
  cfg.set("paths.reference_corpus", dir.sub("corpus.jsonl"));
  cfg.set("paths.target_corpus", dir.sub("corpus.jsonl"));
  cfg.set("labeling.mock_replies", dir.sub("replies.jsonl"));
  cfg.set("pca.k", "2");
  cfg.set("scorer.holdout", "0.2");
  cfg.set("selection.budget_tokens", "800");
  cfg.set("seed", "5");

  SUBCASE("stages run in order and artifacts appear") {
    run_stage("label", cfg, false);
    CHECK(fs::exists(dir.sub("out/reference_scores.jsonl")));
    auto scores = read_scores(dir.sub("out/reference_scores.jsonl"), 11);
    CHECK(scores.size() == 60);

    run_stage("fit-pca", cfg, false);
    CHECK(fs::exists(dir.sub("out/pca_model.json")));
    PcaModel model = load_pca_model(dir.sub("out/pca_model.json"));
    CHECK(model.k == 2);

    run_stage("train-scorer", cfg, false);
    CHECK(fs::exists(dir.sub("out/scorer_k1.json")));

    run_stage("score", cfg, false);
    CHECK(fs::exists(dir.sub("out/scores_pc1.jsonl")));

    run_stage("select", cfg, false);
    CHECK(fs::exists(dir.sub("out/selection_manifest.json")));
    CHECK(fs::exists(dir.sub("out/selected.jsonl")));
    auto manifest = nlohmann::json::parse(read_file(dir.sub("out/selection_manifest.json")));
    CHECK(manifest["union_token_total"].get<int64_t>() > 0);
    for (const auto& total : manifest["per_dim_token_totals"])
      CHECK(total.get<int64_t>() <= 400);

    run_stage("report", cfg, false);
    CHECK(fs::exists(dir.sub("out/report/dimension_correlations.csv")));
    CHECK(fs::exists(dir.sub("out/report/structure_loadings.csv")));
    CHECK(fs::exists(dir.sub("out/report/pc_score_histograms.csv")));

    // stage manifests updated along the way
    auto stage_manifest = nlohmann::json::parse(read_file(dir.sub("out/manifest_select.json")));
    CHECK(stage_manifest["stage"] == "select");
    CHECK(stage_manifest["artifacts"].size() >= 2);

    SUBCASE("label cache makes the second run transport-free") {
      auto manifest1 = nlohmann::json::parse(read_file(dir.sub("out/manifest_label.json")));
      CHECK(manifest1["extra"]["transport_calls"].get<int64_t>() == 660);
      run_stage("label", cfg, false);
      auto manifest2 = nlohmann::json::parse(read_file(dir.sub("out/manifest_label.json")));
      CHECK(manifest2["extra"]["transport_calls"].get<int64_t>() == 0);
      CHECK(manifest2["extra"]["cache_hits"].get<int64_t>() == 660);
    }

    SUBCASE("stage idempotence: byte-identical artifacts") {
      std::string before = read_file(dir.sub("out/pca_model.json"));
      run_stage("fit-pca", cfg, false);
      CHECK(read_file(dir.sub("out/pca_model.json")) == before);

      std::string sel_before = read_file(dir.sub("out/selection_manifest.json"));
      run_stage("select", cfg, false);
      CHECK(read_file(dir.sub("out/selection_manifest.json")) == sel_before);
    }
  }

  SUBCASE("score before train-scorer names the missing scorer files") {
    run_stage("label", cfg, false);
    run_stage("fit-pca", cfg, false);
    try {
      run_stage("score", cfg, false);
      FAIL("expected dependency error");
    } catch (const OdisError& e) {
      CHECK(std::string(e.what()).find("scorer_k1.json") != std::string::npos);
      CHECK(std::string(e.what()).find("train-scorer") != std::string::npos);
    }
  }

  SUBCASE("changed config hash refuses the output dir without --force") {
    run_stage("label", cfg, false);
    Config changed = cfg;
    changed.set("pca.k", "3");
    CHECK_THROWS_AS(run_stage("fit-pca", changed, false), OdisError);
    CHECK_NOTHROW(run_stage("fit-pca", changed, true));
  }

  SUBCASE("missing inputs produce actionable errors") {
    Config bad;
    bad.set("out.dir", dir.sub("out2"));
    CHECK_THROWS_AS(run_stage("label", bad, false), OdisError);
    bad.set("paths.reference_corpus", dir.sub("nope.jsonl"));
    try {
      run_stage("label", bad, false);
      FAIL("expected error");
    } catch (const OdisError& e) {
      CHECK(std::string(e.what()).find("nope.jsonl") != std::string::npos);
    }
  }
}

TEST_CASE("synth-eval stage smoke run") {
  TempDir dir("odis_test_synthstage");
  Config cfg;
  cfg.set("out.dir", dir.sub("out"));
  cfg.set("seed", "11");
  cfg.set("synth.size", "500");
  cfg.set("synth.reference_size", "250");
  cfg.set("diagnostics.sample_n", "150");
  StageResult result = run_stage("synth-eval", cfg, false);
  CHECK(result.artifacts.size() >= 10);
  CHECK(fs::exists(dir.sub("out/synth_report.json")));
  auto report = nlohmann::json::parse(read_file(dir.sub("out/synth_report.json")));
  CHECK(report["k"] == 4);
  CHECK(report["distance_odis_union"]["mean_pairwise_distance"].get<double>() > 0.0);
}
