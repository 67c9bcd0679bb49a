#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "odis/pipeline.hpp"
#include "odis/types.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Config file (JSON, dotted keys)");
  cmd->add_option("--out", flags.out_dir, "Output directory for artifacts");
  cmd->add_option("--seed", flags.seed, "Seed for randomized steps");
  cmd->add_flag("--force", flags.force, "Allow reuse of an output dir with a different config");
}

odis::Config build_config(const CommonFlags& flags) {
  odis::Config cfg;
  if (!flags.config_path.empty()) cfg = odis::Config::load_file(flags.config_path);
  if (!flags.out_dir.empty()) cfg.set("out.dir", flags.out_dir);
  if (flags.seed >= 0) cfg.set("seed", std::to_string(flags.seed));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odis: multi-dimensional corpus scoring, PCA decorrelation, "
               "and budgeted diversity-aware selection"};
  app.require_subcommand(1);

  struct StageCmd {
    CLI::App* cmd = nullptr;
    CommonFlags flags;
    std::vector<std::pair<std::string, std::string>> overrides;
  };
  std::map<std::string, StageCmd> cmds;

  auto add_stage = [&](const std::string& name, const std::string& desc) {
    auto& sc = cmds[name];
    sc.cmd = app.add_subcommand(name, desc);
    add_common(sc.cmd, sc.flags);
    return sc.cmd;
  };

  auto* label = add_stage("label", "Score a reference corpus on all 11 dimensions via the scoring API");
  static std::string mock_replies;
  label->add_option("--mock-replies", mock_replies,
                    "JSONL fixture of {id, dimension, reply} rows; replaces the API");

  auto* fit_pca = add_stage("fit-pca", "Fit the PCA decorrelation model on reference scores");
  static long long k_flag = -1;
  static double tau_flag = -1.0;
  static bool standardize_flag = false;
  fit_pca->add_option("--k", k_flag, "Retained components (0 = choose by --tau)");
  fit_pca->add_option("--tau", tau_flag, "Explained-variance threshold in (0,1]");
  fit_pca->add_flag("--standardize", standardize_flag, "Scale dimensions to unit variance first");

  auto* train = add_stage("train-scorer", "Train per-PC surrogate scorers on the reference set");
  static long long pc_flag = 0;
  static double lambda_flag = -1.0;
  static double holdout_flag = -1.0;
  static bool tune_flag = false;
  train->add_option("--pc", pc_flag, "Train only this PC (1-based; default all)");
  train->add_option("--lambda", lambda_flag, "Ridge strength");
  train->add_option("--holdout", holdout_flag, "Holdout fraction for metrics");
  train->add_flag("--tune", tune_flag, "Pick lambda by holdout RMSE over a 10^{-3..3} grid");

  add_stage("score", "Score the target corpus with the trained surrogates");

  auto* select = add_stage("select", "Budgeted per-PC selection and union construction");
  static long long budget_flag = -1;
  static std::string strategy_flag;
  select->add_option("--budget", budget_flag, "Total token budget");
  select->add_option("--strategy", strategy_flag, "uniform | variance_proportional");

  add_stage("report", "Emit correlation, loading, distance, and histogram reports");

  auto* synth = add_stage("synth-eval", "Self-contained synthetic end-to-end experiment");
  static long long size_flag = -1;
  synth->add_option("--size", size_flag, "Synthetic target corpus size");

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, sc] : cmds) {
    if (!sc.cmd->parsed()) continue;
    try {
      odis::Config cfg = build_config(sc.flags);
      if (name == "label" && !mock_replies.empty())
        cfg.set("labeling.mock_replies", mock_replies);
      if (name == "fit-pca") {
        if (k_flag >= 0) cfg.set("pca.k", std::to_string(k_flag));
        if (tau_flag > 0) {
          cfg.set("pca.tau", std::to_string(tau_flag));
          if (k_flag < 0 && !cfg.has("pca.k")) cfg.set("pca.k", "0");
        }
        if (standardize_flag) cfg.set("pca.standardize", "true");
      }
      if (name == "train-scorer") {
        if (pc_flag > 0) cfg.set("scorer.pc", std::to_string(pc_flag));
        if (lambda_flag >= 0) cfg.set("scorer.lambda", std::to_string(lambda_flag));
        if (holdout_flag >= 0) cfg.set("scorer.holdout", std::to_string(holdout_flag));
        if (tune_flag) cfg.set("scorer.tune", "true");
      }
      if (name == "select") {
        if (budget_flag > 0) cfg.set("selection.budget_tokens", std::to_string(budget_flag));
        if (!strategy_flag.empty()) cfg.set("selection.strategy", strategy_flag);
      }
      if (name == "synth-eval" && size_flag > 0)
        cfg.set("synth.size", std::to_string(size_flag));

      odis::StageResult result = odis::run_stage(name, cfg, sc.flags.force);
      std::printf("stage %s finished in %lld ms; %zu artifacts\n",
                  result.stage.c_str(), static_cast<long long>(result.wall_ms),
                  result.artifacts.size());
      for (const auto& a : result.artifacts) std::printf("  %s\n", a.c_str());
      return 0;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 0;
}
