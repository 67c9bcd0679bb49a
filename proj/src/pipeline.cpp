#include "odis/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "odis/diagnostics.hpp"
#include "odis/jsonl.hpp"
#include "odis/labeler.hpp"
#include "odis/pca.hpp"
#include "odis/rng.hpp"
#include "odis/scorer.hpp"
#include "odis/selector.hpp"
#include "odis/synth.hpp"

namespace odis {

namespace fs = std::filesystem;
using nlohmann::json;

Config Config::load_file(const std::string& path) {
  Config cfg;
  json j = json::parse(read_file(path));
  if (!j.is_object()) throw OdisError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) cfg.values_[key] = value.get<std::string>();
    else if (value.is_boolean()) cfg.values_[key] = value.get<bool>() ? "true" : "false";
    else if (value.is_number() || value.is_null()) cfg.values_[key] = value.dump();
    else throw OdisError("config key '" + key + "' must be a scalar");
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& dflt) const {
  auto v = get(key);
  return v ? *v : dflt;
}

double Config::get_double(const std::string& key, double dflt) const {
  auto v = get(key);
  if (!v) return dflt;
  try {
    return std::stod(*v);
  } catch (...) {
    throw OdisError("config key '" + key + "' is not a number: " + *v);
  }
}

int64_t Config::get_int(const std::string& key, int64_t dflt) const {
  auto v = get(key);
  if (!v) return dflt;
  try {
    return std::stoll(*v);
  } catch (...) {
    throw OdisError("config key '" + key + "' is not an integer: " + *v);
  }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  auto v = get(key);
  if (!v) return dflt;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw OdisError("config key '" + key + "' is not a boolean: " + *v);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

uint64_t Config::hash() const { return fnv1a64(canonical()); }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "label", "fit-pca", "train-scorer", "score",
      "select", "report",  "synth-eval"};
  return names;
}

namespace {

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

struct StageContext {
  std::string stage;
  std::string out_dir;
  Config* config = nullptr;
  json inputs = json::object();
  json artifacts = json::object();
  json extra = json::object();
  std::chrono::steady_clock::time_point started;

  std::string out(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }

  void note_input(const std::string& path) {
    inputs[path] = hex64(file_fingerprint(path));
  }

  void note_artifact(const std::string& path) {
    artifacts[path] = hex64(file_fingerprint(path));
  }

  StageResult finish() {
    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started)
                    .count();
    json manifest;
    manifest["stage"] = stage;
    manifest["tool_version"] = kToolVersion;
    manifest["config_hash"] = hex64(config->hash());
    manifest["inputs"] = inputs;
    manifest["artifacts"] = artifacts;
    manifest["wall_ms"] = wall;
    manifest["extra"] = extra;
    atomic_write_file(out("manifest_" + stage + ".json"), manifest.dump(2) + "\n");
    atomic_write_file(out("config_hash.txt"), hex64(config->hash()) + "\n");

    StageResult result;
    result.stage = stage;
    result.wall_ms = wall;
    for (const auto& [path, _] : artifacts.items()) result.artifacts.push_back(path);
    return result;
  }
};

std::string require_path(const Config& cfg, const std::string& key,
                         const std::string& hint) {
  auto v = cfg.get(key);
  if (!v || v->empty())
    throw OdisError("missing config key '" + key + "': " + hint);
  if (!fs::exists(*v))
    throw OdisError("input for '" + key + "' not found: " + *v + " (" + hint + ")");
  return *v;
}

// The marker is written only after a stage succeeds (see finish()), so a
// failed run never locks the directory.
void guard_output_dir(const std::string& out_dir, uint64_t config_hash,
                      bool force) {
  fs::create_directories(out_dir);
  fs::path marker = fs::path(out_dir) / "config_hash.txt";
  std::string hex = hex64(config_hash) + "\n";
  if (fs::exists(marker)) {
    std::string existing = read_file(marker.string());
    if (existing != hex && !force)
      throw OdisError(
          "output dir " + out_dir +
          " was produced with a different config (config_hash.txt mismatch); "
          "rerun with --force to overwrite");
  }
}

ScoreMatrix load_score_matrix(const std::string& path) {
  ScoreMatrix matrix;
  matrix.dims = default_dimension_registry();
  matrix.rows = read_scores(path, matrix.dims.size());
  for (const auto& row : matrix.rows) validate_score_vector(row, matrix.dims);
  return matrix;
}

std::vector<int> active_pcs(const PcaModel& model) {
  std::vector<int> out;
  for (int k = 0; k < model.k; ++k) {
    if (model.rescale.empty() ||
        !model.rescale[static_cast<size_t>(k)].degenerate)
      out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// label

void stage_label(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string corpus_path = require_path(
      cfg, "paths.reference_corpus", "reference corpus to label (JSONL)");
  ctx.note_input(corpus_path);
  std::vector<Document> docs = read_corpus(corpus_path);

  LabelOptions opts;
  opts.model_name = cfg.get_or("labeling.model", "gpt-4o-mini");
  opts.retry.max_attempts = static_cast<int>(cfg.get_int("labeling.retries", 3));
  opts.retry.base_backoff_ms =
      static_cast<int>(cfg.get_int("labeling.backoff_ms", 250));
  opts.concurrency = static_cast<int>(cfg.get_int("labeling.concurrency", 4));

  std::unique_ptr<ScoringTransport> transport;
  if (auto mock = cfg.get("labeling.mock_replies"); mock && !mock->empty()) {
    ctx.note_input(*mock);
    transport = std::make_unique<MockTransport>(
        MockTransport::from_file(*mock, docs));
  } else {
    std::string base_env = cfg.get_or("labeling.endpoint_env", "ODIS_API_BASE");
    std::string key_env = cfg.get_or("labeling.api_key_env", "ODIS_API_KEY");
    const char* base = std::getenv(base_env.c_str());
    if (!base || !*base)
      throw OdisError("environment variable " + base_env +
                      " must hold the scoring API base URL "
                      "(or set labeling.mock_replies for a fixture transport)");
    OpenAiConfig api;
    api.base_url = base;
    if (const char* key = std::getenv(key_env.c_str())) api.api_key = key;
    api.temperature = cfg.get_double("labeling.temperature", 0.0);
    transport = std::make_unique<OpenAiTransport>(api);
  }

  std::string cache_path = ctx.out("label_cache.jsonl");
  ScoreCache cache = ScoreCache::load(cache_path);
  LabelRunResult result = label_corpus(docs, *transport, opts, &cache);
  cache.save(cache_path);

  write_scores(ctx.out("reference_scores.jsonl"), result.scores);
  std::ostringstream failures;
  for (const auto& f : result.failures) {
    json j;
    j["id"] = f.doc_id;
    j["dimension"] = f.dimension;
    j["reason"] = f.reason;
    failures << j.dump() << "\n";
  }
  atomic_write_file(ctx.out("label_failures.jsonl"), failures.str());

  ctx.note_artifact(ctx.out("reference_scores.jsonl"));
  ctx.note_artifact(ctx.out("label_failures.jsonl"));
  ctx.note_artifact(cache_path);
  ctx.extra["documents"] = docs.size();
  ctx.extra["scored"] = result.scores.size();
  ctx.extra["failed_documents"] = docs.size() - result.scores.size();
  ctx.extra["transport_calls"] = result.transport_calls;
  ctx.extra["cache_hits"] = result.cache_hits;
}

// ---------------------------------------------------------------------------
// fit-pca

void stage_fit_pca(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string scores_path = cfg.get_or("paths.reference_scores",
                                       ctx.out("reference_scores.jsonl"));
  if (!fs::exists(scores_path))
    throw OdisError("reference scores not found at " + scores_path +
                    "; run the label stage or set paths.reference_scores");
  ctx.note_input(scores_path);
  ScoreMatrix matrix = load_score_matrix(scores_path);

  PcaFitOptions opts;
  opts.tau = cfg.get_double("pca.tau", 0.9);
  opts.standardize = cfg.get_bool("pca.standardize", false);
  // K defaults to 4; pca.k = 0 requests the explained-variance rule instead.
  int64_t k = cfg.get_int("pca.k", 4);
  if (k > 0) opts.k_override = static_cast<int>(k);

  PcaModel model = fit_pca(matrix, opts);
  Mat ref_proj = project_rows_raw(model, matrix);
  fit_rescale(model, ref_proj);
  save_pca_model(ctx.out("pca_model.json"), model);
  ctx.note_artifact(ctx.out("pca_model.json"));

  ctx.extra["n"] = matrix.n();
  ctx.extra["k"] = model.k;
  ctx.extra["eigenvalues"] = model.eigenvalues;
  json ratios = json::array();
  for (int i = 1; i <= static_cast<int>(model.m()); ++i)
    ratios.push_back(model.explained_variance_ratio(i));
  ctx.extra["explained_variance"] = ratios;
  json degenerate = json::array();
  for (size_t i = 0; i < model.rescale.size(); ++i)
    if (model.rescale[i].degenerate) degenerate.push_back(i + 1);
  ctx.extra["degenerate_pcs"] = degenerate;
}

// ---------------------------------------------------------------------------
// train-scorer

void stage_train_scorer(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string model_path = ctx.out("pca_model.json");
  if (!fs::exists(model_path))
    throw OdisError("pca_model.json not found in " + ctx.out_dir +
                    "; run fit-pca first");
  ctx.note_input(model_path);
  PcaModel model = load_pca_model(model_path);

  std::string corpus_path = require_path(cfg, "paths.reference_corpus",
                                         "reference corpus used for labeling");
  std::string scores_path = cfg.get_or("paths.reference_scores",
                                       ctx.out("reference_scores.jsonl"));
  if (!fs::exists(scores_path))
    throw OdisError("reference scores not found at " + scores_path);
  ctx.note_input(corpus_path);
  ctx.note_input(scores_path);

  std::vector<Document> docs = read_corpus(corpus_path);
  ScoreMatrix matrix = load_score_matrix(scores_path);
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;

  std::vector<std::string> texts;
  std::vector<std::vector<double>> targets;  // [row][pc]
  for (const auto& row : matrix.rows) {
    auto it = by_id.find(row.doc_id);
    if (it == by_id.end())
      throw OdisError("scored id '" + row.doc_id + "' missing from " + corpus_path);
    texts.push_back(it->second->text);
    targets.push_back(project_rescaled(model, row.values));
  }
  if (texts.size() < 10)
    throw OdisError("train-scorer: need at least 10 scored documents");

  double holdout_fraction = cfg.get_double("scorer.holdout", 0.1);
  uint64_t split_seed = static_cast<uint64_t>(
      cfg.get_int("scorer.split_seed", cfg.get_int("seed", 42)));
  Rng rng(split_seed ^ 0x7ca1d0);
  std::vector<size_t> perm = rng.sample_indices(texts.size(), texts.size());
  size_t n_holdout = static_cast<size_t>(
      std::floor(holdout_fraction * static_cast<double>(texts.size())));
  std::vector<size_t> holdout(perm.begin(), perm.begin() + static_cast<long>(n_holdout));
  std::vector<size_t> train(perm.begin() + static_cast<long>(n_holdout), perm.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());

  ScorerFitOptions base_opts;
  base_opts.features.buckets =
      static_cast<uint32_t>(cfg.get_int("scorer.buckets", 1 << 18));
  base_opts.features.ngram_min = static_cast<int>(cfg.get_int("scorer.ngram_min", 3));
  base_opts.features.ngram_max = static_cast<int>(cfg.get_int("scorer.ngram_max", 5));
  base_opts.reference_fingerprint = file_fingerprint(scores_path);
  double lambda = cfg.get_double("scorer.lambda", 1.0);
  bool tune = cfg.get_bool("scorer.tune", false);

  std::vector<int> pcs = active_pcs(model);
  if (int64_t only = cfg.get_int("scorer.pc", 0); only > 0) {
    if (only > model.k)
      throw OdisError("scorer.pc exceeds the model's K");
    pcs = {static_cast<int>(only - 1)};
  }

  json per_pc = json::array();
  for (int pc : pcs) {
    std::vector<std::string> train_texts;
    std::vector<double> train_y;
    for (size_t i : train) {
      train_texts.push_back(texts[i]);
      train_y.push_back(targets[i][static_cast<size_t>(pc)]);
    }
    std::vector<std::string> ho_texts;
    std::vector<double> ho_y;
    for (size_t i : holdout) {
      ho_texts.push_back(texts[i]);
      ho_y.push_back(targets[i][static_cast<size_t>(pc)]);
    }

    auto fit_with = [&](double lam) {
      ScorerFitOptions o = base_opts;
      o.lambda = lam;
      o.pc_index = pc;
      return fit_scorer_texts(train_texts, train_y, o);
    };
    auto holdout_eval = [&](const SurrogateScorer& s) {
      std::vector<double> pred;
      pred.reserve(ho_texts.size());
      for (const auto& t : ho_texts) pred.push_back(s.predict_text(t));
      return evaluate_scorer(pred, ho_y);
    };

    double chosen = lambda;
    SurrogateScorer scorer = fit_with(lambda);
    if (tune && !ho_texts.empty()) {
      double best_rmse = holdout_eval(scorer).rmse;
      for (double lam : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
        if (lam == lambda) continue;
        SurrogateScorer cand = fit_with(lam);
        double rmse = holdout_eval(cand).rmse;
        if (rmse < best_rmse) {
          best_rmse = rmse;
          chosen = lam;
          scorer = std::move(cand);
        }
      }
    }
    if (!ho_texts.empty()) scorer.holdout_metrics = holdout_eval(scorer);

    std::string path = ctx.out("scorer_k" + std::to_string(pc + 1) + ".json");
    save_scorer(path, scorer);
    ctx.note_artifact(path);
    per_pc.push_back({{"pc", pc + 1},
                      {"lambda", chosen},
                      {"train_rmse", scorer.train_metrics.rmse},
                      {"holdout_rmse", scorer.holdout_metrics.rmse},
                      {"holdout_spearman", scorer.holdout_metrics.spearman_rho}});
  }
  ctx.extra["scorers"] = per_pc;
  ctx.extra["train_size"] = train.size();
  ctx.extra["holdout_size"] = holdout.size();
}

// ---------------------------------------------------------------------------
// score

void stage_score(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string model_path = ctx.out("pca_model.json");
  if (!fs::exists(model_path))
    throw OdisError("pca_model.json not found in " + ctx.out_dir +
                    "; run fit-pca first");
  PcaModel model = load_pca_model(model_path);
  ctx.note_input(model_path);

  std::string corpus_path =
      require_path(cfg, "paths.target_corpus", "target corpus to score (JSONL)");
  ctx.note_input(corpus_path);
  std::vector<Document> docs = read_corpus(corpus_path);

  std::vector<int> pcs = active_pcs(model);
  std::vector<std::string> missing;
  for (int pc : pcs) {
    std::string path = ctx.out("scorer_k" + std::to_string(pc + 1) + ".json");
    if (!fs::exists(path)) missing.push_back(path);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& p : missing) list += "\n  " + p;
    throw OdisError("score: scorer files missing (run train-scorer first):" + list);
  }

  for (int pc : pcs) {
    std::string scorer_path = ctx.out("scorer_k" + std::to_string(pc + 1) + ".json");
    ctx.note_input(scorer_path);
    SurrogateScorer scorer = load_scorer(scorer_path);
    std::vector<double> theta = predict_batch(scorer, docs);
    std::ostringstream out;
    for (size_t i = 0; i < docs.size(); ++i) {
      json j;
      j["id"] = docs[i].id;
      j["score"] = theta[i];
      out << j.dump() << "\n";
    }
    std::string path = ctx.out("scores_pc" + std::to_string(pc + 1) + ".jsonl");
    atomic_write_file(path, out.str());
    ctx.note_artifact(path);
  }
  ctx.extra["documents"] = docs.size();
  ctx.extra["pcs"] = pcs.size();
}

// ---------------------------------------------------------------------------
// select

void stage_select(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string model_path = ctx.out("pca_model.json");
  if (!fs::exists(model_path))
    throw OdisError("pca_model.json not found in " + ctx.out_dir +
                    "; run fit-pca first");
  PcaModel model = load_pca_model(model_path);
  ctx.note_input(model_path);

  std::string corpus_path =
      require_path(cfg, "paths.target_corpus", "target corpus (token counts)");
  ctx.note_input(corpus_path);
  std::vector<Document> docs = read_corpus(corpus_path);
  std::map<std::string, int64_t> tokens;
  for (const auto& d : docs) tokens[d.id] = d.token_count;

  int64_t budget = cfg.get_int("selection.budget_tokens", 0);
  if (budget <= 0)
    throw OdisError("selection.budget_tokens must be set to a positive token budget");
  BudgetStrategy strategy =
      budget_strategy_from_string(cfg.get_or("selection.strategy", "uniform"));

  std::vector<int> pcs = active_pcs(model);
  std::vector<std::vector<ScoredDoc>> pools;
  std::vector<double> active_eigenvalues;
  for (int pc : pcs) {
    std::string path = ctx.out("scores_pc" + std::to_string(pc + 1) + ".jsonl");
    if (!fs::exists(path))
      throw OdisError("select: missing " + path + "; run the score stage first");
    ctx.note_input(path);
    active_eigenvalues.push_back(model.eigenvalues[static_cast<size_t>(pc)]);

    std::vector<ScoredDoc> pool;
    std::string contents = read_file(path);
    size_t start = 0;
    int64_t lineno = 0;
    while (start < contents.size()) {
      size_t end = contents.find('\n', start);
      if (end == std::string::npos) end = contents.size();
      std::string line = contents.substr(start, end - start);
      start = end + 1;
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw ParseLineError("malformed score line", lineno);
      ScoredDoc sd;
      sd.id = j.at("id").get<std::string>();
      sd.score = j.at("score").get<double>();
      auto it = tokens.find(sd.id);
      if (it == tokens.end())
        throw OdisError("select: scored id '" + sd.id + "' missing from " +
                        corpus_path);
      sd.tokens = it->second;
      pool.push_back(std::move(sd));
    }
    pools.push_back(std::move(pool));
  }

  BudgetPlan plan = allocate_budget(budget, active_eigenvalues,
                                    static_cast<int>(pools.size()), strategy);
  SelectionResult result = select(plan, pools);

  atomic_write_file(ctx.out("selection_manifest.json"),
                    selection_manifest_json(result, cfg.hash()));
  write_corpus(ctx.out("selected.jsonl"), export_selection(result, docs));
  ctx.note_artifact(ctx.out("selection_manifest.json"));
  ctx.note_artifact(ctx.out("selected.jsonl"));

  ctx.extra["budget_tokens"] = budget;
  ctx.extra["strategy"] = to_string(strategy);
  ctx.extra["union_docs"] = result.union_ids.size();
  ctx.extra["union_tokens"] = result.union_token_total;
  ctx.extra["overlap_ratio_tokens"] = result.overlap_ratio_tokens;
}

// ---------------------------------------------------------------------------
// report

void stage_report(StageContext& ctx) {
  Config& cfg = *ctx.config;
  std::string scores_path = cfg.get_or("paths.reference_scores",
                                       ctx.out("reference_scores.jsonl"));
  if (!fs::exists(scores_path))
    throw OdisError("reference scores not found at " + scores_path);
  ctx.note_input(scores_path);
  ScoreMatrix matrix = load_score_matrix(scores_path);

  fs::create_directories(fs::path(ctx.out_dir) / "report");

  std::string corr_path = ctx.out("report/dimension_correlations.csv");
  atomic_write_file(corr_path, correlation_to_csv(dimension_correlations(matrix)));
  ctx.note_artifact(corr_path);

  std::string model_path = ctx.out("pca_model.json");
  PcaModel model;
  bool have_model = fs::exists(model_path);
  if (have_model) {
    model = load_pca_model(model_path);
    ctx.note_input(model_path);
    std::string path = ctx.out("report/structure_loadings.csv");
    atomic_write_file(path, correlation_to_csv(structure_loadings(model, matrix)));
    ctx.note_artifact(path);
  }

  if (auto emb_path = cfg.get("paths.embeddings"); emb_path && !emb_path->empty()) {
    if (!fs::exists(*emb_path))
      throw OdisError("paths.embeddings not found: " + *emb_path);
    ctx.note_input(*emb_path);
    EmbeddingSet raw = embedding_set_from_records(read_embeddings(*emb_path));
    int c = static_cast<int>(cfg.get_int("diagnostics.components_removed", 3));
    EmbeddingSet processed = postprocess_embeddings(raw, c);

    std::vector<EmbeddingRecord> recs(processed.ids.size());
    for (size_t i = 0; i < processed.ids.size(); ++i) {
      recs[i].id = processed.ids[i];
      recs[i].vector.assign(
          processed.vectors.a.begin() + static_cast<long>(i * processed.vectors.cols),
          processed.vectors.a.begin() + static_cast<long>((i + 1) * processed.vectors.cols));
    }
    std::string vec_path = ctx.out("report/postprocessed_embeddings.jsonl");
    write_embeddings(vec_path, recs);
    ctx.note_artifact(vec_path);

    size_t sample_n = static_cast<size_t>(cfg.get_int("diagnostics.sample_n", 1000));
    uint64_t seed = static_cast<uint64_t>(
        cfg.get_int("diagnostics.seed", cfg.get_int("seed", 42)));
    DistanceStats stats = pairwise_distance_stats(processed, sample_n, seed);
    std::string stats_path = ctx.out("report/pairwise_distance_stats.json");
    atomic_write_file(stats_path, distance_stats_to_json(stats));
    ctx.note_artifact(stats_path);
    std::string hist_path = ctx.out("report/pairwise_distance_hist.csv");
    atomic_write_file(hist_path, distance_histogram_to_csv(stats));
    ctx.note_artifact(hist_path);
  }

  // Per-domain PC score histograms when a scored target corpus is around.
  if (auto target = cfg.get("paths.target_corpus");
      have_model && target && fs::exists(*target)) {
    std::vector<int> pcs = active_pcs(model);
    bool all_scored = !pcs.empty();
    for (int pc : pcs)
      all_scored = all_scored &&
                   fs::exists(ctx.out("scores_pc" + std::to_string(pc + 1) + ".jsonl"));
    if (all_scored) {
      ctx.note_input(*target);
      std::vector<Document> docs = read_corpus(*target);
      std::map<std::string, std::string> domains;
      for (const auto& d : docs) domains[d.id] = d.domain_tag.value_or("unknown");

      std::map<std::string, PcScoreVector> rows;
      for (size_t s = 0; s < pcs.size(); ++s) {
        std::string path =
            ctx.out("scores_pc" + std::to_string(pcs[s] + 1) + ".jsonl");
        std::string contents = read_file(path);
        size_t start = 0;
        while (start < contents.size()) {
          size_t end = contents.find('\n', start);
          if (end == std::string::npos) end = contents.size();
          std::string line = contents.substr(start, end - start);
          start = end + 1;
          if (line.empty()) continue;
          json j = json::parse(line);
          auto& row = rows[j.at("id").get<std::string>()];
          row.doc_id = j.at("id").get<std::string>();
          row.values.resize(pcs.size(), 0.0);
          row.values[s] = j.at("score").get<double>();
        }
      }
      std::vector<PcScoreVector> pc_rows;
      pc_rows.reserve(rows.size());
      for (auto& [_, row] : rows) pc_rows.push_back(std::move(row));
      std::string path = ctx.out("report/pc_score_histograms.csv");
      atomic_write_file(path, score_distribution_to_csv(
                                  score_distribution_report(pc_rows, domains)));
      ctx.note_artifact(path);
    }
  }
}

// ---------------------------------------------------------------------------
// synth-eval

void stage_synth_eval(StageContext& ctx) {
  Config& cfg = *ctx.config;
  SynthConfig synth;
  synth.seed = static_cast<uint64_t>(cfg.get_int("seed", 42));
  synth.n_target = static_cast<int>(cfg.get_int("synth.size", 10000));
  synth.n_reference = static_cast<int>(cfg.get_int("synth.reference_size", 2000));
  synth.k_true = static_cast<int>(cfg.get_int("synth.k_true", 4));
  synth.embed_dim = static_cast<int>(cfg.get_int("synth.embed_dim", 64));
  synth.budget_fraction = cfg.get_double("synth.budget_fraction", 0.2);
  synth.pca_k = static_cast<int>(cfg.get_int("pca.k", 4));
  synth.scorer_lambda = cfg.get_double("scorer.lambda", 1.0);
  synth.holdout_fraction = cfg.get_double("scorer.holdout", 0.1);
  synth.distance_sample = static_cast<size_t>(cfg.get_int("diagnostics.sample_n", 1000));
  synth.components_removed =
      static_cast<int>(cfg.get_int("diagnostics.components_removed", 3));
  synth.bootstrap_resamples = static_cast<int>(cfg.get_int("synth.bootstrap", 20));

  SynthEvalReport report = run_synth_eval(synth, ctx.out_dir);

  for (const char* name :
       {"ref_corpus.jsonl", "reference_scores.jsonl", "target_corpus.jsonl",
        "target_scores_true.jsonl", "embeddings.jsonl", "pca_model.json",
        "selection_manifest.json", "selected.jsonl", "synth_report.json",
        "report/dimension_correlations.csv", "report/structure_loadings.csv",
        "report/pc_score_histograms.csv"})
    ctx.note_artifact(ctx.out(name));
  for (int pc : report.active_pcs) {
    ctx.note_artifact(ctx.out("scorer_k" + std::to_string(pc + 1) + ".json"));
    ctx.note_artifact(ctx.out("scores_pc" + std::to_string(pc + 1) + ".jsonl"));
  }

  ctx.extra["overlap_ratio_tokens"] = report.selection.overlap_ratio_tokens;
  ctx.extra["mean_distance_odis"] = report.odis_union.stats.mean;
  ctx.extra["mean_distance_pc1_top"] = report.pc1_top.stats.mean;
  ctx.extra["mean_distance_avg_top"] = report.avg_top.stats.mean;
  ctx.extra["decorrelation_max_offdiag_rel"] = report.decorrelation_max_offdiag_rel;
  json spearman = json::array();
  for (const auto& m : report.holdout_metrics) spearman.push_back(m.spearman_rho);
  ctx.extra["holdout_spearman"] = spearman;
}

}  // namespace

StageResult run_stage(const std::string& name, Config& config, bool force) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw OdisError("unknown stage '" + name + "'");

  StageContext ctx;
  ctx.stage = name;
  ctx.config = &config;
  ctx.started = std::chrono::steady_clock::now();
  auto out = config.get("out.dir");
  if (!out || out->empty())
    throw OdisError("no output directory; pass --out <dir>");
  ctx.out_dir = *out;
  guard_output_dir(ctx.out_dir, config.hash(), force);

  if (name == "label") stage_label(ctx);
  else if (name == "fit-pca") stage_fit_pca(ctx);
  else if (name == "train-scorer") stage_train_scorer(ctx);
  else if (name == "score") stage_score(ctx);
  else if (name == "select") stage_select(ctx);
  else if (name == "report") stage_report(ctx);
  else if (name == "synth-eval") stage_synth_eval(ctx);

  return ctx.finish();
}

}  // namespace odis
