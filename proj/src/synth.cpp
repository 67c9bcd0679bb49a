#include "odis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "odis/rng.hpp"

namespace odis {

using nlohmann::json;

uint64_t SynthConfig::config_hash() const {
  std::ostringstream ss;
  ss << "seed=" << seed << "\nn_target=" << n_target
     << "\nn_reference=" << n_reference << "\nk_true=" << k_true
     << "\nembed_dim=" << embed_dim << "\nbudget_fraction=" << budget_fraction
     << "\npca_k=" << pca_k << "\nscorer_lambda=" << scorer_lambda
     << "\nholdout_fraction=" << holdout_fraction
     << "\ndistance_sample=" << distance_sample
     << "\ncomponents_removed=" << components_removed
     << "\nbootstrap_resamples=" << bootstrap_resamples << "\n";
  return fnv1a64(ss.str());
}

namespace {

// Gram-Schmidt orthonormalization of the columns of a rows x cols matrix.
void orthonormalize_columns(Mat& m) {
  for (size_t c = 0; c < m.cols; ++c) {
    for (size_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (size_t r = 0; r < m.rows; ++r) dot += m(r, c) * m(r, prev);
      for (size_t r = 0; r < m.rows; ++r) m(r, c) -= dot * m(r, prev);
    }
    double n2 = 0.0;
    for (size_t r = 0; r < m.rows; ++r) n2 += m(r, c) * m(r, c);
    double inv = 1.0 / std::sqrt(n2);
    for (size_t r = 0; r < m.rows; ++r) m(r, c) *= inv;
  }
}

std::vector<std::string> random_words(Rng& rng, size_t count, size_t length) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    for (size_t i = 0; i < length; ++i)
      w.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string padded_id(const char* prefix, int index, int width) {
  std::string digits = std::to_string(index);
  std::string out(prefix);
  out.append(static_cast<size_t>(width) - std::min<size_t>(digits.size(), width),
             '0');
  out += digits;
  return out;
}

struct Generator {
  const SynthConfig& cfg;
  Rng rng;
  std::vector<std::vector<std::string>> level_words;  // [factor][level 0..19]
  std::vector<std::string> filler;
  Mat loading;     // 11 x k_true
  Mat embed_basis; // embed_dim x (k_true + 3): factor dirs, then common/aniso
  std::vector<double> base;
  std::vector<int> scale_max;

  explicit Generator(const SynthConfig& c) : cfg(c), rng(c.seed) {
    const auto& registry = default_dimension_registry();
    for (const auto& d : registry) {
      scale_max.push_back(d.scale_max);
      base.push_back(0.5 * d.scale_max);
    }
    const size_t m = registry.size();
    const size_t k = static_cast<size_t>(cfg.k_true);

    auto words = random_words(rng, k * 20 + 40, 7);
    level_words.resize(k);
    size_t w = 0;
    for (size_t f = 0; f < k; ++f)
      for (int lvl = 0; lvl < 20; ++lvl) level_words[f].push_back(words[w++]);
    filler.assign(words.begin() + static_cast<long>(w), words.end());

    loading = Mat(m, k);
    for (double& v : loading.a) v = rng.normal();
    orthonormalize_columns(loading);
    for (size_t c2 = 0; c2 < k; ++c2) {
      double col_scale = 1.0 - 0.06 * static_cast<double>(c2);
      for (size_t r = 0; r < m; ++r) loading(r, c2) *= col_scale;
    }
    // Row norms sized so each dimension's scores spread over its Likert
    // range without heavy clipping.
    for (size_t r = 0; r < m; ++r) {
      double n2 = 0.0;
      for (size_t c2 = 0; c2 < k; ++c2) n2 += loading(r, c2) * loading(r, c2);
      double want = 0.20 * static_cast<double>(scale_max[r]);
      double adj = want / std::sqrt(n2);
      for (size_t c2 = 0; c2 < k; ++c2) loading(r, c2) *= adj;
    }

    embed_basis = Mat(static_cast<size_t>(cfg.embed_dim), k + 3);
    for (double& v : embed_basis.a) v = rng.normal();
    orthonormalize_columns(embed_basis);
  }

  // One document; fills scores and, for target docs, the embedding.
  void make_doc(const std::string& id, bool with_embedding, Document& doc,
                ScoreVector& scores, EmbeddingRecord* emb) {
    const size_t m = base.size();
    const size_t k = static_cast<size_t>(cfg.k_true);

    std::vector<double> u(k);
    double n2 = 0.0;
    for (size_t f = 0; f < k; ++f) {
      u[f] = rng.normal();
      n2 += u[f] * u[f];
    }
    double inv = 1.0 / std::sqrt(std::max(n2, 1e-300));
    for (double& v : u) v *= inv;
    double radius = 2.2 * (0.8 + 0.4 * rng.uniform());
    std::vector<double> z(k);
    for (size_t f = 0; f < k; ++f) z[f] = radius * u[f];

    scores.doc_id = id;
    scores.values.resize(m);
    for (size_t j = 0; j < m; ++j) {
      double g = 0.0;
      for (size_t f = 0; f < k; ++f) g += loading(j, f) * z[f];
      double raw = base[j] + g + 0.25 * rng.normal();
      long v = std::lround(raw);
      v = std::clamp<long>(v, 0, scale_max[j]);
      scores.values[j] = static_cast<double>(v);
    }

    size_t dominant = 0;
    for (size_t f = 1; f < k; ++f)
      if (z[f] > z[dominant]) dominant = f;

    std::string text;
    for (size_t f = 0; f < k; ++f) {
      int lvl = static_cast<int>(std::floor((z[f] / 3.0 + 1.0) * 10.0));
      lvl = std::clamp(lvl, 0, 19);
      for (int rep = 0; rep < 3; ++rep) {
        if (!text.empty()) text.push_back(' ');
        text += level_words[f][static_cast<size_t>(lvl)];
      }
    }
    for (int i = 0; i < 6; ++i) {
      text.push_back(' ');
      text += filler[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(filler.size()) - 1))];
    }

    doc.id = id;
    doc.text = std::move(text);
    doc.token_count = rng.uniform_int(200, 1200);
    doc.domain_tag = "factor" + std::to_string(dominant + 1);

    if (with_embedding && emb) {
      const size_t d = static_cast<size_t>(cfg.embed_dim);
      std::vector<double> e(d, 0.0);
      // Common direction + two high-variance nuisance directions, the kind
      // the top-3 component removal is meant to strip.
      double s1 = 2.0 * rng.normal();
      double s2 = 2.0 * rng.normal();
      for (size_t r = 0; r < d; ++r) {
        double v = embed_basis(r, k);  // common
        v += s1 * embed_basis(r, k + 1);
        v += s2 * embed_basis(r, k + 2);
        for (size_t f = 0; f < k; ++f) v += u[f] * embed_basis(r, f);
        v += 0.08 * rng.normal();
        e[r] = v;
      }
      emb->id = id;
      emb->vector = std::move(e);
    }
  }
};

}  // namespace

SynthCorpus generate_synth_corpus(const SynthConfig& cfg) {
  if (cfg.k_true < 1 || cfg.k_true > 8)
    throw OdisError("synth: k_true must lie in [1, 8]");
  if (cfg.embed_dim < cfg.k_true + 3)
    throw OdisError("synth: embed_dim must be at least k_true + 3");
  if (cfg.n_reference < 20 || cfg.n_target < 20)
    throw OdisError("synth: corpus sizes must be at least 20");

  Generator gen(cfg);
  SynthCorpus corpus;
  corpus.reference_scores.dims = default_dimension_registry();
  corpus.target_scores.dims = default_dimension_registry();

  for (int i = 0; i < cfg.n_reference; ++i) {
    Document doc;
    ScoreVector sv;
    gen.make_doc(padded_id("r", i + 1, 7), false, doc, sv, nullptr);
    corpus.reference.push_back(std::move(doc));
    corpus.reference_scores.rows.push_back(std::move(sv));
  }
  for (int i = 0; i < cfg.n_target; ++i) {
    Document doc;
    ScoreVector sv;
    EmbeddingRecord emb;
    gen.make_doc(padded_id("t", i + 1, 7), true, doc, sv, &emb);
    corpus.target.push_back(std::move(doc));
    corpus.target_scores.rows.push_back(std::move(sv));
    corpus.target_embeddings.push_back(std::move(emb));
  }
  return corpus;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Mean pairwise distance and its bootstrap SE over doc-level resamples.
SetDistanceSummary distance_summary(const std::string& name,
                                    const std::vector<std::string>& ids,
                                    const std::map<std::string, size_t>& row_by_id,
                                    const Mat& all_vectors,
                                    const std::map<std::string, int64_t>& tokens,
                                    const SynthConfig& cfg) {
  SetDistanceSummary out;
  out.name = name;
  out.set_docs = ids.size();
  for (const auto& id : ids) out.set_tokens += tokens.at(id);
  if (ids.size() < 2) return out;

  uint64_t salt = fnv1a64(name);
  Rng sampler(cfg.seed ^ salt);
  size_t take = std::min(cfg.distance_sample, ids.size());
  std::vector<size_t> picked = sampler.sample_indices(ids.size(), take);
  std::vector<std::string> sample_ids;
  for (size_t p : picked) sample_ids.push_back(ids[p]);
  std::sort(sample_ids.begin(), sample_ids.end());

  EmbeddingSet sample;
  sample.ids = sample_ids;
  sample.vectors = Mat(take, all_vectors.cols);
  for (size_t r = 0; r < take; ++r) {
    size_t src = row_by_id.at(sample_ids[r]);
    for (size_t j = 0; j < all_vectors.cols; ++j)
      sample.vectors(r, j) = all_vectors(src, j);
  }

  EmbeddingSet processed = postprocess_embeddings(sample, cfg.components_removed);
  out.stats = pairwise_distance_stats(processed, take, cfg.seed ^ salt);

  // Dense distance matrix for the bootstrap resamples.
  std::vector<double> condensed = pairwise_cosine_distances(processed.vectors);
  auto dist_at = [&](size_t i, size_t j) -> double {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    size_t slot = i * (2 * take - i - 1) / 2 + (j - i - 1);
    return condensed[slot];
  };

  Rng boot(cfg.seed ^ salt ^ 0xb00757a9u);
  std::vector<double> means;
  for (int rep = 0; rep < cfg.bootstrap_resamples; ++rep) {
    std::vector<size_t> pick(take);
    for (size_t i = 0; i < take; ++i)
      pick[i] = static_cast<size_t>(
          boot.uniform_int(0, static_cast<int64_t>(take) - 1));
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < take; ++i)
      for (size_t j = i + 1; j < take; ++j) {
        sum += dist_at(pick[i], pick[j]);
        ++count;
      }
    means.push_back(sum / static_cast<double>(count));
  }
  double mu = mean_of(means);
  double ss = 0.0;
  for (double v : means) ss += (v - mu) * (v - mu);
  out.bootstrap_se =
      std::sqrt(ss / static_cast<double>(means.size() - 1));
  return out;
}

json metrics_json(const ScorerMetrics& m) {
  return {{"rmse", m.rmse},
          {"pearson_r", m.pearson_r},
          {"spearman_rho", m.spearman_rho},
          {"n", m.n}};
}

json summary_json(const SetDistanceSummary& s) {
  json j;
  j["name"] = s.name;
  j["docs"] = s.set_docs;
  j["tokens"] = s.set_tokens;
  j["mean_pairwise_distance"] = s.stats.mean;
  j["bootstrap_se"] = s.bootstrap_se;
  j["sample_size"] = s.stats.sample_size;
  return j;
}

}  // namespace

SynthEvalReport run_synth_eval(const SynthConfig& cfg,
                               const std::string& out_dir) {
  namespace fs = std::filesystem;
  const bool writing = !out_dir.empty();
  auto out_path = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  SynthEvalReport report;
  report.config = cfg;

  SynthCorpus corpus = generate_synth_corpus(cfg);
  if (writing) {
    write_corpus(out_path("ref_corpus.jsonl"), corpus.reference);
    write_scores(out_path("reference_scores.jsonl"), corpus.reference_scores.rows);
    write_corpus(out_path("target_corpus.jsonl"), corpus.target);
    write_scores(out_path("target_scores_true.jsonl"), corpus.target_scores.rows);
    write_embeddings(out_path("embeddings.jsonl"), corpus.target_embeddings);
  }

  // PCA on the reference scores, rescale from reference projections.
  PcaFitOptions fit_opts;
  fit_opts.k_override = cfg.pca_k;
  PcaModel model = fit_pca(corpus.reference_scores, fit_opts);
  Mat ref_proj = project_rows_raw(model, corpus.reference_scores);
  fit_rescale(model, ref_proj);
  report.model = model;
  if (writing) save_pca_model(out_path("pca_model.json"), model);

  for (int k = 0; k < model.k; ++k)
    if (!model.rescale[static_cast<size_t>(k)].degenerate)
      report.active_pcs.push_back(k);
  if (report.active_pcs.empty())
    throw DegeneratePcError("synth eval: every component is degenerate");

  // Decorrelation bookkeeping on the raw reference projections.
  {
    std::vector<double> pmu;
    Mat pcentered;
    center(ref_proj, pmu, pcentered);
    Mat pcov = covariance_blocked(pcentered);
    double lambda1 = std::max(model.eigenvalues[0], 1e-300);
    double max_off = 0.0;
    for (size_t i = 0; i < pcov.rows; ++i)
      for (size_t j = 0; j < pcov.cols; ++j)
        if (i != j) max_off = std::max(max_off, std::fabs(pcov(i, j)));
    report.decorrelation_max_offdiag_rel = max_off / lambda1;
    double max_r = 0.0;
    for (size_t i = 0; i < ref_proj.cols; ++i) {
      std::vector<double> ci(ref_proj.rows), cj(ref_proj.rows);
      for (size_t r = 0; r < ref_proj.rows; ++r) ci[r] = ref_proj(r, i);
      for (size_t j = i + 1; j < ref_proj.cols; ++j) {
        for (size_t r = 0; r < ref_proj.rows; ++r) cj[r] = ref_proj(r, j);
        max_r = std::max(max_r, std::fabs(pearson(ci, cj)));
      }
    }
    report.decorrelation_max_pearson = max_r;
  }

  // Train/holdout split of the reference set.
  Rng split_rng(cfg.seed ^ 0x517ab1e5u);
  size_t n_ref = corpus.reference.size();
  size_t n_holdout = static_cast<size_t>(
      std::floor(cfg.holdout_fraction * static_cast<double>(n_ref)));
  std::vector<size_t> perm = split_rng.sample_indices(n_ref, n_ref);
  std::vector<size_t> holdout_idx(perm.begin(),
                                  perm.begin() + static_cast<long>(n_holdout));
  std::vector<size_t> train_idx(perm.begin() + static_cast<long>(n_holdout),
                                perm.end());
  std::sort(holdout_idx.begin(), holdout_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  // Rescaled reference targets per component.
  Mat ref_targets(n_ref, static_cast<size_t>(model.k));
  for (size_t i = 0; i < n_ref; ++i) {
    auto t = project_rescaled(model, corpus.reference_scores.rows[i].values);
    for (size_t k = 0; k < t.size(); ++k) ref_targets(i, k) = t[k];
  }

  std::vector<SurrogateScorer> scorers;
  for (int pc : report.active_pcs) {
    std::vector<std::string> train_texts;
    std::vector<double> train_y;
    for (size_t idx : train_idx) {
      train_texts.push_back(corpus.reference[idx].text);
      train_y.push_back(ref_targets(idx, static_cast<size_t>(pc)));
    }
    ScorerFitOptions sopts;
    sopts.lambda = cfg.scorer_lambda;
    sopts.pc_index = pc;
    sopts.reference_fingerprint = cfg.config_hash();
    SurrogateScorer scorer = fit_scorer_texts(train_texts, train_y, sopts);

    std::vector<double> ho_pred, ho_y;
    for (size_t idx : holdout_idx) {
      ho_pred.push_back(scorer.predict_text(corpus.reference[idx].text));
      ho_y.push_back(ref_targets(idx, static_cast<size_t>(pc)));
    }
    scorer.holdout_metrics = evaluate_scorer(ho_pred, ho_y);
    report.holdout_metrics.push_back(scorer.holdout_metrics);
    if (writing)
      save_scorer(out_path("scorer_k" + std::to_string(pc + 1) + ".json"), scorer);
    scorers.push_back(std::move(scorer));
  }

  // Score the target corpus with every surrogate.
  std::map<std::string, int64_t> target_tokens;
  int64_t total_tokens = 0;
  for (const auto& d : corpus.target) {
    target_tokens[d.id] = d.token_count;
    total_tokens += d.token_count;
  }

  std::vector<std::vector<double>> theta;  // [active pc][doc]
  for (size_t s = 0; s < scorers.size(); ++s) {
    theta.push_back(predict_batch(scorers[s], corpus.target));
    if (writing) {
      std::ostringstream scores_out;
      for (size_t i = 0; i < corpus.target.size(); ++i) {
        json j;
        j["id"] = corpus.target[i].id;
        j["score"] = theta[s][i];
        scores_out << j.dump() << "\n";
      }
      atomic_write_file(
          out_path("scores_pc" + std::to_string(report.active_pcs[s] + 1) + ".jsonl"),
          scores_out.str());
    }
  }

  // Predictions against the true (withheld) PC scores of the target docs.
  for (size_t s = 0; s < scorers.size(); ++s) {
    std::vector<double> truth(corpus.target.size());
    for (size_t i = 0; i < corpus.target.size(); ++i) {
      auto t = project_rescaled(model, corpus.target_scores.rows[i].values);
      truth[i] = t[static_cast<size_t>(report.active_pcs[s])];
    }
    report.target_spearman_true.push_back(spearman(theta[s], truth));
  }

  // Budgeted selection and union.
  report.total_budget = static_cast<int64_t>(
      std::floor(cfg.budget_fraction * static_cast<double>(total_tokens)));
  BudgetPlan plan = allocate_budget(report.total_budget, model.eigenvalues,
                                    static_cast<int>(report.active_pcs.size()),
                                    BudgetStrategy::uniform);

  std::vector<std::vector<ScoredDoc>> pools(scorers.size());
  for (size_t s = 0; s < scorers.size(); ++s) {
    pools[s].reserve(corpus.target.size());
    for (size_t i = 0; i < corpus.target.size(); ++i)
      pools[s].push_back({corpus.target[i].id, theta[s][i],
                          corpus.target[i].token_count});
  }
  report.selection = select(plan, pools);
  if (writing) {
    atomic_write_file(out_path("selection_manifest.json"),
                      selection_manifest_json(report.selection, cfg.config_hash()));
    write_corpus(out_path("selected.jsonl"),
                 export_selection(report.selection, corpus.target));
  }

  // Baselines at the same total budget.
  std::vector<ScoredDoc> pc1_pool = pools[0];
  ThresholdResult pc1 = compute_threshold(pc1_pool, report.total_budget);

  std::vector<ScoredDoc> avg_pool;
  avg_pool.reserve(corpus.target.size());
  for (size_t i = 0; i < corpus.target.size(); ++i) {
    double acc = 0.0;
    for (size_t s = 0; s < scorers.size(); ++s) acc += theta[s][i];
    avg_pool.push_back({corpus.target[i].id,
                        acc / static_cast<double>(scorers.size()),
                        corpus.target[i].token_count});
  }
  ThresholdResult avg = compute_threshold(avg_pool, report.total_budget);

  // Diversity comparison on post-processed embeddings.
  EmbeddingSet all_emb = embedding_set_from_records(corpus.target_embeddings);
  std::map<std::string, size_t> row_by_id;
  for (size_t i = 0; i < all_emb.ids.size(); ++i) row_by_id[all_emb.ids[i]] = i;

  report.odis_union =
      distance_summary("odis_union", report.selection.union_ids, row_by_id,
                       all_emb.vectors, target_tokens, cfg);
  report.pc1_top = distance_summary("pc1_top", pc1.selected_ids, row_by_id,
                                    all_emb.vectors, target_tokens, cfg);
  report.avg_top = distance_summary("avg_top", avg.selected_ids, row_by_id,
                                    all_emb.vectors, target_tokens, cfg);

  if (writing) {
    fs::create_directories(fs::path(out_dir) / "report");
    atomic_write_file(out_path("report/dimension_correlations.csv"),
                      correlation_to_csv(dimension_correlations(corpus.reference_scores)));
    atomic_write_file(out_path("report/structure_loadings.csv"),
                      correlation_to_csv(structure_loadings(model, corpus.reference_scores)));

    std::vector<PcScoreVector> pc_rows(corpus.target.size());
    for (size_t i = 0; i < corpus.target.size(); ++i) {
      pc_rows[i].doc_id = corpus.target[i].id;
      for (size_t s = 0; s < scorers.size(); ++s)
        pc_rows[i].values.push_back(theta[s][i]);
    }
    std::map<std::string, std::string> domains;
    for (const auto& d : corpus.target)
      domains[d.id] = d.domain_tag.value_or("unknown");
    atomic_write_file(out_path("report/pc_score_histograms.csv"),
                      score_distribution_to_csv(
                          score_distribution_report(pc_rows, domains)));

    for (const auto* s : {&report.odis_union, &report.pc1_top, &report.avg_top})
      atomic_write_file(out_path("report/pairwise_distances_" + s->name + ".json"),
                        distance_stats_to_json(s->stats));

    atomic_write_file(out_path("synth_report.json"), synth_report_to_json(report));
  }
  return report;
}

std::string synth_report_to_json(const SynthEvalReport& r) {
  json j;
  j["format_version"] = 1;
  j["config_hash"] = r.config.config_hash();
  j["seed"] = r.config.seed;
  j["n_target"] = r.config.n_target;
  j["n_reference"] = r.config.n_reference;
  j["k"] = r.model.k;
  j["active_pcs"] = r.active_pcs;
  j["eigenvalues"] = r.model.eigenvalues;
  j["explained_variance_k"] = r.model.explained_variance_ratio(r.model.k);
  j["total_budget_tokens"] = r.total_budget;
  j["budgets"] = r.selection.budgets;
  j["overlap_ratio_tokens"] = r.selection.overlap_ratio_tokens;
  j["overlap_ratio_docs"] = r.selection.overlap_ratio_docs;
  j["union_doc_count"] = r.selection.union_ids.size();
  j["union_token_total"] = r.selection.union_token_total;
  j["decorrelation_max_offdiag_rel"] = r.decorrelation_max_offdiag_rel;
  j["decorrelation_max_pearson"] = r.decorrelation_max_pearson;
  json metrics = json::array();
  for (const auto& m : r.holdout_metrics) metrics.push_back(metrics_json(m));
  j["holdout_metrics"] = metrics;
  j["target_spearman_true"] = r.target_spearman_true;
  j["distance_odis_union"] = summary_json(r.odis_union);
  j["distance_pc1_top"] = summary_json(r.pc1_top);
  j["distance_avg_top"] = summary_json(r.avg_top);
  return j.dump(2) + "\n";
}

}  // namespace odis
