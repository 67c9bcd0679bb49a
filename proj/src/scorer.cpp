#include "odis/scorer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "odis/jsonl.hpp"
#include "odis/linalg.hpp"

namespace odis {

using nlohmann::json;

double SurrogateScorer::predict_features(const FeatureVector& f) const {
  double v = f.dot_dense(weights) + bias;
  return std::clamp(v, 0.0, 5.0);
}

double SurrogateScorer::predict_text(std::string_view text) const {
  return predict_features(featurize(text, features));
}

namespace {

// Normal-equation operator (Phi_c^T Phi_c + lambda I) v with implicit
// centering when a bias is fitted.
struct RidgeSystem {
  const std::vector<FeatureVector>& feats;
  std::vector<double> fbar;  // mean feature vector (zeros when no bias)
  double lambda;
  bool centered;
  size_t dim;

  std::vector<double> apply(const std::vector<double>& v) const {
    std::vector<double> out(dim, 0.0);
    double fv = 0.0;
    if (centered) {
      for (size_t i = 0; i < dim; ++i) fv += fbar[i] * v[i];
    }
    double t_sum = 0.0;
    for (const auto& f : feats) {
      double t = f.dot_dense(v) - (centered ? fv : 0.0);
      t_sum += t;
      for (const auto& [idx, val] : f.entries) out[idx] += val * t;
    }
    if (centered) {
      for (size_t i = 0; i < dim; ++i) out[i] -= fbar[i] * t_sum;
    }
    if (lambda != 0.0) {
      for (size_t i = 0; i < dim; ++i) out[i] += lambda * v[i];
    }
    return out;
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Standard CG; the system matrix is symmetric positive semidefinite and the
// right-hand side lies in its range, so iterates stay well defined.
std::vector<double> conjugate_gradient(const RidgeSystem& sys,
                                       const std::vector<double>& rhs,
                                       double tol, int max_iters) {
  std::vector<double> x(sys.dim, 0.0);
  std::vector<double> r = rhs;
  double rhs_norm = std::sqrt(dot(rhs, rhs));
  if (rhs_norm == 0.0) return x;
  double stop = tol * std::max(1.0, rhs_norm);

  std::vector<double> p = r;
  double rr = dot(r, r);
  for (int it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= stop) break;
    std::vector<double> ap = sys.apply(p);
    double pap = dot(p, ap);
    if (pap <= 0.0) break;  // numerical null direction; solution reached
    double alpha = rr / pap;
    for (size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
    for (size_t i = 0; i < r.size(); ++i) r[i] -= alpha * ap[i];
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  return x;
}

}  // namespace

SurrogateScorer fit_scorer(const std::vector<FeatureVector>& feats,
                           const std::vector<double>& targets,
                           const ScorerFitOptions& opts) {
  if (feats.size() != targets.size())
    throw OdisError("fit_scorer: feature/target count mismatch");
  if (feats.size() < 2)
    throw InsufficientDataError("fit_scorer needs at least 2 pairs");
  for (double y : targets)
    if (!std::isfinite(y)) throw OdisError("fit_scorer: non-finite target");

  const size_t dim = opts.features.buckets;
  RidgeSystem sys{feats, {}, opts.lambda, opts.fit_bias, dim};

  double ybar = 0.0;
  if (opts.fit_bias) {
    sys.fbar.assign(dim, 0.0);
    for (const auto& f : feats)
      for (const auto& [idx, val] : f.entries) sys.fbar[idx] += val;
    double inv_n = 1.0 / static_cast<double>(feats.size());
    for (double& v : sys.fbar) v *= inv_n;
    for (double y : targets) ybar += y;
    ybar *= inv_n;
  }

  std::vector<double> rhs(dim, 0.0);
  double t_sum = 0.0;
  for (size_t i = 0; i < feats.size(); ++i) {
    double t = targets[i] - ybar;
    t_sum += t;
    for (const auto& [idx, val] : feats[i].entries) rhs[idx] += val * t;
  }
  if (opts.fit_bias) {
    for (size_t i = 0; i < dim; ++i) rhs[i] -= sys.fbar[i] * t_sum;
  }

  SurrogateScorer s;
  s.pc_index = opts.pc_index;
  s.features = opts.features;
  s.lambda = opts.lambda;
  s.fit_bias = opts.fit_bias;
  s.reference_fingerprint = opts.reference_fingerprint;
  s.weights = conjugate_gradient(sys, rhs, opts.cg_tol, opts.cg_max_iters);
  if (opts.fit_bias) {
    double wf = 0.0;
    for (size_t i = 0; i < dim; ++i) wf += s.weights[i] * sys.fbar[i];
    s.bias = ybar - wf;
  }

  std::vector<double> preds(feats.size());
  for (size_t i = 0; i < feats.size(); ++i)
    preds[i] = s.predict_features(feats[i]);
  s.train_metrics = evaluate_scorer(preds, targets);
  return s;
}

SurrogateScorer fit_scorer_texts(const std::vector<std::string>& texts,
                                 const std::vector<double>& targets,
                                 const ScorerFitOptions& opts) {
  std::vector<FeatureVector> feats(texts.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(texts.size()); ++i)
    feats[static_cast<size_t>(i)] =
        featurize(texts[static_cast<size_t>(i)], opts.features);
  return fit_scorer(feats, targets, opts);
}

std::vector<double> predict_batch_serial(const SurrogateScorer& scorer,
                                         const std::vector<Document>& docs) {
  std::vector<double> out(docs.size());
  for (size_t i = 0; i < docs.size(); ++i)
    out[i] = scorer.predict_text(docs[i].text);
  return out;
}

std::vector<double> predict_batch(const SurrogateScorer& scorer,
                                  const std::vector<Document>& docs) {
  std::vector<double> out(docs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < static_cast<long long>(docs.size()); ++i)
    out[static_cast<size_t>(i)] =
        scorer.predict_text(docs[static_cast<size_t>(i)].text);
  return out;
}

ScorerMetrics evaluate_scorer(const std::vector<double>& predictions,
                              const std::vector<double>& targets) {
  if (predictions.size() != targets.size())
    throw OdisError("evaluate_scorer: length mismatch");
  if (predictions.size() < 2)
    throw InsufficientDataError("evaluate_scorer needs at least 2 pairs");
  ScorerMetrics m;
  m.n = predictions.size();
  double se = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - targets[i];
    se += d * d;
  }
  m.rmse = std::sqrt(se / static_cast<double>(predictions.size()));
  m.pearson_r = pearson(predictions, targets);
  m.spearman_rho = spearman(predictions, targets);
  return m;
}

namespace {

void append_hex_u64(std::string& out, uint64_t bits) {
  static const char* digits = "0123456789abcdef";
  for (int shift = 60; shift >= 0; shift -= 4)
    out.push_back(digits[(bits >> shift) & 0xf]);
}

uint64_t parse_hex_u64(std::string_view hex) {
  uint64_t bits = 0;
  for (char c : hex) {
    bits <<= 4;
    if (c >= '0' && c <= '9') bits |= static_cast<uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') bits |= static_cast<uint64_t>(c - 'a' + 10);
    else throw OdisError("scorer: bad hex digit in weight payload");
  }
  return bits;
}

std::string encode_doubles_hex(const std::vector<double>& v) {
  std::string out;
  out.reserve(v.size() * 16);
  for (double d : v) append_hex_u64(out, std::bit_cast<uint64_t>(d));
  return out;
}

std::vector<double> decode_doubles_hex(std::string_view hex) {
  if (hex.size() % 16 != 0) throw OdisError("scorer: bad weight payload size");
  std::vector<double> out(hex.size() / 16);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = std::bit_cast<double>(parse_hex_u64(hex.substr(i * 16, 16)));
  return out;
}

json metrics_to_json(const ScorerMetrics& m) {
  return {{"rmse", m.rmse},
          {"pearson_r", m.pearson_r},
          {"spearman_rho", m.spearman_rho},
          {"n", m.n}};
}

ScorerMetrics metrics_from_json(const json& j) {
  ScorerMetrics m;
  m.rmse = j.at("rmse").get<double>();
  m.pearson_r = j.at("pearson_r").get<double>();
  m.spearman_rho = j.at("spearman_rho").get<double>();
  m.n = j.at("n").get<size_t>();
  return m;
}

}  // namespace

std::string scorer_to_json(const SurrogateScorer& s) {
  json j;
  j["format_version"] = 1;
  j["pc_index"] = s.pc_index;
  j["lambda"] = s.lambda;
  j["fit_bias"] = s.fit_bias;
  j["buckets"] = s.features.buckets;
  j["ngram_min"] = s.features.ngram_min;
  j["ngram_max"] = s.features.ngram_max;
  j["bias_hex"] = [&] {
    std::string h;
    append_hex_u64(h, std::bit_cast<uint64_t>(s.bias));
    return h;
  }();
  j["train_metrics"] = metrics_to_json(s.train_metrics);
  j["holdout_metrics"] = metrics_to_json(s.holdout_metrics);
  j["reference_fingerprint"] = s.reference_fingerprint;
  j["weights_hex"] = encode_doubles_hex(s.weights);
  return j.dump() + "\n";
}

SurrogateScorer scorer_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format_version").get<int>() != 1)
    throw OdisError("scorer: unsupported format version");
  SurrogateScorer s;
  s.pc_index = j.at("pc_index").get<int>();
  s.lambda = j.at("lambda").get<double>();
  s.fit_bias = j.at("fit_bias").get<bool>();
  s.features.buckets = j.at("buckets").get<uint32_t>();
  s.features.ngram_min = j.at("ngram_min").get<int>();
  s.features.ngram_max = j.at("ngram_max").get<int>();
  s.bias = std::bit_cast<double>(
      parse_hex_u64(j.at("bias_hex").get<std::string>()));
  s.train_metrics = metrics_from_json(j.at("train_metrics"));
  s.holdout_metrics = metrics_from_json(j.at("holdout_metrics"));
  s.reference_fingerprint = j.at("reference_fingerprint").get<uint64_t>();
  s.weights = decode_doubles_hex(j.at("weights_hex").get<std::string>());
  if (s.weights.size() != s.features.buckets)
    throw OdisError("scorer: weight array size != bucket count");
  return s;
}

void save_scorer(const std::string& path, const SurrogateScorer& s) {
  atomic_write_file(path, scorer_to_json(s));
}

SurrogateScorer load_scorer(const std::string& path) {
  return scorer_from_json(read_file(path));
}

}  // namespace odis
