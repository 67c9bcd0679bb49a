#include "odis/pca.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "odis/jsonl.hpp"

namespace odis {

using nlohmann::json;

double PcaModel::explained_variance_ratio(int upto) const {
  double total = 0.0, head = 0.0;
  for (size_t i = 0; i < eigenvalues.size(); ++i) {
    double v = std::max(0.0, eigenvalues[i]);
    total += v;
    if (static_cast<int>(i) < upto) head += v;
  }
  return total > 0.0 ? head / total : 0.0;
}

Mat score_matrix_dense(const ScoreMatrix& scores) {
  const size_t n = scores.n(), m = scores.m();
  Mat x(n, m);
  for (size_t i = 0; i < n; ++i) {
    validate_score_vector(scores.rows[i], scores.dims);
    for (size_t j = 0; j < m; ++j) x(i, j) = scores.rows[i].values[j];
  }
  return x;
}

void center(const Mat& x, std::vector<double>& mu, Mat& centered) {
  if (x.rows < 2) throw InsufficientDataError("center needs N >= 2 rows");
  const size_t n = x.rows, m = x.cols;
  mu.assign(m, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) mu[j] += x(i, j);
  for (size_t j = 0; j < m; ++j) mu[j] /= static_cast<double>(n);

  centered = Mat(n, m);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) centered(i, j) = x(i, j) - mu[j];
}

int choose_k(std::span<const double> eigenvalues, double tau) {
  if (tau <= 0.0 || tau > 1.0)
    throw OdisError("choose_k: tau must lie in (0, 1]");
  double total = 0.0;
  for (double v : eigenvalues) total += std::max(0.0, v);
  if (total <= 0.0)
    throw DegenerateSpectrumError("choose_k: all eigenvalues are zero");
  double cum = 0.0;
  for (size_t k = 0; k < eigenvalues.size(); ++k) {
    cum += std::max(0.0, eigenvalues[k]);
    if (cum / total >= tau) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(eigenvalues.size());
}

PcaModel fit_pca(const ScoreMatrix& scores, const PcaFitOptions& opts) {
  if (scores.n() < 2) throw InsufficientDataError("fit_pca needs N >= 2 rows");
  Mat x = score_matrix_dense(scores);

  PcaModel model;
  Mat centered;
  center(x, model.mu, centered);

  const size_t m = x.cols;
  model.sigma.assign(m, 1.0);
  model.standardized = opts.standardize;
  if (opts.standardize) {
    const double denom = static_cast<double>(x.rows - 1);
    for (size_t j = 0; j < m; ++j) {
      double ss = 0.0;
      for (size_t i = 0; i < x.rows; ++i) ss += centered(i, j) * centered(i, j);
      double sd = std::sqrt(ss / denom);
      model.sigma[j] = sd > 0.0 ? sd : 1.0;
    }
    for (size_t i = 0; i < x.rows; ++i)
      for (size_t j = 0; j < m; ++j) centered(i, j) /= model.sigma[j];
  }

  Mat sigma_mat = covariance_blocked(centered);
  EigenDecomposition eig = jacobi_eigen(sigma_mat);

  double trace = 0.0;
  for (size_t j = 0; j < m; ++j) trace += sigma_mat(j, j);
  for (double& v : eig.eigenvalues) {
    if (v < 0.0) {
      if (v < -1e-10 * trace)
        throw OdisError("fit_pca: covariance produced a significantly negative eigenvalue");
      v = 0.0;
    }
  }

  model.eigenvalues = std::move(eig.eigenvalues);
  model.eigenvectors = std::move(eig.eigenvectors);
  model.tau = opts.tau;
  if (opts.k_override) {
    int k = *opts.k_override;
    if (k < 1 || k > static_cast<int>(m))
      throw OdisError("fit_pca: k override outside [1, m]");
    model.k = k;
    model.tau = 0.0;
  } else {
    model.k = choose_k(model.eigenvalues, opts.tau);
  }
  return model;
}

std::vector<double> project_raw(const PcaModel& model,
                                std::span<const double> alpha) {
  const size_t m = model.m();
  if (alpha.size() != m)
    throw DimensionMismatchError("project: score vector has " +
                                 std::to_string(alpha.size()) +
                                 " values, model expects " + std::to_string(m));
  std::vector<double> d(m);
  for (size_t j = 0; j < m; ++j)
    d[j] = (alpha[j] - model.mu[j]) / model.sigma[j];
  std::vector<double> beta(static_cast<size_t>(model.k), 0.0);
  for (int k = 0; k < model.k; ++k) {
    double acc = 0.0;
    for (size_t j = 0; j < m; ++j)
      acc += model.eigenvectors(j, static_cast<size_t>(k)) * d[j];
    beta[static_cast<size_t>(k)] = acc;
  }
  return beta;
}

namespace {

double rescale_value(const RescaleRange& r, double v) {
  if (r.degenerate) return 2.5;
  double scaled = 5.0 * (v - r.lo) / (r.hi - r.lo);
  return std::clamp(scaled, 0.0, 5.0);
}

}  // namespace

std::vector<double> project_rescaled(const PcaModel& model,
                                     std::span<const double> alpha) {
  if (model.rescale.size() != static_cast<size_t>(model.k))
    throw OdisError("project_rescaled: model has no fitted rescale ranges");
  std::vector<double> beta = project_raw(model, alpha);
  for (size_t k = 0; k < beta.size(); ++k)
    beta[k] = rescale_value(model.rescale[k], beta[k]);
  return beta;
}

PcScoreVector project(const PcaModel& model, const ScoreVector& scores,
                      bool rescaled) {
  PcScoreVector out;
  out.doc_id = scores.doc_id;
  out.values = rescaled ? project_rescaled(model, scores.values)
                        : project_raw(model, scores.values);
  return out;
}

Mat project_rows_raw(const PcaModel& model, const ScoreMatrix& scores) {
  const size_t n = scores.n();
  Mat out(n, static_cast<size_t>(model.k));
  for (size_t i = 0; i < n; ++i) {
    auto beta = project_raw(model, scores.rows[i].values);
    for (size_t k = 0; k < beta.size(); ++k) out(i, k) = beta[k];
  }
  return out;
}

RescaleRange fit_rescale_range(std::vector<double> component_scores) {
  if (component_scores.empty())
    throw InsufficientDataError("fit_rescale: empty reference projections");
  std::sort(component_scores.begin(), component_scores.end());
  RescaleRange r;
  r.lo = percentile_sorted(component_scores, 0.5);
  r.hi = percentile_sorted(component_scores, 99.5);
  if (r.hi - r.lo < 1e-9)
    throw DegeneratePcError("fit_rescale: component spread below 1e-9");
  return r;
}

void fit_rescale(PcaModel& model, const Mat& reference_raw_projections) {
  if (reference_raw_projections.cols != static_cast<size_t>(model.k))
    throw DimensionMismatchError("fit_rescale: projection width != model.k");
  model.rescale.clear();
  for (int k = 0; k < model.k; ++k) {
    std::vector<double> col(reference_raw_projections.rows);
    for (size_t i = 0; i < col.size(); ++i)
      col[i] = reference_raw_projections(i, static_cast<size_t>(k));
    try {
      model.rescale.push_back(fit_rescale_range(std::move(col)));
    } catch (const DegeneratePcError&) {
      RescaleRange r;
      r.degenerate = true;
      model.rescale.push_back(r);
    }
  }
}

std::string pca_model_to_json(const PcaModel& model) {
  json j;
  j["format_version"] = 1;
  j["mu"] = model.mu;
  j["sigma"] = model.sigma;
  j["eigenvalues"] = model.eigenvalues;
  j["eigenvectors"] = model.eigenvectors.a;  // row-major m x m
  j["m"] = model.m();
  j["k"] = model.k;
  j["tau"] = model.tau;
  j["standardized"] = model.standardized;
  json ranges = json::array();
  for (const auto& r : model.rescale)
    ranges.push_back({r.lo, r.hi, r.degenerate ? 1 : 0});
  j["rescale"] = ranges;
  return j.dump(2) + "\n";
}

PcaModel pca_model_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format_version").get<int>() != 1)
    throw OdisError("pca model: unsupported format version");
  PcaModel model;
  model.mu = j.at("mu").get<std::vector<double>>();
  model.sigma = j.at("sigma").get<std::vector<double>>();
  model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  size_t m = j.at("m").get<size_t>();
  model.eigenvectors = Mat(m, m);
  model.eigenvectors.a = j.at("eigenvectors").get<std::vector<double>>();
  if (model.eigenvectors.a.size() != m * m)
    throw OdisError("pca model: eigenvector payload has wrong size");
  model.k = j.at("k").get<int>();
  model.tau = j.at("tau").get<double>();
  model.standardized = j.at("standardized").get<bool>();
  for (const auto& r : j.at("rescale")) {
    RescaleRange range;
    range.lo = r.at(0).get<double>();
    range.hi = r.at(1).get<double>();
    range.degenerate = r.at(2).get<int>() != 0;
    model.rescale.push_back(range);
  }
  return model;
}

void save_pca_model(const std::string& path, const PcaModel& model) {
  atomic_write_file(path, pca_model_to_json(model));
}

PcaModel load_pca_model(const std::string& path) {
  return pca_model_from_json(read_file(path));
}

}  // namespace odis
