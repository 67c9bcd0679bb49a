#include "odis/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "odis/jsonl.hpp"
#include "odis/rng.hpp"

namespace odis {

using nlohmann::json;

namespace {

std::vector<double> column(const Mat& m, size_t j) {
  std::vector<double> out(m.rows);
  for (size_t i = 0; i < m.rows; ++i) out[i] = m(i, j);
  return out;
}

double sample_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Constant up to accumulation noise; the mean magnitude sets the scale.
bool near_constant(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return sample_std(v) <= 1e-12 * std::max(1.0, std::fabs(mean));
}

}  // namespace

CorrelationMatrix dimension_correlations(const ScoreMatrix& matrix) {
  if (matrix.n() < 2)
    throw InsufficientDataError("dimension_correlations needs N >= 2");
  Mat x = score_matrix_dense(matrix);
  const size_t m = x.cols;

  CorrelationMatrix cm;
  for (const auto& d : matrix.dims) cm.row_labels.push_back(d.name);
  cm.col_labels = cm.row_labels;
  cm.values = Mat(m, m, 0.0);
  cm.row_degenerate.assign(m, false);
  cm.col_degenerate.assign(m, false);

  std::vector<std::vector<double>> cols(m);
  for (size_t j = 0; j < m; ++j) cols[j] = column(x, j);

  for (size_t j = 0; j < m; ++j) {
    bool deg = near_constant(cols[j]);
    cm.row_degenerate[j] = deg;
    cm.col_degenerate[j] = deg;
  }
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = a; b < m; ++b) {
      double r = 0.0;
      if (!cm.row_degenerate[a] && !cm.row_degenerate[b]) {
        r = (a == b) ? 1.0 : pearson(cols[a], cols[b]);
      }
      cm.values(a, b) = r;
      cm.values(b, a) = r;
    }
  }
  return cm;
}

CorrelationMatrix structure_loadings(const PcaModel& model,
                                     const ScoreMatrix& matrix) {
  if (matrix.n() < 2)
    throw InsufficientDataError("structure_loadings needs N >= 2");
  if (matrix.m() != model.m())
    throw DimensionMismatchError("structure_loadings: dimension count mismatch");
  Mat x = score_matrix_dense(matrix);
  Mat beta = project_rows_raw(model, matrix);
  const size_t m = x.cols;
  const size_t k = beta.cols;

  CorrelationMatrix cm;
  for (const auto& d : matrix.dims) cm.row_labels.push_back(d.name);
  for (size_t c = 0; c < k; ++c) cm.col_labels.push_back("pc" + std::to_string(c + 1));
  cm.values = Mat(m, k, 0.0);
  cm.row_degenerate.assign(m, false);
  cm.col_degenerate.assign(k, false);

  std::vector<std::vector<double>> dim_cols(m), pc_cols(k);
  for (size_t j = 0; j < m; ++j) dim_cols[j] = column(x, j);
  for (size_t c = 0; c < k; ++c) pc_cols[c] = column(beta, c);

  for (size_t j = 0; j < m; ++j) cm.row_degenerate[j] = near_constant(dim_cols[j]);
  // A component is degenerate when its spread is noise-level relative to the
  // widest component.
  double widest = 0.0;
  for (size_t c = 0; c < k; ++c) widest = std::max(widest, sample_std(pc_cols[c]));
  for (size_t c = 0; c < k; ++c)
    cm.col_degenerate[c] =
        sample_std(pc_cols[c]) <= 1e-9 * std::max(widest, 1e-300);
  for (size_t j = 0; j < m; ++j)
    for (size_t c = 0; c < k; ++c) {
      if (cm.row_degenerate[j] || cm.col_degenerate[c]) continue;
      cm.values(j, c) = pearson(dim_cols[j], pc_cols[c]);
    }
  return cm;
}

EmbeddingSet embedding_set_from_records(const std::vector<EmbeddingRecord>& recs) {
  EmbeddingSet set;
  if (recs.empty()) return set;
  size_t d = recs[0].vector.size();
  set.vectors = Mat(recs.size(), d);
  for (size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].vector.size() != d)
      throw OdisError("embedding '" + recs[i].id + "' has dimension " +
                      std::to_string(recs[i].vector.size()) + ", expected " +
                      std::to_string(d));
    set.ids.push_back(recs[i].id);
    for (size_t j = 0; j < d; ++j) set.vectors(i, j) = recs[i].vector[j];
  }
  return set;
}

namespace {

void normalize_rows_or_throw(Mat& m, const std::vector<std::string>& ids,
                             const char* what) {
  std::vector<std::string> bad;
  for (size_t i = 0; i < m.rows; ++i) {
    double n2 = 0.0;
    for (size_t j = 0; j < m.cols; ++j) n2 += m(i, j) * m(i, j);
    if (n2 < 1e-24) {
      bad.push_back(ids[i]);
      continue;
    }
    double inv = 1.0 / std::sqrt(n2);
    for (size_t j = 0; j < m.cols; ++j) m(i, j) *= inv;
  }
  if (!bad.empty()) {
    std::string list;
    for (size_t i = 0; i < bad.size() && i < 10; ++i) {
      if (i) list += ", ";
      list += bad[i];
    }
    throw OdisError(std::string(what) + ": zero-norm vectors for ids: " + list);
  }
}

}  // namespace

EmbeddingSet postprocess_embeddings(const EmbeddingSet& raw, int c) {
  const size_t d = raw.vectors.cols;
  if (c < 0 || static_cast<size_t>(c) >= d)
    throw OdisError("postprocess_embeddings: need 0 <= c < d");
  if (d > 2048)
    throw OdisError("postprocess_embeddings: dimension too large for the dense eigensolver");

  EmbeddingSet out;
  out.ids = raw.ids;
  out.vectors = raw.vectors;
  normalize_rows_or_throw(out.vectors, out.ids, "postprocess_embeddings");
  out.normalized = true;
  out.components_removed = c;
  if (c == 0) return out;

  // PCA over the normalized cloud; top-c principal directions get removed.
  std::vector<double> mean;
  Mat centered;
  center(out.vectors, mean, centered);
  Mat cov = covariance_blocked(centered);
  EigenDecomposition eig = jacobi_eigen(cov);

  out.removed_components = Mat(static_cast<size_t>(c), d);
  for (int comp = 0; comp < c; ++comp)
    for (size_t j = 0; j < d; ++j)
      out.removed_components(static_cast<size_t>(comp), j) =
          eig.eigenvectors(j, static_cast<size_t>(comp));

  for (size_t i = 0; i < out.vectors.rows; ++i) {
    for (int comp = 0; comp < c; ++comp) {
      double proj = 0.0;
      for (size_t j = 0; j < d; ++j)
        proj += out.vectors(i, j) * out.removed_components(static_cast<size_t>(comp), j);
      for (size_t j = 0; j < d; ++j)
        out.vectors(i, j) -= proj * out.removed_components(static_cast<size_t>(comp), j);
    }
  }
  normalize_rows_or_throw(out.vectors, out.ids, "postprocess_embeddings (after removal)");
  return out;
}

std::vector<double> pairwise_cosine_distances_serial(const Mat& rows) {
  const size_t n = rows.rows;
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) {
    double n2 = 0.0;
    for (size_t j = 0; j < rows.cols; ++j) n2 += rows(i, j) * rows(i, j);
    if (n2 <= 0.0)
      throw OdisError("pairwise distances: zero-norm vector at row " + std::to_string(i));
    norms[i] = std::sqrt(n2);
  }
  std::vector<double> out(n * (n - 1) / 2);
  size_t slot = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (size_t t = 0; t < rows.cols; ++t) dot += rows(i, t) * rows(j, t);
      out[slot++] = 1.0 - dot / (norms[i] * norms[j]);
    }
  }
  return out;
}

std::vector<double> pairwise_cosine_distances(const Mat& rows) {
  const size_t n = rows.rows;
  if (n < 2) return {};
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) {
    double n2 = 0.0;
    for (size_t j = 0; j < rows.cols; ++j) n2 += rows(i, j) * rows(i, j);
    if (n2 <= 0.0)
      throw OdisError("pairwise distances: zero-norm vector at row " + std::to_string(i));
    norms[i] = std::sqrt(n2);
  }
  std::vector<double> out(n * (n - 1) / 2);
  // Row i owns slots [offset(i), offset(i+1)); identical layout to the
  // serial sweep, so thread count cannot change the result.
#pragma omp parallel for schedule(dynamic, 8)
  for (long long li = 0; li < static_cast<long long>(n); ++li) {
    size_t i = static_cast<size_t>(li);
    size_t slot = i * (2 * n - i - 1) / 2;
    for (size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (size_t t = 0; t < rows.cols; ++t) dot += rows(i, t) * rows(j, t);
      out[slot++] = 1.0 - dot / (norms[i] * norms[j]);
    }
  }
  return out;
}

namespace {

DistanceStats stats_from_distances(std::vector<double> dist, size_t sample) {
  DistanceStats s;
  s.sample_size = sample;
  s.pair_count = dist.size();
  if (dist.empty()) return s;
  double sum = 0.0;
  for (double v : dist) sum += v;
  s.mean = sum / static_cast<double>(dist.size());
  std::sort(dist.begin(), dist.end());
  s.min = dist.front();
  s.max = dist.back();
  for (int p : {1, 5, 25, 50, 75, 95, 99})
    s.percentiles[p] = percentile_sorted(dist, static_cast<double>(p));
  for (double v : dist) {
    int bin = static_cast<int>(v / 2.0 * 50.0);
    bin = std::clamp(bin, 0, 49);
    s.histogram[static_cast<size_t>(bin)] += 1;
  }
  return s;
}

Mat sampled_rows(const EmbeddingSet& emb, size_t sample_n, uint64_t seed) {
  const size_t n = emb.vectors.rows;
  if (n < 2)
    throw InsufficientDataError("pairwise_distance_stats needs >= 2 vectors");
  if (sample_n < 2)
    throw OdisError("pairwise_distance_stats: sample_n must be >= 2");
  size_t take = std::min(sample_n, n);
  Rng rng(seed);
  std::vector<size_t> picked = rng.sample_indices(n, take);
  // Canonical order by id: the pair sweep then ignores input permutation.
  std::sort(picked.begin(), picked.end(),
            [&](size_t a, size_t b) { return emb.ids[a] < emb.ids[b]; });
  Mat rows(take, emb.vectors.cols);
  for (size_t r = 0; r < take; ++r)
    for (size_t j = 0; j < emb.vectors.cols; ++j)
      rows(r, j) = emb.vectors(picked[r], j);
  return rows;
}

}  // namespace

DistanceStats pairwise_distance_stats(const EmbeddingSet& emb, size_t sample_n,
                                      uint64_t seed) {
  Mat rows = sampled_rows(emb, sample_n, seed);
  return stats_from_distances(pairwise_cosine_distances(rows), rows.rows);
}

DistanceStats pairwise_distance_stats_serial(const EmbeddingSet& emb,
                                             size_t sample_n, uint64_t seed) {
  Mat rows = sampled_rows(emb, sample_n, seed);
  return stats_from_distances(pairwise_cosine_distances_serial(rows), rows.rows);
}

ScoreDistributionReport score_distribution_report(
    const std::vector<PcScoreVector>& pc_scores,
    const std::map<std::string, std::string>& domain_by_id) {
  ScoreDistributionReport report;
  for (const auto& row : pc_scores) {
    report.num_pcs = std::max(report.num_pcs, static_cast<int>(row.values.size()));
  }
  for (const auto& row : pc_scores) {
    auto it = domain_by_id.find(row.doc_id);
    const std::string domain = it == domain_by_id.end() ? "unknown" : it->second;
    auto& hists = report.histograms[domain];
    if (hists.empty())
      hists.assign(static_cast<size_t>(report.num_pcs), std::array<int64_t, 50>{});
    for (size_t k = 0; k < row.values.size(); ++k) {
      int bin = static_cast<int>(row.values[k] / 5.0 * 50.0);
      bin = std::clamp(bin, 0, 49);
      hists[k][static_cast<size_t>(bin)] += 1;
    }
    report.total_rows += 1;
  }
  return report;
}

std::string correlation_to_csv(const CorrelationMatrix& cm) {
  std::ostringstream out;
  out << "label";
  for (const auto& c : cm.col_labels) out << "," << c;
  out << ",degenerate\n";
  out.precision(17);
  for (size_t r = 0; r < cm.row_labels.size(); ++r) {
    out << cm.row_labels[r];
    for (size_t c = 0; c < cm.col_labels.size(); ++c) out << "," << cm.values(r, c);
    out << "," << (cm.row_degenerate[r] ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string distance_stats_to_json(const DistanceStats& s) {
  json j;
  j["sample_size"] = s.sample_size;
  j["pair_count"] = s.pair_count;
  j["mean"] = s.mean;
  j["min"] = s.min;
  j["max"] = s.max;
  json pct;
  for (const auto& [p, v] : s.percentiles) pct["p" + std::to_string(p)] = v;
  j["percentiles"] = pct;
  j["histogram_bins"] = 50;
  j["histogram_range"] = {0.0, 2.0};
  j["histogram"] = s.histogram;
  return j.dump(2) + "\n";
}

std::string distance_histogram_to_csv(const DistanceStats& s) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count\n";
  for (size_t b = 0; b < s.histogram.size(); ++b) {
    out << (2.0 * static_cast<double>(b) / 50.0) << ","
        << (2.0 * static_cast<double>(b + 1) / 50.0) << "," << s.histogram[b]
        << "\n";
  }
  return out.str();
}

std::string score_distribution_to_csv(const ScoreDistributionReport& r) {
  std::ostringstream out;
  out << "domain,pc,bin_lo,bin_hi,count\n";
  for (const auto& [domain, hists] : r.histograms) {
    for (size_t k = 0; k < hists.size(); ++k) {
      for (size_t b = 0; b < hists[k].size(); ++b) {
        out << domain << "," << (k + 1) << ","
            << (5.0 * static_cast<double>(b) / 50.0) << ","
            << (5.0 * static_cast<double>(b + 1) / 50.0) << "," << hists[k][b]
            << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace odis
