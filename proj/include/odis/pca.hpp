#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odis/linalg.hpp"
#include "odis/types.hpp"

namespace odis {

struct RescaleRange {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // spread below 1e-9; excluded from selection
};

struct PcaModel {
  std::vector<double> mu;            // per-dimension mean
  std::vector<double> sigma;         // per-dimension stddev; 1s unless standardized
  std::vector<double> eigenvalues;   // length m, non-increasing
  Mat eigenvectors;                  // m x m, columns v_1..v_m
  int k = 0;                         // retained components
  double tau = 0.0;                  // explained-variance threshold used (0 if --k)
  bool standardized = false;
  std::vector<RescaleRange> rescale; // length k once fitted

  size_t m() const { return mu.size(); }
  double explained_variance_ratio(int upto) const;
};

struct PcScoreVector {
  std::string doc_id;
  std::vector<double> values;  // length model.k
};

// mu is the exact per-column arithmetic mean; output columns have zero mean
// up to accumulation rounding. Throws InsufficientDataError when N < 2.
void center(const Mat& x, std::vector<double>& mu, Mat& centered);

// Smallest K whose cumulative explained-variance ratio reaches tau.
// Negative inputs are clamped to zero; an all-zero spectrum throws
// DegenerateSpectrumError.
int choose_k(std::span<const double> eigenvalues, double tau);

struct PcaFitOptions {
  double tau = 0.9;
  std::optional<int> k_override;  // wins over tau when set
  bool standardize = false;
};

// Full covariance-PCA fit: center, covariance, Jacobi eigendecomposition,
// truncation. Rescale ranges are fitted separately from reference
// projections. Eigenvalues more negative than -1e-10 * trace indicate a
// broken covariance and throw; tinier negatives are clamped to zero.
PcaModel fit_pca(const ScoreMatrix& scores, const PcaFitOptions& opts);

// Raw projection beta = W_K^T (alpha - mu) (with sigma scaling when the
// model was standardized).
std::vector<double> project_raw(const PcaModel& model,
                                std::span<const double> alpha);

// Affine [lo,hi] -> [0,5] per component, clipped. Degenerate components map
// to the 2.5 midpoint.
std::vector<double> project_rescaled(const PcaModel& model,
                                     std::span<const double> alpha);

PcScoreVector project(const PcaModel& model, const ScoreVector& scores,
                      bool rescaled);

// Raw projections of every row; rows align with the input matrix.
Mat project_rows_raw(const PcaModel& model, const ScoreMatrix& scores);

// 0.5th/99.5th percentile range of one component's reference projections.
// Throws DegeneratePcError when the spread is below 1e-9.
RescaleRange fit_rescale_range(std::vector<double> component_scores);

// Fits ranges for all K components from reference projections; degenerate
// components are flagged instead of throwing so selection can skip them.
void fit_rescale(PcaModel& model, const Mat& reference_raw_projections);

std::string pca_model_to_json(const PcaModel& model);
PcaModel pca_model_from_json(const std::string& text);

void save_pca_model(const std::string& path, const PcaModel& model);
PcaModel load_pca_model(const std::string& path);

// Score matrix rows as a dense N x m matrix (validates every row).
Mat score_matrix_dense(const ScoreMatrix& scores);

}  // namespace odis
