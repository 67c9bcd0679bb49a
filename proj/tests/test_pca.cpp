#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "odis/jsonl.hpp"
#include "odis/pca.hpp"
#include "odis/rng.hpp"

using namespace odis;

namespace {

ScoreMatrix tiny_matrix() {
  // X = [[1,2],[3,4],[5,6]] over two synthetic dimensions.
  ScoreMatrix m;
  m.dims = {{"d1", DimensionCategory::language_quality, 10, "D1:"},
            {"d2", DimensionCategory::language_quality, 10, "D2:"}};
  m.rows = {{"a", {1, 2}}, {"b", {3, 4}}, {"c", {5, 6}}};
  return m;
}

Mat random_symmetric(Rng& rng, size_t n) {
  Mat m(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i; j < n; ++j) {
      double v = rng.uniform(-1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

double max_residual(const Mat& sym, const EigenDecomposition& eig) {
  double worst = 0.0;
  const size_t n = sym.rows;
  for (size_t k = 0; k < n; ++k) {
    for (size_t r = 0; r < n; ++r) {
      double av = 0.0;
      for (size_t c = 0; c < n; ++c) av += sym(r, c) * eig.eigenvectors(c, k);
      worst = std::max(std::fabs(av - eig.eigenvalues[k] * eig.eigenvectors(r, k)),
                       worst);
    }
  }
  return worst;
}

double max_orthonormality_error(const Mat& v) {
  double worst = 0.0;
  for (size_t a = 0; a < v.cols; ++a)
    for (size_t b = 0; b < v.cols; ++b) {
      double dot = 0.0;
      for (size_t r = 0; r < v.rows; ++r) dot += v(r, a) * v(r, b);
      worst = std::max(worst, std::fabs(dot - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace

TEST_CASE("center: hand example, duplicated rows, and large-N mean bound") {
  SUBCASE("hand example") {
    Mat x(3, 2);
    x.a = {1, 2, 3, 4, 5, 6};
    std::vector<double> mu;
    Mat c;
    center(x, mu, c);
    CHECK(mu[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(mu[1] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(c.a == std::vector<double>{-2, -2, 0, 0, 2, 2});
  }
  SUBCASE("duplicated row centers to zero") {
    Mat x(5, 3);
    for (size_t i = 0; i < 5; ++i)
      for (size_t j = 0; j < 3; ++j) x(i, j) = 1.5 * static_cast<double>(j) + 2.0;
    std::vector<double> mu;
    Mat c;
    center(x, mu, c);
    for (double v : c.a) CHECK(std::fabs(v) == 0.0);
  }
  SUBCASE("N < 2 raises") {
    Mat x(1, 2);
    std::vector<double> mu;
    Mat c;
    CHECK_THROWS_AS(center(x, mu, c), InsufficientDataError);
  }
  SUBCASE("460k-row column means vanish against direct-summation oracle") {
    Rng rng(99);
    const size_t n = 460000, m = 4;
    Mat x(n, m);
    for (double& v : x.a) v = rng.uniform(0.0, 5.0);
    std::vector<double> mu;
    Mat c;
    center(x, mu, c);
    for (size_t j = 0; j < m; ++j) {
      long double acc = 0.0;
      for (size_t i = 0; i < n; ++i) acc += c(i, j);
      double mean = static_cast<double>(acc / n);
      CHECK(std::fabs(mean) <= 1e-12 * 5.0);
    }
  }
}

TEST_CASE("covariance: hand result, zeros, and sampling identity") {
  SUBCASE("hand result with N-1 denominator") {
    Mat c(3, 2);
    c.a = {-2, -2, 0, 0, 2, 2};
    Mat cov = covariance_serial(c);
    CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(cov(0, 1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(cov(1, 0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(cov(1, 1) == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("all-zero input gives the zero matrix") {
    Mat c(4, 3, 0.0);
    Mat cov = covariance_blocked(c);
    for (double v : cov.a) CHECK(v == 0.0);
  }
  SUBCASE("independent unit-variance columns approach identity") {
    Rng rng(7);
    const size_t n = 20000;
    Mat c(n, 3);
    for (double& v : c.a) v = rng.normal();
    std::vector<double> mu;
    Mat centered;
    center(c, mu, centered);
    Mat cov = covariance_blocked(centered);
    double tol = 5.0 / std::sqrt(static_cast<double>(n));
    for (size_t i = 0; i < 3; ++i)
      for (size_t j = 0; j < 3; ++j)
        CHECK(std::fabs(cov(i, j) - (i == j ? 1.0 : 0.0)) <= tol);
  }
  SUBCASE("blocked kernel agrees with the serial reference") {
    Rng rng(13);
    Mat c(4097, 11);  // crosses block boundaries
    for (double& v : c.a) v = rng.normal();
    Mat a = covariance_serial(c);
    Mat b = covariance_blocked(c);
    for (size_t i = 0; i < a.a.size(); ++i)
      CHECK(a.a[i] == doctest::Approx(b.a[i]).epsilon(1e-13));
    // blocked kernel is bit-stable across repeated runs
    Mat b2 = covariance_blocked(c);
    CHECK(b.a == b2.a);
  }
}

TEST_CASE("jacobi_eigen: closed forms and residual oracle") {
  SUBCASE("2x2 closed form [[4,4],[4,4]]") {
    Mat s(2, 2);
    s.a = {4, 4, 4, 4};
    EigenDecomposition eig = jacobi_eigen(s);
    CHECK(eig.eigenvalues[0] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(std::fabs(eig.eigenvalues[1]) <= 1e-12);
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(eig.eigenvectors(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(eig.eigenvectors(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
  }
  SUBCASE("identity is a fixed point") {
    Mat s(11, 11, 0.0);
    for (size_t i = 0; i < 11; ++i) s(i, i) = 1.0;
    EigenDecomposition eig = jacobi_eigen(s);
    for (double v : eig.eigenvalues) CHECK(v == doctest::Approx(1.0));
    CHECK(max_orthonormality_error(eig.eigenvectors) <= 1e-9);
  }
  SUBCASE("random 11x11: residual, orthonormality, trace") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      Mat s = random_symmetric(rng, 11);
      EigenDecomposition eig = jacobi_eigen(s);
      double lambda1 = eig.eigenvalues[0];
      CHECK(max_residual(s, eig) <= 1e-8 * std::max(1.0, lambda1));
      CHECK(max_orthonormality_error(eig.eigenvectors) <= 1e-9);
      double trace = 0.0, sum = 0.0;
      for (size_t i = 0; i < 11; ++i) trace += s(i, i);
      for (double v : eig.eigenvalues) sum += v;
      CHECK(std::fabs(trace - sum) <= 1e-8);
      CHECK(std::is_sorted(eig.eigenvalues.rbegin(), eig.eigenvalues.rend()));
    }
  }
  SUBCASE("non-symmetric input rejected") {
    Mat s(2, 2);
    s.a = {1, 2, 3, 4};
    CHECK_THROWS_AS(jacobi_eigen(s), OdisError);
  }
  SUBCASE("sign convention: largest-magnitude entry positive") {
    Rng rng(5);
    Mat s = random_symmetric(rng, 7);
    EigenDecomposition eig = jacobi_eigen(s);
    for (size_t k = 0; k < 7; ++k) {
      double best = 0.0;
      for (size_t r = 0; r < 7; ++r)
        if (std::fabs(eig.eigenvectors(r, k)) > std::fabs(best))
          best = eig.eigenvectors(r, k);
      CHECK(best > 0.0);
    }
  }
}

TEST_CASE("choose_k") {
  CHECK(choose_k(std::vector<double>{8, 0}, 0.9) == 1);
  CHECK(choose_k(std::vector<double>{4, 3, 2, 1}, 0.69) == 2);

  SUBCASE("tau = 1 takes exactly the strictly positive eigenvalues") {
    CHECK(choose_k(std::vector<double>{8, 0}, 1.0) == 1);
    CHECK(choose_k(std::vector<double>{5, 3, 1e-12, 0, 0}, 1.0) == 3);
  }
  SUBCASE("monotone non-decreasing in tau") {
    std::vector<double> evals{5, 2.5, 1.5, 0.7, 0.3};
    int prev = 0;
    for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
      int k = choose_k(evals, std::min(tau, 1.0));
      CHECK(k >= prev);
      prev = k;
    }
  }
  SUBCASE("degenerate spectrum") {
    CHECK_THROWS_AS(choose_k(std::vector<double>{0, 0, 0}, 0.5),
                    DegenerateSpectrumError);
  }
  SUBCASE("tiny negatives clamp to zero") {
    CHECK(choose_k(std::vector<double>{4, 1, -1e-15}, 1.0) == 2);
  }
}

TEST_CASE("fit_pca on the hand fixture and projection identities") {
  ScoreMatrix m = tiny_matrix();
  PcaFitOptions opts;
  opts.k_override = 1;
  PcaModel model = fit_pca(m, opts);

  CHECK(model.mu[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(model.mu[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(model.eigenvalues[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(std::fabs(model.eigenvalues[1]) <= 1e-10);
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(model.eigenvectors(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
  CHECK(model.eigenvectors(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-10));

  SUBCASE("projection of row 1 is -2*sqrt(2)") {
    auto beta = project_raw(model, std::vector<double>{1, 2});
    REQUIRE(beta.size() == 1);
    CHECK(beta[0] == doctest::Approx(-2.0 * std::sqrt(2.0)).epsilon(1e-10));
  }
  SUBCASE("alpha = mu projects to zero") {
    auto beta = project_raw(model, model.mu);
    CHECK(std::fabs(beta[0]) <= 1e-12);
  }
  SUBCASE("K = m reconstructs the input") {
    PcaFitOptions full;
    full.k_override = 2;
    PcaModel fm = fit_pca(m, full);
    std::vector<double> alpha{1.0, 2.0};
    auto beta = project_raw(fm, alpha);
    for (size_t j = 0; j < 2; ++j) {
      double rec = fm.mu[j];
      for (size_t k = 0; k < 2; ++k) rec += fm.eigenvectors(j, k) * beta[k];
      CHECK(rec == doctest::Approx(alpha[j]).epsilon(1e-10));
    }
  }
  SUBCASE("dimension mismatch raises") {
    CHECK_THROWS_AS(project_raw(model, std::vector<double>{1, 2, 3}),
                    DimensionMismatchError);
  }
  SUBCASE("projection is affine in its argument") {
    std::vector<double> a1{1, 2}, a2{5, 4};
    auto b1 = project_raw(model, a1);
    auto b2 = project_raw(model, a2);
    std::vector<double> mid{0.5 * (a1[0] + a2[0]), 0.5 * (a1[1] + a2[1])};
    auto bm = project_raw(model, mid);
    CHECK(bm[0] == doctest::Approx(0.5 * (b1[0] + b2[0])).epsilon(1e-10));
  }
}

TEST_CASE("decorrelation and variance bookkeeping on the bundled fixture") {
  ScoreMatrix matrix;
  matrix.dims = default_dimension_registry();
  matrix.rows = read_scores(std::string(ODIS_DATA_DIR) + "/reference_scores_460.jsonl",
                            matrix.dims.size());
  REQUIRE(matrix.n() == 460);

  PcaFitOptions opts;
  opts.k_override = 4;
  PcaModel model = fit_pca(matrix, opts);
  Mat proj = project_rows_raw(model, matrix);

  std::vector<double> mu;
  Mat centered;
  center(proj, mu, centered);
  Mat cov = covariance_blocked(centered);
  double lambda1 = model.eigenvalues[0];

  for (size_t i = 0; i < cov.rows; ++i)
    for (size_t j = 0; j < cov.cols; ++j) {
      if (i == j) {
        CHECK(std::fabs(cov(i, i) - model.eigenvalues[i]) <= 1e-8 * lambda1);
      } else {
        CHECK(std::fabs(cov(i, j)) <= 1e-8 * lambda1);
      }
    }

  SUBCASE("orthonormality of the full eigenvector matrix") {
    CHECK(max_orthonormality_error(model.eigenvectors) <= 1e-9);
  }
  SUBCASE("bit-identical refit") {
    PcaModel again = fit_pca(matrix, opts);
    CHECK(model.mu == again.mu);
    CHECK(model.eigenvalues == again.eigenvalues);
    CHECK(model.eigenvectors.a == again.eigenvectors.a);
  }
}

TEST_CASE("fit_rescale percentiles, degenerate spread, and affine midpoint") {
  SUBCASE("uniform sample on [-1,1] gives ~(-0.99, 0.99)") {
    Rng rng(31);
    std::vector<double> values(20000);
    for (double& v : values) v = rng.uniform(-1.0, 1.0);

    RescaleRange r = fit_rescale_range(values);

    // independent percentile oracle
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto oracle = [&](double p) {
      double h = p / 100.0 * static_cast<double>(sorted.size() - 1);
      size_t i = static_cast<size_t>(h);
      return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
    };
    CHECK(r.lo == doctest::Approx(oracle(0.5)).epsilon(1e-12));
    CHECK(r.hi == doctest::Approx(oracle(99.5)).epsilon(1e-12));
    CHECK(r.lo == doctest::Approx(-0.99).epsilon(0.02));
    CHECK(r.hi == doctest::Approx(0.99).epsilon(0.02));
  }
  SUBCASE("constant component is degenerate") {
    std::vector<double> values(100, 1.25);
    CHECK_THROWS_AS(fit_rescale_range(values), DegeneratePcError);
  }
  SUBCASE("lo maps to 0, midpoint to 2.5, hi to 5, outside clips") {
    ScoreMatrix m = tiny_matrix();
    PcaFitOptions opts;
    opts.k_override = 1;
    PcaModel model = fit_pca(m, opts);
    Mat proj = project_rows_raw(model, m);
    fit_rescale(model, proj);
    REQUIRE(model.rescale.size() == 1);
    const auto& r = model.rescale[0];
    auto rescale_at = [&](double raw) {
      // invert the projection for a synthetic alpha that lands on `raw`
      std::vector<double> alpha{model.mu[0] + raw * model.eigenvectors(0, 0),
                                model.mu[1] + raw * model.eigenvectors(1, 0)};
      return project_rescaled(model, alpha)[0];
    };
    CHECK(rescale_at(r.lo) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rescale_at(0.5 * (r.lo + r.hi)) == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(rescale_at(r.hi) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(rescale_at(r.hi + 1.0) == 5.0);
    CHECK(rescale_at(r.lo - 1.0) == 0.0);
  }
}

TEST_CASE("pca model json round-trip is exact") {
  ScoreMatrix matrix;
  matrix.dims = default_dimension_registry();
  matrix.rows = read_scores(std::string(ODIS_DATA_DIR) + "/reference_scores_460.jsonl",
                            matrix.dims.size());
  PcaFitOptions opts;
  opts.k_override = 4;
  PcaModel model = fit_pca(matrix, opts);
  fit_rescale(model, project_rows_raw(model, matrix));

  std::string text = pca_model_to_json(model);
  PcaModel back = pca_model_from_json(text);
  CHECK(back.mu == model.mu);
  CHECK(back.sigma == model.sigma);
  CHECK(back.eigenvalues == model.eigenvalues);
  CHECK(back.eigenvectors.a == model.eigenvectors.a);
  CHECK(back.k == model.k);
  CHECK(back.standardized == model.standardized);
  REQUIRE(back.rescale.size() == model.rescale.size());
  for (size_t i = 0; i < back.rescale.size(); ++i) {
    CHECK(back.rescale[i].lo == model.rescale[i].lo);
    CHECK(back.rescale[i].hi == model.rescale[i].hi);
    CHECK(back.rescale[i].degenerate == model.rescale[i].degenerate);
  }
  // serialization itself is deterministic
  CHECK(pca_model_to_json(back) == text);
}

TEST_CASE("standardize flag rescales columns to unit variance") {
  Rng rng(17);
  ScoreMatrix m;
  m.dims = {{"d1", DimensionCategory::language_quality, 100, "D1:"},
            {"d2", DimensionCategory::language_quality, 100, "D2:"}};
  for (int i = 0; i < 500; ++i) {
    double a = 50.0 + 20.0 * rng.normal();
    double b = 50.0 + 2.0 * rng.normal();
    m.rows.push_back({std::to_string(i),
                      {std::clamp(a, 0.0, 100.0), std::clamp(b, 0.0, 100.0)}});
  }
  PcaFitOptions opts;
  opts.standardize = true;
  opts.k_override = 2;
  PcaModel model = fit_pca(m, opts);
  // after standardization both eigenvalues sit near 1 (uncorrelated columns)
  CHECK(model.eigenvalues[0] == doctest::Approx(1.0).epsilon(0.2));
  CHECK(model.eigenvalues[1] == doctest::Approx(1.0).epsilon(0.2));
  CHECK(model.sigma[0] > 5.0);
}
