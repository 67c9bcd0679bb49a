#include <cmath>

#include "doctest.h"
#include "odis/features.hpp"
#include "odis/rng.hpp"
#include "odis/scorer.hpp"

using namespace odis;

namespace {

FeatureVector single_bucket(double value) {
  FeatureVector f;
  f.entries.emplace_back(0u, value);
  return f;
}

double l2_norm(const FeatureVector& f) {
  double acc = 0.0;
  for (const auto& [idx, v] : f.entries) acc += v * v;
  return std::sqrt(acc);
}

std::string random_text(Rng& rng, int words) {
  std::string out;
  for (int w = 0; w < words; ++w) {
    if (w) out.push_back(' ');
    int len = static_cast<int>(rng.uniform_int(3, 8));
    for (int i = 0; i < len; ++i)
      out.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_text lowercases and collapses whitespace") {
  CHECK(normalize_text("  Hello\t\nWorld  ") == "hello world");
  CHECK(normalize_text("AbC") == "abc");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("   ") == "");
  // bytes above 0x7f pass through
  CHECK(normalize_text("caf\xc3\xa9") == "caf\xc3\xa9");
}

TEST_CASE("featurize basics") {
  FeatureConfig cfg;
  SUBCASE("empty and sub-ngram texts give the zero vector") {
    CHECK(featurize("", cfg).entries.empty());
    CHECK(featurize("ab", cfg).entries.empty());
  }
  SUBCASE("unit norm for texts with at least one n-gram") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      auto f = featurize(random_text(rng, 1 + static_cast<int>(rng.uniform_int(0, 20))), cfg);
      if (f.entries.empty()) continue;
      CHECK(std::fabs(l2_norm(f) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("'abc' yields exactly one n-gram of weight +-1") {
    auto f = featurize("abc", cfg);
    REQUIRE(f.entries.size() == 1);
    CHECK(std::fabs(std::fabs(f.entries[0].second) - 1.0) <= 1e-15);
  }
  SUBCASE("case and whitespace insensitive") {
    auto a = featurize("Hello   World", cfg);
    auto b = featurize("hello world", cfg);
    CHECK(a.entries == b.entries);
  }
  SUBCASE("all indices below bucket count") {
    FeatureConfig small;
    small.buckets = 64;
    auto f = featurize("the quick brown fox jumps over the lazy dog", small);
    for (const auto& [idx, v] : f.entries) CHECK(idx < 64);
  }
}

TEST_CASE("fit_scorer closed-form examples") {
  SUBCASE("features 1,2,3 / targets 2,4,6 with lambda 0 gives w=2 b=0") {
    FeatureConfig cfg;
    std::vector<FeatureVector> feats{single_bucket(1), single_bucket(2),
                                     single_bucket(3)};
    ScorerFitOptions opts;
    opts.lambda = 0.0;
    opts.cg_tol = 1e-12;
    SurrogateScorer s = fit_scorer(feats, {2, 4, 6}, opts);
    CHECK(s.weights[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s.bias == doctest::Approx(0.0).epsilon(1e-7));
    // unclipped fit is exact; predictions still clip to [0,5]
    CHECK(s.predict_features(feats[1]) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(s.predict_features(feats[2]) == 5.0);
  }
  SUBCASE("single active pair, lambda=1, no bias: w = 1/(1+lambda)") {
    ScorerFitOptions opts;
    opts.lambda = 1.0;
    opts.fit_bias = false;
    // the (0,0) pair contributes nothing, leaving min (w-1)^2 + w^2
    SurrogateScorer s = fit_scorer(
        {single_bucket(1), single_bucket(0)}, {1.0, 0.0}, opts);
    CHECK(s.weights[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(s.bias == 0.0);
    CHECK(s.weights.size() == opts.features.buckets);
  }
  SUBCASE("constant targets give a bias-only model") {
    Rng rng(5);
    FeatureConfig cfg;
    std::vector<FeatureVector> feats;
    for (int i = 0; i < 10; ++i) feats.push_back(featurize(random_text(rng, 6), cfg));
    ScorerFitOptions opts;
    SurrogateScorer s = fit_scorer(feats, std::vector<double>(10, 3.25), opts);
    CHECK(s.bias == doctest::Approx(3.25).epsilon(1e-9));
    for (const auto& f : feats)
      CHECK(s.predict_features(f) == doctest::Approx(3.25).epsilon(1e-9));
  }
  SUBCASE("all-identical features degrade to bias-only") {
    FeatureConfig cfg;
    std::vector<FeatureVector> feats(5, featurize("same text", cfg));
    ScorerFitOptions opts;
    SurrogateScorer s = fit_scorer(feats, {1, 2, 3, 4, 5}, opts);
    CHECK(s.predict_features(feats[0]) == doctest::Approx(3.0).epsilon(1e-9));
  }
}

TEST_CASE("scorer invariants") {
  Rng rng(11);
  FeatureConfig cfg;
  cfg.buckets = 1 << 14;

  // deterministic synthetic regression set
  std::vector<std::string> texts;
  std::vector<FeatureVector> feats;
  for (int i = 0; i < 120; ++i) {
    texts.push_back(random_text(rng, 8));
    feats.push_back(featurize(texts.back(), cfg));
  }
  std::vector<double> planted(cfg.buckets, 0.0);
  for (double& v : planted) v = 0.25 * rng.normal();
  std::vector<double> targets;
  for (const auto& f : feats) {
    double y = 2.5;
    for (const auto& [idx, v] : f.entries) y += planted[idx] * v;
    targets.push_back(y);
  }

  SUBCASE("linear recoverability at lambda 0") {
    ScorerFitOptions opts;
    opts.features = cfg;
    opts.lambda = 0.0;
    opts.cg_tol = 1e-10;
    opts.cg_max_iters = 5000;
    SurrogateScorer s = fit_scorer(feats, targets, opts);
    CHECK(s.train_metrics.rmse <= 1e-6);
  }
  SUBCASE("ridge monotonicity of the weight norm") {
    double prev = -1.0;
    for (double lambda : {1e-3, 1e-1, 1.0, 10.0, 100.0}) {
      ScorerFitOptions opts;
      opts.features = cfg;
      opts.lambda = lambda;
      SurrogateScorer s = fit_scorer(feats, targets, opts);
      double norm = 0.0;
      for (double w : s.weights) norm += w * w;
      if (prev >= 0.0) CHECK(norm <= prev * (1.0 + 1e-9));
      prev = norm;
    }
  }
  SUBCASE("determinism: identical refit is bit-identical") {
    ScorerFitOptions opts;
    opts.features = cfg;
    SurrogateScorer a = fit_scorer(feats, targets, opts);
    SurrogateScorer b = fit_scorer(feats, targets, opts);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
  }
  SUBCASE("predictions stay in [0,5] and empty text predicts clip(bias)") {
    ScorerFitOptions opts;
    opts.features = cfg;
    SurrogateScorer s = fit_scorer(feats, targets, opts);
    Rng prng(17);
    for (int i = 0; i < 50; ++i) {
      double p = s.predict_text(random_text(prng, 5));
      CHECK(p >= 0.0);
      CHECK(p <= 5.0);
    }
    CHECK(s.predict_text("") == std::clamp(s.bias, 0.0, 5.0));
  }
  SUBCASE("partition invariance of batch prediction") {
    ScorerFitOptions opts;
    opts.features = cfg;
    SurrogateScorer s = fit_scorer(feats, targets, opts);
    std::vector<Document> docs;
    for (size_t i = 0; i < texts.size(); ++i)
      docs.push_back({std::to_string(i), texts[i], 1, {}});
    std::vector<double> whole = predict_batch(s, docs);
    CHECK(whole == predict_batch_serial(s, docs));

    Rng part_rng(23);
    std::vector<double> stitched;
    size_t start = 0;
    while (start < docs.size()) {
      size_t len = std::min<size_t>(
          docs.size() - start,
          static_cast<size_t>(part_rng.uniform_int(1, 40)));
      std::vector<Document> chunk(docs.begin() + static_cast<long>(start),
                                  docs.begin() + static_cast<long>(start + len));
      auto piece = predict_batch(s, chunk);
      stitched.insert(stitched.end(), piece.begin(), piece.end());
      start += len;
    }
    CHECK(stitched == whole);
  }
}

TEST_CASE("evaluate_scorer metrics") {
  SUBCASE("perfect predictions") {
    ScorerMetrics m = evaluate_scorer({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK(m.rmse == 0.0);
    CHECK(m.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.spearman_rho == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant shift keeps r = 1, rmse = |shift|") {
    ScorerMetrics m = evaluate_scorer({1.5, 2.5, 3.5}, {1, 2, 3});
    CHECK(m.rmse == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("anti-correlated pairs give r = -1") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x) y.push_back(-v);
    ScorerMetrics m = evaluate_scorer(x, y);
    CHECK(m.pearson_r == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(m.spearman_rho == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("fewer than two pairs raises") {
    CHECK_THROWS_AS(evaluate_scorer({1.0}, {1.0}), InsufficientDataError);
  }
}

TEST_CASE("scorer json round-trip is bit-exact") {
  Rng rng(29);
  FeatureConfig cfg;
  cfg.buckets = 4096;
  std::vector<FeatureVector> feats;
  std::vector<double> targets;
  for (int i = 0; i < 40; ++i) {
    feats.push_back(featurize(random_text(rng, 6), cfg));
    targets.push_back(rng.uniform(0.0, 5.0));
  }
  ScorerFitOptions opts;
  opts.features = cfg;
  opts.pc_index = 2;
  SurrogateScorer s = fit_scorer(feats, targets, opts);
  s.holdout_metrics = evaluate_scorer({1, 2}, {1.5, 2.25});

  std::string text = scorer_to_json(s);
  SurrogateScorer back = scorer_from_json(text);
  CHECK(back.weights == s.weights);
  CHECK(back.bias == s.bias);
  CHECK(back.pc_index == s.pc_index);
  CHECK(back.lambda == s.lambda);
  CHECK(back.features.buckets == s.features.buckets);
  CHECK(back.holdout_metrics.rmse == s.holdout_metrics.rmse);
  CHECK(scorer_to_json(back) == text);
}
