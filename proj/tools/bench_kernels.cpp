// Timing comparison of the serial reference kernels against the OpenMP
// blocked/slotted versions used by the pipeline. Build and run:
//   cmake --build build --target bench_kernels && ./build/tools/bench_kernels
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "odis/diagnostics.hpp"
#include "odis/linalg.hpp"
#include "odis/rng.hpp"
#include "odis/scorer.hpp"
#include "odis/synth.hpp"

using namespace odis;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP: %d threads\n", omp_get_max_threads());
#else
  std::printf("OpenMP: disabled (serial build)\n");
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  // Covariance accumulation over a tall centered matrix.
  {
    Rng rng(7);
    Mat x(200000, 11);
    for (double& v : x.a) v = rng.normal();
    Mat check_a, check_b;
    double serial = time_ms([&] { check_a = covariance_serial(x); }, 3);
    double parallel = time_ms([&] { check_b = covariance_blocked(x); }, 3);
    double max_diff = 0.0;
    for (size_t i = 0; i < check_a.a.size(); ++i)
      max_diff = std::max(max_diff, std::fabs(check_a.a[i] - check_b.a[i]));
    row("covariance 200k x 11", serial, parallel);
    std::printf("%-28s max |serial - blocked| = %.3e\n", "", max_diff);
  }

  // Batch prediction over synthetic documents.
  {
    SynthConfig cfg;
    cfg.n_target = 20000;
    cfg.n_reference = 500;
    SynthCorpus corpus = generate_synth_corpus(cfg);
    std::vector<FeatureVector> feats;
    std::vector<double> targets;
    for (int i = 0; i < 500; ++i) {
      feats.push_back(featurize(corpus.reference[static_cast<size_t>(i)].text, {}));
      targets.push_back(
          corpus.reference_scores.rows[static_cast<size_t>(i)].values[0]);
    }
    ScorerFitOptions opts;
    SurrogateScorer scorer = fit_scorer(feats, targets, opts);
    std::vector<double> a, b;
    double serial = time_ms([&] { a = predict_batch_serial(scorer, corpus.target); }, 3);
    double parallel = time_ms([&] { b = predict_batch(scorer, corpus.target); }, 3);
    row("predict 20k docs", serial, parallel);
    std::printf("%-28s outputs identical: %s\n", "", a == b ? "yes" : "NO");
  }

  // Pairwise cosine distances over an embedding sample.
  {
    Rng rng(11);
    Mat rows(1500, 128);
    for (double& v : rows.a) v = rng.normal();
    std::vector<double> a, b;
    double serial = time_ms([&] { a = pairwise_cosine_distances_serial(rows); }, 3);
    double parallel = time_ms([&] { b = pairwise_cosine_distances(rows); }, 3);
    row("pairwise 1500 x 128", serial, parallel);
    std::printf("%-28s outputs identical: %s\n", "", a == b ? "yes" : "NO");
  }
  return 0;
}
