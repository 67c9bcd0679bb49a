#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace odis {

struct FeatureConfig {
  uint32_t buckets = 1u << 18;
  int ngram_min = 3;
  int ngram_max = 5;
};

// Sparse L2-normalized feature vector; entries sorted by bucket index.
struct FeatureVector {
  std::vector<std::pair<uint32_t, double>> entries;

  double dot_dense(const std::vector<double>& w) const {
    double acc = 0.0;
    for (const auto& [idx, val] : entries) acc += w[idx] * val;
    return acc;
  }
};

// ASCII-lowercases and collapses whitespace runs to single spaces; bytes
// above 0x7f pass through untouched so multi-byte UTF-8 stays intact.
std::string normalize_text(std::string_view text);

// Character n-grams (ngram_min..ngram_max) of the normalized text, hashed by
// 64-bit FNV-1a: bit 0 gives the sign, the remaining bits pick the bucket.
// Term-frequency weights, L2-normalized. Texts shorter than ngram_min
// produce the zero vector, as does empty text.
FeatureVector featurize(std::string_view text, const FeatureConfig& cfg);

}  // namespace odis
