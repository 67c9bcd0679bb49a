#include "odis/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "odis/jsonl.hpp"

namespace odis {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

FeatureVector featurize(std::string_view text, const FeatureConfig& cfg) {
  FeatureVector out;
  std::string norm = normalize_text(text);
  if (norm.empty()) return out;

  std::map<uint32_t, double> acc;  // ordered: deterministic entry order
  for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (static_cast<size_t>(n) > norm.size()) break;
    for (size_t i = 0; i + static_cast<size_t>(n) <= norm.size(); ++i) {
      uint64_t h = fnv1a64(std::string_view(norm).substr(i, static_cast<size_t>(n)));
      uint32_t idx = static_cast<uint32_t>((h >> 1) % cfg.buckets);
      double sign = (h & 1u) ? 1.0 : -1.0;
      acc[idx] += sign;
    }
  }

  double norm2 = 0.0;
  for (const auto& [idx, v] : acc) norm2 += v * v;
  if (norm2 <= 0.0) return out;
  double inv = 1.0 / std::sqrt(norm2);
  out.entries.reserve(acc.size());
  for (const auto& [idx, v] : acc) {
    if (v != 0.0) out.entries.emplace_back(idx, v * inv);
  }
  return out;
}

}  // namespace odis
