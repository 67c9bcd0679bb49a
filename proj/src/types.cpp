#include "odis/types.hpp"

#include <algorithm>
#include <cmath>

namespace odis {

const char* to_string(DimensionCategory c) {
  switch (c) {
    case DimensionCategory::language_quality:
      return "language_quality";
    case DimensionCategory::knowledge_quality:
      return "knowledge_quality";
    case DimensionCategory::comprehension_difficulty:
      return "comprehension_difficulty";
    case DimensionCategory::information_quality:
      return "information_quality";
  }
  return "unknown";
}

const std::vector<DimensionSpec>& default_dimension_registry() {
  static const std::vector<DimensionSpec> registry = {
      {"coherence", DimensionCategory::language_quality, 4,
       "Language Coherence Score:"},
      {"conciseness", DimensionCategory::language_quality, 4,
       "Language Conciseness Score:"},
      {"spelling_accuracy", DimensionCategory::language_quality, 4,
       "Language Spelling Accuracy Score:"},
      {"knowledge_depth", DimensionCategory::knowledge_quality, 5,
       "Knowledge Depth Score:"},
      {"knowledge_richness", DimensionCategory::knowledge_quality, 4,
       "Knowledge Richness Score:"},
      {"reasoning", DimensionCategory::knowledge_quality, 5,
       "Knowledge Reasoning Score:"},
      {"educational_value", DimensionCategory::knowledge_quality, 3,
       "Educational score:"},
      {"practical_helpfulness", DimensionCategory::knowledge_quality, 4,
       "Knowledge Practical Helpfulness Score:"},
      {"comprehension_difficulty", DimensionCategory::comprehension_difficulty,
       5, "Comprehension Difficulty Score:"},
      {"factual_accuracy", DimensionCategory::information_quality, 3,
       "Information Factual Accuracy Score:"},
      {"completeness", DimensionCategory::information_quality, 4,
       "Information Completeness Score:"},
  };
  return registry;
}

int find_dimension(const std::string& name) {
  const auto& reg = default_dimension_registry();
  for (size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void validate_score_vector(const ScoreVector& sv,
                           const std::vector<DimensionSpec>& dims) {
  if (sv.values.size() != dims.size()) {
    throw DimensionMismatchError("score vector for '" + sv.doc_id + "' has " +
                                 std::to_string(sv.values.size()) +
                                 " values, expected " +
                                 std::to_string(dims.size()));
  }
  for (size_t j = 0; j < sv.values.size(); ++j) {
    double v = sv.values[j];
    if (std::isnan(v)) {
      throw OdisError("NaN score for '" + sv.doc_id + "' on dimension " +
                      dims[j].name);
    }
    if (v < 0.0 || v > static_cast<double>(dims[j].scale_max)) {
      throw OdisError("score " + std::to_string(v) + " for '" + sv.doc_id +
                      "' outside [0," + std::to_string(dims[j].scale_max) +
                      "] on dimension " + dims[j].name);
    }
  }
}

void CorpusValidator::add(const Document& doc) {
  summary_.count += 1;
  summary_.token_total += doc.token_count;
  auto pos = std::lower_bound(seen_.begin(), seen_.end(), doc.id);
  if (pos != seen_.end() && *pos == doc.id) {
    auto fpos = std::lower_bound(flagged_.begin(), flagged_.end(), doc.id);
    if (fpos == flagged_.end() || *fpos != doc.id) {
      flagged_.insert(fpos, doc.id);
      summary_.duplicate_ids.push_back(doc.id);
    }
  } else {
    seen_.insert(pos, doc.id);
  }
}

CorpusSummary validate_corpus(const std::vector<Document>& docs) {
  CorpusValidator v;
  for (const auto& d : docs) v.add(d);
  return v.finish();
}

}  // namespace odis
