#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace odis {

struct OdisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientDataError : OdisError {
  using OdisError::OdisError;
};

struct DegenerateSpectrumError : OdisError {
  using OdisError::OdisError;
};

struct DegeneratePcError : OdisError {
  using OdisError::OdisError;
};

struct DimensionMismatchError : OdisError {
  using OdisError::OdisError;
};

// One corpus record. token_count comes from the upstream tokenizer; it is
// never computed here.
struct Document {
  std::string id;
  std::string text;
  int64_t token_count = 0;
  std::optional<std::string> domain_tag;
};

enum class DimensionCategory {
  language_quality,
  knowledge_quality,
  comprehension_difficulty,
  information_quality,
};

const char* to_string(DimensionCategory c);

struct DimensionSpec {
  std::string name;
  DimensionCategory category;
  int scale_max = 0;      // Likert maximum, one of 3/4/5
  std::string score_tag;  // exact reply marker, e.g. "Language Coherence Score:"
};

// The 11 evaluation dimensions in canonical order. Score files store values
// in this order.
const std::vector<DimensionSpec>& default_dimension_registry();

// Index into the default registry by dimension name, or -1.
int find_dimension(const std::string& name);

struct ScoreVector {
  std::string doc_id;
  std::vector<double> values;
};

// Rejects wrong arity, NaN, and values outside [0, scale_max].
void validate_score_vector(const ScoreVector& sv,
                           const std::vector<DimensionSpec>& dims);

struct ScoreMatrix {
  std::vector<DimensionSpec> dims;
  std::vector<ScoreVector> rows;

  size_t n() const { return rows.size(); }
  size_t m() const { return dims.size(); }
};

struct CorpusSummary {
  int64_t count = 0;
  int64_t token_total = 0;
  std::vector<std::string> duplicate_ids;  // first-seen order
};

// Pure streaming fold over documents; duplicate ids reported once each, in
// the order their second occurrence appears.
CorpusSummary validate_corpus(const std::vector<Document>& docs);

// Incremental form used by the streaming reader.
class CorpusValidator {
 public:
  void add(const Document& doc);
  CorpusSummary finish() const { return summary_; }

 private:
  CorpusSummary summary_;
  std::vector<std::string> seen_;        // sorted for lookup
  std::vector<std::string> flagged_;     // ids already reported
};

}  // namespace odis
