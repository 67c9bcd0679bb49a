#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "odis/types.hpp"

namespace odis {

struct TransportError : OdisError {
  using OdisError::OdisError;
};

enum class ParseErrorKind { None, MissingTag, MalformedScore, OutOfRange };

const char* to_string(ParseErrorKind k);

struct ScoreParse {
  int score = 0;
  ParseErrorKind error = ParseErrorKind::None;
  bool ok() const { return error == ParseErrorKind::None; }
};

// Finds the dimension's score tag (exact match first, case-insensitive as a
// fallback) and parses the first integer after it. Out-of-range and missing
// values are reported, never defaulted.
ScoreParse parse_score(const std::string& reply, const DimensionSpec& dim);

struct LabelResponse {
  std::string doc_id;
  std::string dimension;
  std::string raw_reply;
  ScoreParse parsed;
};

// Abstract scoring backend: (model name, prompt) -> reply text. The HTTP
// wire format is an adapter concern. Implementations must be callable from
// multiple threads.
class ScoringTransport {
 public:
  virtual ~ScoringTransport() = default;
  virtual std::string complete(const std::string& model,
                               const std::string& prompt) = 0;
};

// One scoring call for one (document, dimension) cell: renders the prompt,
// queries the transport, parses the reply. Transport failures propagate;
// parse failures come back in `parsed`.
LabelResponse request_score(const Document& doc, const DimensionSpec& dim,
                            ScoringTransport& transport,
                            const std::string& model_name);

// Deterministic fixture transport: replies are keyed by (doc id, dimension)
// in the fixture file and matched here by the rendered prompt string.
class MockTransport : public ScoringTransport {
 public:
  // Fixture rows; reply may be any text, typically "<tag> <score>".
  struct Entry {
    std::string doc_id;
    std::string dimension;
    std::string reply;
  };

  MockTransport(const std::vector<Entry>& entries,
                const std::vector<Document>& docs);

  static MockTransport from_file(const std::string& path,
                                 const std::vector<Document>& docs);

  std::string complete(const std::string& model,
                       const std::string& prompt) override;

 private:
  std::map<std::string, std::string> by_prompt_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_backoff_ms = 250;
  double multiplier = 2.0;
  // Injectable for tests; receives the delay in ms.
  std::function<void(int)> sleeper;
};

struct LabelFailure {
  std::string doc_id;
  std::string dimension;
  std::string reason;
};

struct LabelRunResult {
  std::vector<ScoreVector> scores;  // input document order
  std::vector<LabelFailure> failures;
  int64_t transport_calls = 0;
  int64_t cache_hits = 0;
};

// On-disk cache keyed by (doc id, dimension, prompt hash); re-runs only
// query missing cells.
class ScoreCache {
 public:
  static ScoreCache load(const std::string& path);  // missing file -> empty
  std::optional<int> lookup(const std::string& doc_id,
                            const std::string& dimension,
                            uint64_t prompt_hash) const;
  void insert(const std::string& doc_id, const std::string& dimension,
              uint64_t prompt_hash, int score);
  void save(const std::string& path) const;
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, int> entries_;  // "id\x1f dim \x1f hash" -> score
  static std::string key(const std::string& doc_id, const std::string& dim,
                         uint64_t prompt_hash);
};

struct LabelOptions {
  std::string model_name = "gpt-4o-mini";
  RetryPolicy retry;
  int concurrency = 4;
};

// Labels every document on all registry dimensions. A document with any
// unrecoverable dimension goes to the failure report and emits no score row.
// Output order matches input order regardless of scheduling.
LabelRunResult label_corpus(const std::vector<Document>& docs,
                            ScoringTransport& transport,
                            const LabelOptions& opts,
                            ScoreCache* cache = nullptr);

// OpenAI-style chat-completions adapter over HTTP.
struct OpenAiConfig {
  std::string base_url;  // e.g. "https://api.openai.com"
  std::string api_key;
  double temperature = 0.0;
  int timeout_seconds = 60;
};

class OpenAiTransport : public ScoringTransport {
 public:
  explicit OpenAiTransport(OpenAiConfig cfg) : cfg_(std::move(cfg)) {}
  std::string complete(const std::string& model,
                       const std::string& prompt) override;

 private:
  OpenAiConfig cfg_;
};

}  // namespace odis
