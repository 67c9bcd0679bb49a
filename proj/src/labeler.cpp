#include "odis/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "odis/jsonl.hpp"
#include "odis/prompts.hpp"

namespace odis {

using nlohmann::json;

const char* to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::None: return "none";
    case ParseErrorKind::MissingTag: return "missing_tag";
    case ParseErrorKind::MalformedScore: return "malformed_score";
    case ParseErrorKind::OutOfRange: return "out_of_range";
  }
  return "unknown";
}

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

size_t find_tag(const std::string& reply, const std::string& tag) {
  size_t pos = reply.find(tag);
  if (pos != std::string::npos) return pos + tag.size();
  // Prompts are inconsistent about casing ("Educational score:" vs
  // "... Score:"), so fall back to a case-insensitive scan.
  std::string lr = ascii_lower(reply);
  std::string lt = ascii_lower(tag);
  pos = lr.find(lt);
  if (pos != std::string::npos) return pos + tag.size();
  return std::string::npos;
}

}  // namespace

ScoreParse parse_score(const std::string& reply, const DimensionSpec& dim) {
  ScoreParse out;
  size_t after = find_tag(reply, dim.score_tag);
  if (after == std::string::npos) {
    out.error = ParseErrorKind::MissingTag;
    return out;
  }
  size_t i = after;
  bool negative = false;
  while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) {
    negative = reply[i] == '-';
    ++i;
  }
  if (i >= reply.size()) {
    out.error = ParseErrorKind::MalformedScore;
    return out;
  }
  long value = 0;
  while (i < reply.size() && std::isdigit(static_cast<unsigned char>(reply[i]))) {
    value = value * 10 + (reply[i] - '0');
    if (value > 1000) break;  // anything this large is out of range anyway
    ++i;
  }
  if (negative) value = -value;
  if (value < 0 || value > dim.scale_max) {
    out.error = ParseErrorKind::OutOfRange;
    return out;
  }
  out.score = static_cast<int>(value);
  return out;
}

MockTransport::MockTransport(const std::vector<Entry>& entries,
                             const std::vector<Document>& docs) {
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;
  const auto& registry = default_dimension_registry();
  for (const auto& e : entries) {
    auto doc_it = by_id.find(e.doc_id);
    if (doc_it == by_id.end())
      throw OdisError("mock replies reference unknown document '" + e.doc_id + "'");
    int dim_idx = find_dimension(e.dimension);
    if (dim_idx < 0)
      throw OdisError("mock replies reference unknown dimension '" + e.dimension + "'");
    std::string prompt =
        render_prompt(*doc_it->second, registry[static_cast<size_t>(dim_idx)]);
    by_prompt_[prompt] = e.reply;
  }
}

MockTransport MockTransport::from_file(const std::string& path,
                                       const std::vector<Document>& docs) {
  std::vector<Entry> entries;
  std::string contents = read_file(path);
  size_t start = 0;
  int64_t lineno = 0;
  while (start < contents.size()) {
    size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string line = contents.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseLineError("malformed mock reply", lineno);
    Entry e;
    e.doc_id = j.at("id").get<std::string>();
    e.dimension = j.at("dimension").get<std::string>();
    e.reply = j.at("reply").get<std::string>();
    entries.push_back(std::move(e));
  }
  return MockTransport(entries, docs);
}

std::string MockTransport::complete(const std::string&,
                                    const std::string& prompt) {
  auto it = by_prompt_.find(prompt);
  if (it == by_prompt_.end())
    throw TransportError("mock transport has no reply for this prompt");
  return it->second;
}

std::string ScoreCache::key(const std::string& doc_id, const std::string& dim,
                            uint64_t prompt_hash) {
  return doc_id + '\x1f' + dim + '\x1f' + std::to_string(prompt_hash);
}

ScoreCache ScoreCache::load(const std::string& path) {
  ScoreCache cache;
  std::string contents;
  try {
    contents = read_file(path);
  } catch (const OdisError&) {
    return cache;
  }
  size_t start = 0;
  while (start < contents.size()) {
    size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string line = contents.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    json j = json::parse(line);
    cache.entries_[key(j.at("id").get<std::string>(),
                       j.at("dimension").get<std::string>(),
                       j.at("prompt_hash").get<uint64_t>())] =
        j.at("score").get<int>();
  }
  return cache;
}

std::optional<int> ScoreCache::lookup(const std::string& doc_id,
                                      const std::string& dimension,
                                      uint64_t prompt_hash) const {
  auto it = entries_.find(key(doc_id, dimension, prompt_hash));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::insert(const std::string& doc_id, const std::string& dimension,
                        uint64_t prompt_hash, int score) {
  entries_[key(doc_id, dimension, prompt_hash)] = score;
}

void ScoreCache::save(const std::string& path) const {
  std::string out;
  for (const auto& [k, score] : entries_) {
    size_t a = k.find('\x1f');
    size_t b = k.find('\x1f', a + 1);
    json j;
    j["id"] = k.substr(0, a);
    j["dimension"] = k.substr(a + 1, b - a - 1);
    j["prompt_hash"] = std::stoull(k.substr(b + 1));
    j["score"] = score;
    out += j.dump();
    out += "\n";
  }
  atomic_write_file(path, out);
}

LabelResponse request_score(const Document& doc, const DimensionSpec& dim,
                            ScoringTransport& transport,
                            const std::string& model_name) {
  LabelResponse out;
  out.doc_id = doc.id;
  out.dimension = dim.name;
  out.raw_reply = transport.complete(model_name, render_prompt(doc, dim));
  out.parsed = parse_score(out.raw_reply, dim);
  return out;
}

namespace {

struct DocOutcome {
  std::vector<double> values;
  std::vector<LabelFailure> failures;
  std::vector<std::tuple<std::string, uint64_t, int>> new_cache;  // dim, hash, score
  int64_t calls = 0;
  int64_t hits = 0;
};

DocOutcome label_one(const Document& doc, ScoringTransport& transport,
                     const LabelOptions& opts, const ScoreCache* cache) {
  const auto& registry = default_dimension_registry();
  DocOutcome out;
  out.values.assign(registry.size(), 0.0);
  for (const auto& dim : registry) {
    std::string prompt = render_prompt(doc, dim);
    uint64_t phash = fnv1a64(prompt);
    if (cache) {
      if (auto hit = cache->lookup(doc.id, dim.name, phash)) {
        out.values[static_cast<size_t>(find_dimension(dim.name))] = *hit;
        ++out.hits;
        continue;
      }
    }
    std::string last_error;
    bool done = false;
    for (int attempt = 1; attempt <= opts.retry.max_attempts && !done; ++attempt) {
      if (attempt > 1) {
        int delay = static_cast<int>(
            opts.retry.base_backoff_ms *
            std::pow(opts.retry.multiplier, attempt - 2));
        if (opts.retry.sleeper) {
          opts.retry.sleeper(delay);
        } else if (delay > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
      }
      LabelResponse response;
      try {
        ++out.calls;
        response = request_score(doc, dim, transport, opts.model_name);
      } catch (const TransportError& e) {
        last_error = std::string("transport: ") + e.what();
        continue;
      }
      if (response.parsed.ok()) {
        out.values[static_cast<size_t>(find_dimension(dim.name))] =
            response.parsed.score;
        out.new_cache.emplace_back(dim.name, phash, response.parsed.score);
        done = true;
      } else {
        last_error = std::string("parse: ") + to_string(response.parsed.error);
      }
    }
    if (!done) {
      out.failures.push_back({doc.id, dim.name, last_error});
    }
  }
  return out;
}

}  // namespace

LabelRunResult label_corpus(const std::vector<Document>& docs,
                            ScoringTransport& transport,
                            const LabelOptions& opts, ScoreCache* cache) {
  std::vector<DocOutcome> outcomes(docs.size());
  const int threads = std::max(1, opts.concurrency);

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(docs.size()); ++i) {
    outcomes[static_cast<size_t>(i)] =
        label_one(docs[static_cast<size_t>(i)], transport, opts, cache);
  }

  LabelRunResult result;
  for (size_t i = 0; i < docs.size(); ++i) {
    auto& oc = outcomes[i];
    result.transport_calls += oc.calls;
    result.cache_hits += oc.hits;
    if (cache) {
      for (const auto& [dim, phash, score] : oc.new_cache)
        cache->insert(docs[i].id, dim, phash, score);
    }
    if (oc.failures.empty()) {
      result.scores.push_back({docs[i].id, std::move(oc.values)});
    } else {
      for (auto& f : oc.failures) result.failures.push_back(std::move(f));
    }
  }
  return result;
}

std::string OpenAiTransport::complete(const std::string& model,
                                      const std::string& prompt) {
  json body;
  body["model"] = model;
  body["temperature"] = cfg_.temperature;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});

  httplib::Client client(cfg_.base_url);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res)
    throw TransportError("no response from " + cfg_.base_url + ": " +
                         httplib::to_string(res.error()));
  if (res->status != 200)
    throw TransportError("scoring API returned status " +
                         std::to_string(res->status));
  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw TransportError("scoring API returned bad JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected reply shape: ") + e.what());
  }
}

}  // namespace odis
