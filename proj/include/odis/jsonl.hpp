#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "odis/types.hpp"

namespace odis {

struct ParseLineError : OdisError {
  ParseLineError(const std::string& msg, int64_t line)
      : OdisError(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  int64_t line;
};

// Corpus file: one JSON object per line, keys id/text/token_count and an
// optional domain. Blank lines are rejected, not skipped.
std::vector<Document> read_corpus(const std::string& path);
std::vector<Document> read_corpus(std::istream& in);
void for_each_document(std::istream& in,
                       const std::function<void(Document&&, int64_t)>& fn);
void write_corpus(const std::string& path, const std::vector<Document>& docs);
void append_document(std::ostream& out, const Document& doc);

// Score file: {"id": ..., "scores": [...]} with values in registry order.
std::vector<ScoreVector> read_scores(const std::string& path, size_t expect_m);
void write_scores(const std::string& path, const std::vector<ScoreVector>& rows);

// Embeddings file: {"id": ..., "vector": [...]}.
struct EmbeddingRecord {
  std::string id;
  std::vector<double> vector;
};
std::vector<EmbeddingRecord> read_embeddings(const std::string& path);
void write_embeddings(const std::string& path,
                      const std::vector<EmbeddingRecord>& recs);

// Writes via a temp file in the same directory, then renames over the
// target, so partial outputs are never observable.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

// FNV-1a over file contents; used for input fingerprints in manifests.
uint64_t fnv1a64(std::string_view bytes);
uint64_t file_fingerprint(const std::string& path);

}  // namespace odis
