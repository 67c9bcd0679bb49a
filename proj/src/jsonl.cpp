#include "odis/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace odis {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, int64_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ParseLineError("malformed JSON", lineno);
  if (!j.is_object()) throw ParseLineError("record is not an object", lineno);
  return j;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OdisError("cannot open " + path);
  return in;
}

}  // namespace

void for_each_document(std::istream& in,
                       const std::function<void(Document&&, int64_t)>& fn) {
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    json j = parse_line(line, lineno);
    Document d;
    try {
      d.id = j.at("id").get<std::string>();
      d.text = j.at("text").get<std::string>();
      d.token_count = j.at("token_count").get<int64_t>();
      if (j.contains("domain")) d.domain_tag = j["domain"].get<std::string>();
    } catch (const json::exception& e) {
      throw ParseLineError(std::string("bad document record: ") + e.what(),
                           lineno);
    }
    if (d.token_count < 0)
      throw ParseLineError("negative token_count", lineno);
    fn(std::move(d), lineno);
  }
}

std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  for_each_document(in, [&](Document&& d, int64_t) { docs.push_back(std::move(d)); });
  return docs;
}

std::vector<Document> read_corpus(const std::string& path) {
  auto in = open_or_throw(path);
  return read_corpus(in);
}

void append_document(std::ostream& out, const Document& doc) {
  json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["token_count"] = doc.token_count;
  if (doc.domain_tag) j["domain"] = *doc.domain_tag;
  out << j.dump() << "\n";
}

void write_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ostringstream out;
  for (const auto& d : docs) append_document(out, d);
  atomic_write_file(path, out.str());
}

std::vector<ScoreVector> read_scores(const std::string& path, size_t expect_m) {
  auto in = open_or_throw(path);
  std::vector<ScoreVector> rows;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    json j = parse_line(line, lineno);
    ScoreVector sv;
    try {
      sv.doc_id = j.at("id").get<std::string>();
      sv.values = j.at("scores").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseLineError(std::string("bad score record: ") + e.what(), lineno);
    }
    if (expect_m != 0 && sv.values.size() != expect_m)
      throw ParseLineError("score record has " + std::to_string(sv.values.size()) +
                               " values, expected " + std::to_string(expect_m),
                           lineno);
    rows.push_back(std::move(sv));
  }
  return rows;
}

void write_scores(const std::string& path, const std::vector<ScoreVector>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) {
    json j;
    j["id"] = r.doc_id;
    j["scores"] = r.values;
    out << j.dump() << "\n";
  }
  atomic_write_file(path, out.str());
}

std::vector<EmbeddingRecord> read_embeddings(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<EmbeddingRecord> recs;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    json j = parse_line(line, lineno);
    EmbeddingRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.vector = j.at("vector").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseLineError(std::string("bad embedding record: ") + e.what(),
                           lineno);
    }
    recs.push_back(std::move(r));
  }
  return recs;
}

void write_embeddings(const std::string& path,
                      const std::vector<EmbeddingRecord>& recs) {
  std::ostringstream out;
  for (const auto& r : recs) {
    json j;
    j["id"] = r.id;
    j["vector"] = r.vector;
    out << j.dump() << "\n";
  }
  atomic_write_file(path, out.str());
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OdisError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw OdisError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t file_fingerprint(const std::string& path) {
  return fnv1a64(read_file(path));
}

}  // namespace odis
