#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odis/types.hpp"

namespace odis {

inline constexpr const char* kToolVersion = "0.1.0";

// Flat dotted-key configuration. Loaded from a JSON object of scalars
// (e.g. {"pca.k": 4, "selection.budget_tokens": 500000}); command-line
// flags override file values.
class Config {
 public:
  static Config load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  // FNV-1a over the sorted "key=value" lines.
  uint64_t hash() const;
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

struct StageResult {
  std::string stage;
  std::vector<std::string> artifacts;
  int64_t wall_ms = 0;
};

// Runs one pipeline stage. Artifacts are written atomically under
// config "out.dir"; a run manifest (manifest_<stage>.json) records the
// config hash, input fingerprints, artifact hashes, and wall time. A
// changed config hash refuses to reuse an output directory unless force
// is set. Throws OdisError with an actionable message on missing inputs.
StageResult run_stage(const std::string& name, Config& config, bool force);

const std::vector<std::string>& stage_names();

}  // namespace odis
