#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "odis/types.hpp"

namespace odis {

enum class BudgetStrategy { uniform, variance_proportional };

const char* to_string(BudgetStrategy s);
BudgetStrategy budget_strategy_from_string(const std::string& s);

struct BudgetPlan {
  int64_t total = 0;
  std::vector<int64_t> per_dim;  // sums to total after largest-remainder rounding
  BudgetStrategy strategy = BudgetStrategy::uniform;
};

// Splits the token budget across K components. Uniform divides evenly;
// variance_proportional weights by eigenvalue. Largest-remainder rounding,
// ties broken toward lower component index.
BudgetPlan allocate_budget(int64_t total_tokens,
                           const std::vector<double>& eigenvalues, int k,
                           BudgetStrategy strategy);

struct ScoredDoc {
  std::string id;
  double score = 0.0;
  int64_t tokens = 0;
};

struct ThresholdResult {
  double threshold = std::numeric_limits<double>::infinity();
  std::vector<std::string> selected_ids;  // ascending id order
  int64_t token_total = 0;
};

// Sorts by score descending (ties by ascending id) and takes the longest
// prefix whose cumulative tokens fit the budget. The threshold is the score
// of the last taken document, +inf for an empty selection.
ThresholdResult compute_threshold(std::vector<ScoredDoc> pool, int64_t budget);

struct UpSetCell {
  uint32_t mask = 0;  // bit k set <=> member of dimension k's subset
  int64_t doc_count = 0;
  int64_t token_count = 0;
};

struct SelectionResult {
  std::vector<double> thresholds;                     // length K
  std::vector<std::vector<std::string>> per_dim_ids;  // ascending id order
  std::vector<int64_t> per_dim_token_totals;
  std::vector<std::string> union_ids;  // ascending, deduplicated
  int64_t union_token_total = 0;
  std::vector<int64_t> budgets;
  double overlap_ratio_tokens = 0.0;  // fraction of union tokens in >1 subset
  double overlap_ratio_docs = 0.0;
  std::vector<UpSetCell> upset;  // non-empty cells, ascending mask
};

// Runs compute_threshold per dimension and assembles the deduplicated union
// with exact overlap accounting. Every stream must cover the same id set.
SelectionResult select(const BudgetPlan& plan,
                       const std::vector<std::vector<ScoredDoc>>& per_dim_scores);

// Recomputes the UpSet table from per-dimension membership; cells sum to the
// union size. token_counts maps id -> tokens.
std::vector<UpSetCell> overlap_report(
    const std::vector<std::vector<std::string>>& per_dim_ids,
    const std::map<std::string, int64_t>& token_counts);

// Filters the corpus to union members, preserving input order. Throws if the
// result references ids missing from the corpus.
std::vector<Document> export_selection(const SelectionResult& result,
                                       const std::vector<Document>& corpus);

// Manifest JSON: budgets, thresholds, token totals, overlap ratios, UpSet
// cells, config hash. +inf thresholds serialize as null.
std::string selection_manifest_json(const SelectionResult& result,
                                    uint64_t config_hash);

}  // namespace odis
