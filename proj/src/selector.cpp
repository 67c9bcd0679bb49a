#include "odis/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace odis {

using nlohmann::json;

const char* to_string(BudgetStrategy s) {
  return s == BudgetStrategy::uniform ? "uniform" : "variance_proportional";
}

BudgetStrategy budget_strategy_from_string(const std::string& s) {
  if (s == "uniform") return BudgetStrategy::uniform;
  if (s == "variance_proportional") return BudgetStrategy::variance_proportional;
  throw OdisError("unknown budget strategy '" + s + "'");
}

BudgetPlan allocate_budget(int64_t total_tokens,
                           const std::vector<double>& eigenvalues, int k,
                           BudgetStrategy strategy) {
  if (total_tokens <= 0) throw OdisError("allocate_budget: budget must be > 0");
  if (k < 1) throw OdisError("allocate_budget: K must be >= 1");

  std::vector<double> weights(static_cast<size_t>(k), 1.0);
  if (strategy == BudgetStrategy::variance_proportional) {
    if (eigenvalues.size() < static_cast<size_t>(k))
      throw OdisError("allocate_budget: not enough eigenvalues for K");
    double total_w = 0.0;
    for (int i = 0; i < k; ++i) {
      weights[static_cast<size_t>(i)] = std::max(0.0, eigenvalues[static_cast<size_t>(i)]);
      total_w += weights[static_cast<size_t>(i)];
    }
    if (total_w <= 0.0)
      throw DegenerateSpectrumError("allocate_budget: zero variance weights");
  }

  double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  BudgetPlan plan;
  plan.total = total_tokens;
  plan.strategy = strategy;
  plan.per_dim.assign(static_cast<size_t>(k), 0);

  // Largest-remainder rounding; remainder ties go to the lower index.
  std::vector<double> remainders(static_cast<size_t>(k));
  int64_t assigned = 0;
  for (int i = 0; i < k; ++i) {
    double quota = static_cast<double>(total_tokens) * weights[static_cast<size_t>(i)] / weight_sum;
    int64_t fl = static_cast<int64_t>(std::floor(quota));
    plan.per_dim[static_cast<size_t>(i)] = fl;
    remainders[static_cast<size_t>(i)] = quota - static_cast<double>(fl);
    assigned += fl;
  }
  std::vector<size_t> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainders[a] > remainders[b];
  });
  for (int64_t left = total_tokens - assigned; left > 0; --left)
    plan.per_dim[order[static_cast<size_t>(total_tokens - assigned - left)]] += 1;
  return plan;
}

ThresholdResult compute_threshold(std::vector<ScoredDoc> pool, int64_t budget) {
  ThresholdResult out;
  for (const auto& d : pool) {
    if (!std::isfinite(d.score))
      throw OdisError("compute_threshold: non-finite score for '" + d.id + "'");
    if (d.tokens < 0)
      throw OdisError("compute_threshold: negative token count for '" + d.id + "'");
  }
  if (budget <= 0) return out;

  std::sort(pool.begin(), pool.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });

  int64_t cum = 0;
  size_t taken = 0;
  for (const auto& d : pool) {
    if (cum + d.tokens > budget) break;
    cum += d.tokens;
    ++taken;
  }
  if (taken == 0) return out;

  out.threshold = pool[taken - 1].score;
  out.token_total = cum;
  out.selected_ids.reserve(taken);
  for (size_t i = 0; i < taken; ++i) out.selected_ids.push_back(pool[i].id);
  std::sort(out.selected_ids.begin(), out.selected_ids.end());
  return out;
}

SelectionResult select(const BudgetPlan& plan,
                       const std::vector<std::vector<ScoredDoc>>& per_dim_scores) {
  const size_t k = per_dim_scores.size();
  if (k == 0) throw OdisError("select: no score streams");
  if (plan.per_dim.size() != k)
    throw OdisError("select: budget plan has " + std::to_string(plan.per_dim.size()) +
                    " dims, got " + std::to_string(k) + " score streams");
  if (k > 31) throw OdisError("select: more than 31 dimensions unsupported");

  // All streams must cover the same ids, with consistent token counts.
  std::map<std::string, int64_t> tokens;
  for (const auto& d : per_dim_scores[0]) {
    if (!tokens.emplace(d.id, d.tokens).second)
      throw OdisError("select: duplicate id '" + d.id + "' in score stream");
  }
  for (size_t dim = 1; dim < k; ++dim) {
    if (per_dim_scores[dim].size() != tokens.size())
      throw OdisError("select: score streams cover different id sets");
    for (const auto& d : per_dim_scores[dim]) {
      auto it = tokens.find(d.id);
      if (it == tokens.end())
        throw OdisError("select: id '" + d.id + "' missing from stream 0");
      if (it->second != d.tokens)
        throw OdisError("select: inconsistent token count for '" + d.id + "'");
    }
  }

  SelectionResult result;
  result.budgets = plan.per_dim;
  result.thresholds.resize(k);
  result.per_dim_ids.resize(k);
  result.per_dim_token_totals.resize(k);

  for (size_t dim = 0; dim < k; ++dim) {
    ThresholdResult tr =
        compute_threshold(per_dim_scores[dim], plan.per_dim[dim]);
    result.thresholds[dim] = tr.threshold;
    result.per_dim_ids[dim] = std::move(tr.selected_ids);
    result.per_dim_token_totals[dim] = tr.token_total;
  }

  // Membership masks keyed by id; map iteration gives ascending union order.
  std::map<std::string, uint32_t> membership;
  for (size_t dim = 0; dim < k; ++dim)
    for (const auto& id : result.per_dim_ids[dim])
      membership[id] |= (1u << dim);

  std::map<uint32_t, UpSetCell> cells;
  int64_t multi_tokens = 0, multi_docs = 0;
  for (const auto& [id, mask] : membership) {
    int64_t tok = tokens.at(id);
    result.union_ids.push_back(id);
    result.union_token_total += tok;
    auto& cell = cells[mask];
    cell.mask = mask;
    cell.doc_count += 1;
    cell.token_count += tok;
    if ((mask & (mask - 1)) != 0) {  // more than one bit set
      multi_tokens += tok;
      multi_docs += 1;
    }
  }
  for (const auto& [mask, cell] : cells) result.upset.push_back(cell);

  if (result.union_token_total > 0)
    result.overlap_ratio_tokens =
        static_cast<double>(multi_tokens) / static_cast<double>(result.union_token_total);
  if (!result.union_ids.empty())
    result.overlap_ratio_docs =
        static_cast<double>(multi_docs) / static_cast<double>(result.union_ids.size());
  return result;
}

std::vector<UpSetCell> overlap_report(
    const std::vector<std::vector<std::string>>& per_dim_ids,
    const std::map<std::string, int64_t>& token_counts) {
  std::map<std::string, uint32_t> membership;
  for (size_t dim = 0; dim < per_dim_ids.size(); ++dim)
    for (const auto& id : per_dim_ids[dim]) membership[id] |= (1u << dim);
  std::map<uint32_t, UpSetCell> cells;
  for (const auto& [id, mask] : membership) {
    auto it = token_counts.find(id);
    if (it == token_counts.end())
      throw OdisError("overlap_report: no token count for '" + id + "'");
    auto& cell = cells[mask];
    cell.mask = mask;
    cell.doc_count += 1;
    cell.token_count += it->second;
  }
  std::vector<UpSetCell> out;
  for (const auto& [mask, cell] : cells) out.push_back(cell);
  return out;
}

std::vector<Document> export_selection(const SelectionResult& result,
                                       const std::vector<Document>& corpus) {
  std::vector<Document> out;
  std::vector<std::string> missing = result.union_ids;  // ids not yet seen
  for (const auto& doc : corpus) {
    auto it = std::lower_bound(missing.begin(), missing.end(), doc.id);
    if (it != missing.end() && *it == doc.id) {
      out.push_back(doc);
      missing.erase(it);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (size_t i = 0; i < missing.size() && i < 10; ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    if (missing.size() > 10) list += ", ...";
    throw OdisError("export_selection: " + std::to_string(missing.size()) +
                    " selected ids missing from corpus: " + list);
  }
  return out;
}

std::string selection_manifest_json(const SelectionResult& result,
                                    uint64_t config_hash) {
  json j;
  j["format_version"] = 1;
  j["budgets"] = result.budgets;
  json thresholds = json::array();
  for (double t : result.thresholds) {
    if (std::isinf(t)) thresholds.push_back(nullptr);
    else thresholds.push_back(t);
  }
  j["thresholds"] = thresholds;
  j["per_dim_token_totals"] = result.per_dim_token_totals;
  j["per_dim_doc_counts"] = [&] {
    std::vector<size_t> counts;
    for (const auto& ids : result.per_dim_ids) counts.push_back(ids.size());
    return counts;
  }();
  j["union_doc_count"] = result.union_ids.size();
  j["union_token_total"] = result.union_token_total;
  j["overlap_ratio_tokens"] = result.overlap_ratio_tokens;
  j["overlap_ratio_docs"] = result.overlap_ratio_docs;
  json cells = json::array();
  for (const auto& c : result.upset) {
    json cell;
    cell["dims"] = [&] {
      std::vector<int> dims;
      for (int b = 0; b < 31; ++b)
        if (c.mask & (1u << b)) dims.push_back(b);
      return dims;
    }();
    cell["doc_count"] = c.doc_count;
    cell["token_count"] = c.token_count;
    cells.push_back(cell);
  }
  j["upset_cells"] = cells;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

}  // namespace odis
