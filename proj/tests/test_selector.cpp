#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "odis/rng.hpp"
#include "odis/selector.hpp"

using namespace odis;

namespace {

std::vector<ScoredDoc> pool_from(const std::vector<double>& scores,
                                 const std::vector<int64_t>& tokens) {
  std::vector<ScoredDoc> out;
  for (size_t i = 0; i < scores.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "d%03zu", i);
    out.push_back({id, scores[i], tokens[i]});
  }
  return out;
}

// Brute-force membership map over per-dim selections.
std::map<std::string, uint32_t> brute_membership(
    const std::vector<std::vector<std::string>>& per_dim_ids) {
  std::map<std::string, uint32_t> m;
  for (size_t d = 0; d < per_dim_ids.size(); ++d)
    for (const auto& id : per_dim_ids[d]) m[id] |= 1u << d;
  return m;
}

}  // namespace

TEST_CASE("allocate_budget") {
  SUBCASE("uniform split of 100 over 4") {
    BudgetPlan p = allocate_budget(100, {}, 4, BudgetStrategy::uniform);
    CHECK(p.per_dim == std::vector<int64_t>{25, 25, 25, 25});
  }
  SUBCASE("variance proportional 4:3:2:1") {
    BudgetPlan p = allocate_budget(100, {4, 3, 2, 1}, 4,
                                   BudgetStrategy::variance_proportional);
    CHECK(p.per_dim == std::vector<int64_t>{40, 30, 20, 10});
  }
  SUBCASE("largest remainder, ties to the lowest index") {
    BudgetPlan p = allocate_budget(10, {}, 3, BudgetStrategy::uniform);
    CHECK(p.per_dim == std::vector<int64_t>{4, 3, 3});
  }
  SUBCASE("per-dim budgets always sum to the total") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      int k = 1 + static_cast<int>(rng.uniform_int(0, 7));
      int64_t total = 1 + rng.uniform_int(0, 100000);
      std::vector<double> evals;
      for (int i = 0; i < k; ++i) evals.push_back(rng.uniform(0.01, 5.0));
      std::sort(evals.rbegin(), evals.rend());
      for (auto strat : {BudgetStrategy::uniform, BudgetStrategy::variance_proportional}) {
        BudgetPlan p = allocate_budget(total, evals, k, strat);
        int64_t sum = 0;
        for (int64_t v : p.per_dim) {
          CHECK(v >= 0);
          sum += v;
        }
        CHECK(sum == total);
      }
    }
  }
}

TEST_CASE("compute_threshold") {
  SUBCASE("greedy prefix with t_k at the boundary") {
    auto r = compute_threshold(pool_from({5, 4, 3, 2, 1}, {10, 10, 10, 10, 10}), 25);
    CHECK(r.threshold == 4.0);
    CHECK(r.selected_ids == std::vector<std::string>{"d000", "d001"});
    CHECK(r.token_total == 20);
  }
  SUBCASE("budget above pool selects everything, threshold = min score") {
    auto r = compute_threshold(pool_from({5, 4, 3}, {10, 10, 10}), 1000);
    CHECK(r.threshold == 3.0);
    CHECK(r.selected_ids.size() == 3);
  }
  SUBCASE("all scores equal: lexicographically smallest id wins") {
    auto r = compute_threshold(pool_from({2, 2, 2}, {10, 10, 10}), 15);
    CHECK(r.selected_ids == std::vector<std::string>{"d000"});
    CHECK(r.threshold == 2.0);
  }
  SUBCASE("non-positive budget selects nothing with +inf sentinel") {
    auto r = compute_threshold(pool_from({5, 4}, {10, 10}), 0);
    CHECK(r.selected_ids.empty());
    CHECK(std::isinf(r.threshold));
  }
  SUBCASE("first doc alone over budget") {
    auto r = compute_threshold(pool_from({5, 4}, {100, 1}), 50);
    CHECK(r.selected_ids.empty());
    CHECK(std::isinf(r.threshold));
  }
  SUBCASE("non-finite score rejected") {
    CHECK_THROWS_AS(
        compute_threshold(pool_from({std::nan("")}, {10}), 10), OdisError);
  }
}

TEST_CASE("select: hand cases") {
  SUBCASE("disjoint dims union to the sum") {
    // dim0 favors d000/d001, dim1 favors d002/d003
    std::vector<std::vector<ScoredDoc>> pools = {
        pool_from({9, 8, 1, 0}, {10, 10, 10, 10}),
        pool_from({1, 0, 9, 8}, {10, 10, 10, 10}),
    };
    BudgetPlan plan = allocate_budget(40, {}, 2, BudgetStrategy::uniform);
    SelectionResult r = select(plan, pools);
    CHECK(r.union_ids.size() == 4);
    CHECK(r.overlap_ratio_tokens == 0.0);
    CHECK(r.overlap_ratio_docs == 0.0);
    REQUIRE(r.upset.size() == 2);
    CHECK(r.upset[0].mask == 1u);
    CHECK(r.upset[0].doc_count == 2);
    CHECK(r.upset[1].mask == 2u);
    CHECK(r.upset[1].doc_count == 2);
  }
  SUBCASE("identical dims collapse to one set") {
    std::vector<std::vector<ScoredDoc>> pools = {
        pool_from({9, 8, 1}, {10, 10, 10}),
        pool_from({9, 8, 1}, {10, 10, 10}),
    };
    BudgetPlan plan = allocate_budget(40, {}, 2, BudgetStrategy::uniform);
    SelectionResult r = select(plan, pools);
    CHECK(r.union_ids.size() == 2);
    CHECK(r.overlap_ratio_tokens == 1.0);
    REQUIRE(r.upset.size() == 1);
    CHECK(r.upset[0].mask == 3u);
    CHECK(r.upset[0].doc_count == 2);
  }
  SUBCASE("inconsistent id sets rejected") {
    std::vector<std::vector<ScoredDoc>> pools = {
        pool_from({9, 8}, {10, 10}),
        {{"other", 1.0, 10}, {"d000", 2.0, 10}},
    };
    BudgetPlan plan = allocate_budget(10, {}, 2, BudgetStrategy::uniform);
    CHECK_THROWS_AS(select(plan, pools), OdisError);
  }
}

TEST_CASE("selection properties on seeded random pools") {
  Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const size_t n = 2 + static_cast<size_t>(rng.uniform_int(0, 38));
    const int k = 1 + static_cast<int>(rng.uniform_int(0, 4));

    std::vector<int64_t> tokens;
    for (size_t i = 0; i < n; ++i) tokens.push_back(rng.uniform_int(1, 50));
    int64_t pool_tokens = 0;
    for (int64_t t : tokens) pool_tokens += t;

    std::vector<std::vector<ScoredDoc>> pools;
    for (int d = 0; d < k; ++d) {
      std::vector<double> scores;
      // coarse scores force ties through the deterministic id rule
      for (size_t i = 0; i < n; ++i)
        scores.push_back(static_cast<double>(rng.uniform_int(0, 8)) / 2.0);
      pools.push_back(pool_from(scores, tokens));
    }
    int64_t budget = 1 + rng.uniform_int(0, pool_tokens);
    BudgetPlan plan = allocate_budget(budget, {}, k, BudgetStrategy::uniform);
    SelectionResult r = select(plan, pools);

    for (int d = 0; d < k; ++d) {
      // budget adherence
      CHECK(r.per_dim_token_totals[static_cast<size_t>(d)] <=
            plan.per_dim[static_cast<size_t>(d)]);

      std::set<std::string> chosen(r.per_dim_ids[static_cast<size_t>(d)].begin(),
                                   r.per_dim_ids[static_cast<size_t>(d)].end());
      // maximality: the best unselected doc must not fit
      const auto& pool = pools[static_cast<size_t>(d)];
      std::vector<ScoredDoc> unselected;
      for (const auto& doc : pool)
        if (!chosen.count(doc.id)) unselected.push_back(doc);
      std::sort(unselected.begin(), unselected.end(),
                [](const ScoredDoc& a, const ScoredDoc& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.id < b.id;
                });
      if (!unselected.empty()) {
        CHECK(r.per_dim_token_totals[static_cast<size_t>(d)] +
                  unselected.front().tokens >
              plan.per_dim[static_cast<size_t>(d)]);
      }
      // top property: every unselected score <= every selected score
      if (!chosen.empty() && !unselected.empty()) {
        double min_sel = 1e300;
        for (const auto& doc : pool)
          if (chosen.count(doc.id)) min_sel = std::min(min_sel, doc.score);
        for (const auto& doc : unselected) CHECK(doc.score <= min_sel);
      }
    }

    // union and upset agree with brute force
    auto membership = brute_membership(r.per_dim_ids);
    CHECK(membership.size() == r.union_ids.size());
    int64_t brute_cells = 0;
    for (const auto& cell : r.upset) brute_cells += cell.doc_count;
    CHECK(brute_cells == static_cast<int64_t>(r.union_ids.size()));
    std::map<uint32_t, int64_t> brute_count;
    for (const auto& [id, mask] : membership) brute_count[mask] += 1;
    for (const auto& cell : r.upset) CHECK(brute_count[cell.mask] == cell.doc_count);

    // tie determinism: a rerun is identical
    SelectionResult r2 = select(plan, pools);
    CHECK(r2.union_ids == r.union_ids);
    CHECK(r2.thresholds == r.thresholds);

    // scale invariance: scaling all scores leaves selections unchanged
    std::vector<std::vector<ScoredDoc>> scaled = pools;
    for (auto& pool : scaled)
      for (auto& doc : pool) doc.score *= 7.5;
    SelectionResult r3 = select(plan, scaled);
    CHECK(r3.per_dim_ids == r.per_dim_ids);
  }
}

TEST_CASE("overlap_report matches exhaustive enumeration") {
  std::vector<std::vector<std::string>> per_dim = {
      {"a", "b", "c"}, {"b", "c", "d"}, {"c", "e"}};
  std::map<std::string, int64_t> tokens{
      {"a", 1}, {"b", 2}, {"c", 4}, {"d", 8}, {"e", 16}};
  auto cells = overlap_report(per_dim, tokens);

  std::map<uint32_t, std::pair<int64_t, int64_t>> expect;  // mask -> docs, tokens
  for (const auto& [id, tok] : tokens) {
    uint32_t mask = 0;
    for (size_t d = 0; d < per_dim.size(); ++d)
      if (std::count(per_dim[d].begin(), per_dim[d].end(), id))
        mask |= 1u << d;
    if (mask) {
      expect[mask].first += 1;
      expect[mask].second += tok;
    }
  }
  REQUIRE(cells.size() == expect.size());
  for (const auto& cell : cells) {
    CHECK(expect[cell.mask].first == cell.doc_count);
    CHECK(expect[cell.mask].second == cell.token_count);
  }
}

TEST_CASE("export_selection") {
  std::vector<Document> corpus = {{"a", "ta", 1, {}},
                                  {"b", "tb", 2, {}},
                                  {"c", "tc", 3, {}},
                                  {"d", "td", 4, {}},
                                  {"e", "te", 5, {}}};
  SelectionResult r;
  r.union_ids = {"b", "d", "e"};
  SUBCASE("preserves corpus order") {
    auto out = export_selection(r, corpus);
    REQUIRE(out.size() == 3);
    CHECK(out[0].id == "b");
    CHECK(out[1].id == "d");
    CHECK(out[2].id == "e");
  }
  SUBCASE("empty union") {
    SelectionResult empty;
    CHECK(export_selection(empty, corpus).empty());
  }
  SUBCASE("full union is the identity filter") {
    SelectionResult full;
    full.union_ids = {"a", "b", "c", "d", "e"};
    auto out = export_selection(full, corpus);
    REQUIRE(out.size() == corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
      CHECK(out[i].id == corpus[i].id);
      CHECK(out[i].text == corpus[i].text);
      CHECK(out[i].token_count == corpus[i].token_count);
    }
  }
  SUBCASE("missing id raises with the id listed") {
    SelectionResult bad;
    bad.union_ids = {"a", "zz"};
    try {
      export_selection(bad, corpus);
      FAIL("expected error");
    } catch (const OdisError& e) {
      CHECK(std::string(e.what()).find("zz") != std::string::npos);
    }
  }
}

TEST_CASE("selection manifest serializes +inf thresholds as null") {
  SelectionResult r;
  r.thresholds = {2.5, std::numeric_limits<double>::infinity()};
  r.per_dim_ids = {{"a"}, {}};
  r.per_dim_token_totals = {5, 0};
  r.budgets = {5, 5};
  r.union_ids = {"a"};
  r.union_token_total = 5;
  UpSetCell cell;
  cell.mask = 1;
  cell.doc_count = 1;
  cell.token_count = 5;
  r.upset = {cell};

  auto j = nlohmann::json::parse(selection_manifest_json(r, 42));
  CHECK(j["thresholds"][0] == 2.5);
  CHECK(j["thresholds"][1].is_null());
  CHECK(j["upset_cells"][0]["dims"][0] == 0);
  CHECK(j["config_hash"] == 42);
}
