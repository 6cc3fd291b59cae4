#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "atlas/coverage.hpp"
#include "atlas/sampler.hpp"
#include "test_support.hpp"

namespace atlas {
namespace {

// Pool whose batch b (of `batch` items) brings exactly gains[b].first new
// domain paths and gains[b].second new skill paths, all on its first item.
SamplingPool constructed(const std::vector<std::pair<std::size_t, std::size_t>>& gains, std::size_t batch,
                         std::size_t domain_total, std::size_t skill_total, std::size_t tail = 0) {
  SamplingPool pool;
  pool.benchmark = "constructed";
  pool.domain_total = domain_total;
  pool.skill_total = skill_total;
  std::size_t next_d = 0;
  std::size_t next_s = 0;
  auto item = [&](std::size_t nd, std::size_t ns) {
    PoolItem it;
    it.example_id = "e" + std::to_string(pool.items.size());
    for (std::size_t k = 0; k < nd; ++k) it.domain_paths.push_back(next_d++);
    for (std::size_t k = 0; k < ns; ++k) it.skill_paths.push_back(next_s++);
    pool.items.push_back(it);
  };
  for (const auto& [gd, gs] : gains) {
    item(gd, gs);
    for (std::size_t k = 1; k < batch; ++k) item(0, 0);
  }
  for (std::size_t k = 0; k < tail; ++k) item(0, 0);
  return pool;
}

SamplingParams params(std::size_t batch = 5, double delta = 0.1) {
  SamplingParams p;
  p.batch_size = batch;
  p.delta = delta;
  return p;
}

TEST(Sampler, PoolSmallerThanBatchIsExhausted) {
  const auto run = sample_until_saturation(constructed({{1, 1}}, 3, 10, 10), params());
  EXPECT_EQ(run.selected_ids.size(), 3u);
  EXPECT_EQ(run.reason, StopReason::kExhausted);
  EXPECT_EQ(run.batches, 1u);
}

TEST(Sampler, StopsAfterFirstFlatBatch) {
  const auto pool = constructed({{3, 3}, {0, 0}, {2, 2}}, 5, 10, 10);
  const auto run = sample_until_saturation(pool, params());
  EXPECT_EQ(run.reason, StopReason::kSaturated);
  EXPECT_EQ(run.selected_ids.size(), 10u);
  ASSERT_EQ(run.trace.size(), 2u);
  EXPECT_DOUBLE_EQ(run.trace[0].domain_gain_pp, 30.0);
  EXPECT_DOUBLE_EQ(run.trace[1].domain_gain_pp, 0.0);
  EXPECT_DOUBLE_EQ(run.final_domain_coverage(), 0.3);
}

TEST(Sampler, BothKindsMustSlowDown) {
  // Domain flat in batch 2 but skill still growing.
  const auto pool = constructed({{3, 3}, {0, 1}, {0, 0}, {1, 1}}, 5, 10, 10);
  EXPECT_EQ(sample_until_saturation(pool, params()).selected_ids.size(), 15u);
  auto p = params();
  p.rule = StopRule::kDomain;
  EXPECT_EQ(sample_until_saturation(pool, p).selected_ids.size(), 10u);
  p.rule = StopRule::kEither;
  EXPECT_EQ(sample_until_saturation(pool, p).selected_ids.size(), 10u);
  p.rule = StopRule::kSkill;
  EXPECT_EQ(sample_until_saturation(pool, p).selected_ids.size(), 15u);
}

TEST(Sampler, DeltaIsInPercentagePoints) {
  // One new path in 2000 is 0.05 pp, below 0.1.
  const auto pool = constructed({{5, 5}, {1, 1}, {4, 4}}, 5, 2000, 2000);
  EXPECT_EQ(sample_until_saturation(pool, params()).selected_ids.size(), 10u);
  // One in 500 is 0.2 pp, enough to continue.
  const auto pool2 = constructed({{5, 5}, {1, 1}, {0, 0}, {4, 4}}, 5, 500, 500);
  EXPECT_EQ(sample_until_saturation(pool2, params()).selected_ids.size(), 15u);
}

TEST(Sampler, RejectsBadParameters) {
  const auto pool = constructed({{1, 1}}, 5, 10, 10);
  EXPECT_THROW(sample_until_saturation(pool, params(0)), std::invalid_argument);
  EXPECT_THROW(sample_until_saturation(pool, params(5, 0.0)), std::invalid_argument);
  EXPECT_THROW(sample_until_saturation(pool, params(5, -1.0)), std::invalid_argument);
  EXPECT_THROW(sample_until_saturation(SamplingPool{}, params()), std::invalid_argument);
  EXPECT_THROW(parse_stop_rule("sometimes"), std::invalid_argument);
}

// Independent replay of the stopping rule.
std::size_t replay_by_hand(const SamplingPool& pool, std::size_t batch, double delta) {
  std::set<std::size_t> d;
  std::set<std::size_t> s;
  std::size_t i = 0;
  while (i < pool.items.size()) {
    const std::size_t before_d = d.size();
    const std::size_t before_s = s.size();
    const std::size_t end = std::min(i + batch, pool.items.size());
    for (; i < end; ++i) {
      d.insert(pool.items[i].domain_paths.begin(), pool.items[i].domain_paths.end());
      s.insert(pool.items[i].skill_paths.begin(), pool.items[i].skill_paths.end());
    }
    const double gd = 100.0 * static_cast<double>(d.size() - before_d) / static_cast<double>(pool.domain_total);
    const double gs = 100.0 * static_cast<double>(s.size() - before_s) / static_cast<double>(pool.skill_total);
    if (gd < delta && gs < delta) return i;
  }
  return i;
}

SamplingPool random_pool(std::mt19937_64& rng) {
  SamplingPool pool;
  pool.benchmark = "r";
  pool.domain_total = 50 + rng() % 2000;
  pool.skill_total = 20 + rng() % 60;
  const std::size_t n = 1 + rng() % 120;
  for (std::size_t i = 0; i < n; ++i) {
    PoolItem it;
    it.example_id = std::to_string(i);
    const std::size_t kd = rng() % 4;
    const std::size_t ks = rng() % 3;
    for (std::size_t k = 0; k < kd; ++k) it.domain_paths.push_back(rng() % pool.domain_total);
    for (std::size_t k = 0; k < ks; ++k) it.skill_paths.push_back(rng() % pool.skill_total);
    pool.items.push_back(it);
  }
  return pool;
}

TEST(SamplerProperty, MatchesHandReplayAndStopsSoundly) {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 300; ++round) {
    const auto pool = random_pool(rng);
    const std::size_t batch = 1 + rng() % 7;
    const auto run = sample_until_saturation(pool, params(batch));
    ASSERT_EQ(run.selected_ids.size(), replay_by_hand(pool, batch, 0.1)) << "round " << round;
    ASSERT_EQ(run.trace.size(), run.batches);
    for (std::size_t b = 0; b + 1 < run.trace.size(); ++b) {
      EXPECT_TRUE(run.trace[b].domain_gain_pp >= 0.1 || run.trace[b].skill_gain_pp >= 0.1);
    }
    if (run.reason == StopReason::kSaturated) {
      EXPECT_LT(run.trace.back().domain_gain_pp, 0.1);
      EXPECT_LT(run.trace.back().skill_gain_pp, 0.1);
    } else {
      EXPECT_EQ(run.selected_ids.size(), pool.items.size());
    }
    for (std::size_t b = 1; b < run.trace.size(); ++b) {
      EXPECT_GE(run.trace[b].domain_coverage, run.trace[b - 1].domain_coverage);
      EXPECT_GE(run.trace[b].skill_coverage, run.trace[b - 1].skill_coverage);
    }
    // Selection is a prefix of the pool made of whole batches.
    for (std::size_t i = 0; i < run.selected_ids.size(); ++i) EXPECT_EQ(run.selected_ids[i], pool.items[i].example_id);
    if (run.selected_ids.size() < pool.items.size()) EXPECT_EQ(run.selected_ids.size() % batch, 0u);
  }
}

TEST(SamplerProperty, TraceEqualsCoverageOfSelectedPrefix) {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 50; ++round) {
    const Taxonomy d = testing::random_taxonomy(TaxonomyKind::kDomain, rng);
    const Taxonomy s = testing::random_taxonomy(TaxonomyKind::kSkill, rng);
    std::vector<MappingResult> results;
    const std::size_t n = 5 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> di{rng() % d.path_count()};
      std::vector<std::size_t> si{rng() % s.path_count()};
      results.push_back(testing::mapped("b", std::to_string(i), d, di));
      results.push_back(testing::mapped("b", std::to_string(i), s, si));
    }
    const auto pool = build_pool(results, d, s, "b");
    ASSERT_EQ(pool.items.size(), n);
    const auto run = sample_until_saturation(pool, params(3));
    for (std::size_t b = 0; b < run.trace.size(); ++b) {
      const std::size_t upto = run.trace[b].selected;
      std::vector<MappingResult> dom;
      std::vector<MappingResult> sk;
      for (std::size_t i = 0; i < upto; ++i) {
        dom.push_back(results[2 * i]);
        sk.push_back(results[2 * i + 1]);
      }
      EXPECT_EQ(run.trace[b].domain_coverage, coverage(dom, d).coverage);
      EXPECT_EQ(run.trace[b].skill_coverage, coverage(sk, s).coverage);
    }
  }
}

TEST(Chao1, KnownValues) {
  const std::vector<std::size_t> a{1, 1, 1, 1, 2, 2, 3, 3, 5, 8};
  EXPECT_EQ(chao1(a), 14.0);
  const std::vector<std::size_t> b{1, 1, 1, 4, 6};
  EXPECT_EQ(chao1(b), 8.0);
  const std::vector<std::size_t> c{2, 3, 7};
  EXPECT_EQ(chao1(c), 3.0);
  const std::map<std::size_t, std::size_t> m{{4, 1}, {9, 2}, {11, 2}};
  EXPECT_EQ(chao1(m), 3.0 + 1.0 / 4.0);
  EXPECT_THROW(chao1(std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(chao1(std::vector<std::size_t>{1, 0}), std::invalid_argument);
}

TEST(Chao1Property, NeverBelowObserved) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::size_t> counts(1 + rng() % 30);
    for (auto& c : counts) c = 1 + rng() % 4;
    const double est = chao1(counts);
    EXPECT_GE(est, static_cast<double>(counts.size()));
    const auto f1 = std::count(counts.begin(), counts.end(), 1u);
    const auto f2 = std::count(counts.begin(), counts.end(), 2u);
    // The bias-corrected branch also adds nothing for a lone singleton.
    const bool adds_nothing = f1 == 0 || (f1 == 1 && f2 == 0);
    EXPECT_EQ(est == static_cast<double>(counts.size()), adds_nothing);
  }
}

TEST(Percentile, Interpolates) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(percentile({10, 0}, 0.5), 5.0);
  const std::vector<double> v{4, 4, 4};
  const auto d = summarize(v);
  EXPECT_EQ(d.lo, 4.0);
  EXPECT_EQ(d.hi, 4.0);
  EXPECT_EQ(d.median, 4.0);
}

TEST(Shuffle, DeterministicPermutation) {
  std::mt19937_64 rng(5);
  const auto pool = random_pool(rng);
  const auto a = shuffle_pool(pool, 77);
  const auto b = shuffle_pool(pool, 77);
  ASSERT_EQ(a.items.size(), pool.items.size());
  std::multiset<std::string> ids_a;
  std::multiset<std::string> ids_p;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(a.items[i].example_id, b.items[i].example_id);
    ids_a.insert(a.items[i].example_id);
    ids_p.insert(pool.items[i].example_id);
  }
  EXPECT_EQ(ids_a, ids_p);
  EXPECT_NE(derive_seed(77, 0), derive_seed(77, 1));
  std::mt19937_64 g(1);
  EXPECT_THROW(uniform_index(g, 0), std::invalid_argument);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(uniform_index(g, 7), 7u);
}

TEST(Sensitivity, SingleBatchPoolIsPointMass) {
  const auto pool = constructed({{2, 2}}, 4, 10, 10);
  const auto s = permutation_sensitivity(pool, params(), 500, 42);
  EXPECT_EQ(s.runs.size(), 500u);
  EXPECT_EQ(s.stop_size.lo, 4.0);
  EXPECT_EQ(s.stop_size.hi, 4.0);
  EXPECT_EQ(s.stop_size.mean, 4.0);
  EXPECT_EQ(s.stop_size.median, 4.0);
}

std::string sensitivity_bytes(const SensitivitySummary& s) {
  std::ostringstream out;
  const std::vector<SensitivitySummary> one{s};
  write_sensitivity_csv(out, one);
  write_sensitivity_detail_csv(out, one);
  for (const auto& r : s.runs) out << r.seed << ',' << r.stop_size << ',' << r.domain_coverage << '\n';
  return out.str();
}

TEST(Sensitivity, SameSeedSameBytes) {
  // Two path-disjoint halves.
  SamplingPool pool;
  pool.benchmark = "halves";
  pool.domain_total = 200;
  pool.skill_total = 100;
  for (std::size_t i = 0; i < 60; ++i) {
    PoolItem it;
    it.example_id = std::to_string(i);
    it.domain_paths = {i < 30 ? i % 7 : 100 + i % 11};
    it.skill_paths = {i < 30 ? i % 5 : 50 + i % 9};
    pool.items.push_back(it);
  }
  const auto a = permutation_sensitivity(pool, params(), 500, 42);
  const auto b = permutation_sensitivity(pool, params(), 500, 42);
  const auto c = permutation_sensitivity(pool, params(), 500, 42, 4);
  EXPECT_EQ(sensitivity_bytes(a), sensitivity_bytes(b));
  EXPECT_EQ(sensitivity_bytes(a), sensitivity_bytes(c));
  EXPECT_LE(a.stop_size.lo, a.stop_size.median);
  EXPECT_GE(a.stop_size.hi, a.stop_size.median);
  const auto d = permutation_sensitivity(pool, params(), 500, 43);
  EXPECT_NE(sensitivity_bytes(a), sensitivity_bytes(d));
}

TEST(Pools, FixtureJoin) {
  const Taxonomy d = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  const Taxonomy s = load_taxonomy_file(testing::fixture("skill_taxonomy.json"));
  const auto all = read_mappings_file(testing::fixture("mappings.jsonl"), d, s);
  const auto pools = build_pools(all, d, s);
  ASSERT_EQ(pools.size(), 2u);
  EXPECT_EQ(pools[0].benchmark, "CodeTasks");
  EXPECT_EQ(pools[0].items.size(), 10u);
  EXPECT_EQ(pools[0].domain_total, 12u);
  EXPECT_EQ(pools[0].skill_total, 10u);
}

}  // namespace
}  // namespace atlas
