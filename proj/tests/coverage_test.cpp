#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "atlas/coverage.hpp"
#include "test_support.hpp"

namespace atlas {
namespace {

using testing::inner;
using testing::leaf;
using testing::mapped;

// Two families, 10 leaves: family A has 2 occupations of 3 leaves, family B
// one occupation of 4.
Taxonomy ten_paths() {
  auto occ = [](const std::string& id, int n) {
    std::vector<TaxonomyNode> leaves;
    for (int i = 0; i < n; ++i) leaves.push_back(leaf(id + "." + std::to_string(i), id + " task " + std::to_string(i)));
    return inner(id, "occ " + id, std::move(leaves));
  };
  return build_taxonomy(TaxonomyKind::kDomain,
                        inner("r", "r", {inner("A", "Family A", {occ("A1", 3), occ("A2", 3)}),
                                         inner("B", "Family B", {occ("B1", 4)})}));
}

MappingResult unmapped(const std::string& bench, const std::string& id, MappingStatus s) {
  MappingResult r;
  r.example = {bench, id};
  r.status = s;
  return r;
}

TEST(Coverage, NothingMappedIsZero) {
  const Taxonomy t = ten_paths();
  std::vector<MappingResult> rs{unmapped("b", "1", MappingStatus::kEmpty),
                                unmapped("b", "2", MappingStatus::kInvalid)};
  EXPECT_DOUBLE_EQ(coverage(rs, t).coverage, 0.0);
  EXPECT_DOUBLE_EQ(coverage({}, t).coverage, 0.0);
}

TEST(Coverage, DistinctPathsOverTotal) {
  const Taxonomy t = ten_paths();
  std::vector<MappingResult> rs{mapped("b", "1", t, {1, 2}), mapped("b", "2", t, {2}),
                                mapped("c", "3", t, {4, 7})};
  const auto rep = coverage(rs, t);
  EXPECT_EQ(rep.total_paths, 10u);
  EXPECT_EQ(rep.covered_paths.size(), 4u);
  EXPECT_DOUBLE_EQ(rep.coverage, 0.4);
  EXPECT_DOUBLE_EQ(rep.per_benchmark.at("b"), 0.2);
  EXPECT_DOUBLE_EQ(rep.per_benchmark.at("c"), 0.2);
}

TEST(Coverage, ForeignKindIsRejected) {
  const Taxonomy t = ten_paths();
  const Taxonomy s = testing::balanced(TaxonomyKind::kSkill, 2);
  std::vector<MappingResult> rs{mapped("b", "1", s, {0})};
  EXPECT_THROW(coverage(rs, t), InputError);
}

TEST(Coverage, FixtureCorpus) {
  const Taxonomy d = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  const Taxonomy s = load_taxonomy_file(testing::fixture("skill_taxonomy.json"));
  const auto all = read_mappings_file(testing::fixture("mappings.jsonl"), d, s);
  EXPECT_EQ(coverage(select_kind(all, TaxonomyKind::kDomain), d).covered_paths.size(), 11u);
  EXPECT_EQ(coverage(select_kind(all, TaxonomyKind::kSkill), s).covered_paths.size(), 9u);
}

TEST(Effort, DistinctNodesPerExample) {
  const Taxonomy t = ten_paths();
  // Paths 0 and 4 share family A; 0 and 8 span A and B.
  std::vector<MappingResult> same{mapped("b", "1", t, {0, 4})};
  const auto e1 = effort_by_node(same, t, GroupLevel::domain_family());
  EXPECT_EQ(e1.count_for("A"), 1u);
  EXPECT_EQ(e1.count_for("B"), 0u);

  std::vector<MappingResult> two{mapped("b", "1", t, {0, 8})};
  const auto e2 = effort_by_node(two, t, GroupLevel::domain_family());
  EXPECT_EQ(e2.count_for("A"), 1u);
  EXPECT_EQ(e2.count_for("B"), 1u);
  EXPECT_EQ(e2.total_incidences(), 2u);
}

TEST(Effort, LevelKindMismatchThrows) {
  const Taxonomy t = ten_paths();
  EXPECT_ANY_THROW(effort_by_node({}, t, GroupLevel::skill_category()));
}

TEST(Breadth, CountsFamiliesAndShares) {
  const Taxonomy t = ten_paths();
  std::vector<MappingResult> rs{mapped("b", "1", t, {0}), mapped("b", "2", t, {0, 3, 8}),
                                unmapped("b", "3", MappingStatus::kEmpty),
                                mapped("b", "4", t, {9})};
  const auto b = breadth(rs, t, GroupLevel::domain_family());
  EXPECT_EQ(b.per_example.at({"b", "1"}), 1u);
  EXPECT_EQ(b.per_example.at({"b", "2"}), 2u);
  EXPECT_EQ(b.total_examples, 4u);
  EXPECT_DOUBLE_EQ(b.share_zero, 0.25);
  EXPECT_DOUBLE_EQ(b.share_one, 0.5);
  EXPECT_DOUBLE_EQ(b.share_gt1, 0.25);
  EXPECT_DOUBLE_EQ(b.share_ge4, 0.0);
  EXPECT_DOUBLE_EQ(b.per_benchmark_mean.at("b"), 4.0 / 3.0);

  const auto occ = breadth(rs, t, GroupLevel::domain_occupation());
  EXPECT_EQ(occ.per_example.at({"b", "2"}), 3u);
}

// Random corpus over `t`: some examples unmapped, the rest 1-4 random paths.
std::vector<MappingResult> random_corpus(const Taxonomy& t, std::mt19937_64& rng, std::size_t n) {
  std::vector<MappingResult> out;
  const std::string bench[] = {"x", "y", "z"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx;
    if (rng() % 6 != 0) {
      const std::size_t k = 1 + rng() % 4;
      for (std::size_t j = 0; j < k; ++j) idx.push_back(rng() % t.path_count());
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    out.push_back(mapped(bench[rng() % 3], std::to_string(i), t, idx));
  }
  return out;
}

double brute_force(const std::vector<MappingResult>& rs, std::size_t n, const Taxonomy& t) {
  std::set<std::string> keys;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : rs[i].paths) keys.insert(p.key());
  }
  return static_cast<double>(keys.size()) / static_cast<double>(t.path_count());
}

TEST(CoverageProperty, IncrementalMatchesSetUnionOnEveryPrefix) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 200; ++round) {
    const Taxonomy t = testing::random_taxonomy(TaxonomyKind::kDomain, rng);
    const auto corpus = random_corpus(t, rng, 1 + rng() % 40);
    CoverageAccumulator acc(t);
    double last = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      acc.add(corpus[i]);
      const double expect = brute_force(corpus, i + 1, t);
      ASSERT_EQ(acc.fraction(), expect) << "round " << round << " prefix " << i + 1;
      ASSERT_GE(acc.fraction(), last);
      last = acc.fraction();
      const std::vector<MappingResult> prefix(corpus.begin(), corpus.begin() + static_cast<long>(i) + 1);
      ASSERT_EQ(coverage(prefix, t).coverage, expect);
    }
  }
}

TEST(CoverageProperty, MergeAndUnion) {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 100; ++round) {
    const Taxonomy t = testing::random_taxonomy(TaxonomyKind::kSkill, rng);
    const auto a = random_corpus(t, rng, rng() % 20);
    const auto b = random_corpus(t, rng, rng() % 20);
    CoverageAccumulator ca(t);
    CoverageAccumulator cb(t);
    for (const auto& r : a) ca.add(r);
    for (const auto& r : b) cb.add(r);
    CoverageAccumulator ab = ca;
    ab.merge(cb);
    CoverageAccumulator ba = cb;
    ba.merge(ca);
    EXPECT_EQ(ab.covered(), ba.covered());
    EXPECT_GE(ab.fraction(), ca.fraction());
    EXPECT_GE(ab.fraction(), cb.fraction());
    auto joined = a;
    joined.insert(joined.end(), b.begin(), b.end());
    EXPECT_EQ(ab.fraction(), coverage(joined, t).coverage);
  }
}

TEST(EffortProperty, ConservationAndPermutationInvariance) {
  std::mt19937_64 rng(808);
  for (int round = 0; round < 100; ++round) {
    const Taxonomy t = testing::random_taxonomy(TaxonomyKind::kDomain, rng);
    auto corpus = random_corpus(t, rng, 1 + rng() % 30);
    for (const GroupLevel level : {GroupLevel::domain_family(), GroupLevel::domain_occupation()}) {
      const auto e = effort_by_node(corpus, t, level);
      const auto b = breadth(corpus, t, level);
      std::size_t breadth_sum = 0;
      for (const auto& [ref, n] : b.per_example) breadth_sum += n;
      EXPECT_EQ(e.total_incidences(), breadth_sum);

      auto shuffled = corpus;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto e2 = effort_by_node(shuffled, t, level);
      ASSERT_EQ(e.counts.size(), e2.counts.size());
      for (std::size_t i = 0; i < e.counts.size(); ++i) EXPECT_EQ(e.counts[i].count, e2.counts[i].count);
      const auto b2 = breadth(shuffled, t, level);
      EXPECT_EQ(b.per_example, b2.per_example);
      EXPECT_EQ(b.histogram, b2.histogram);
      EXPECT_EQ(coverage(corpus, t).covered_paths, coverage(shuffled, t).covered_paths);
    }
  }
}

TEST(CoverageReportOutput, CsvColumns) {
  const Taxonomy t = ten_paths();
  std::vector<MappingResult> rs{mapped("b", "1", t, {1})};
  std::vector<CoverageReport> reps{coverage(rs, t, "ALL")};
  std::ostringstream out;
  write_coverage_csv(out, reps);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "benchmark,kind,covered_paths,total_paths,coverage");
  std::ostringstream eff;
  write_effort_csv(eff, effort_by_node(rs, t, GroupLevel::domain_family()));
  EXPECT_EQ(eff.str().substr(0, eff.str().find('\n')), "level,node_id,label,count,share");
}

}  // namespace
}  // namespace atlas
