#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "atlas/taxonomy.hpp"
#include "atlas/text.hpp"
#include "test_support.hpp"

namespace atlas {
namespace {

using testing::inner;
using testing::leaf;

// 2 families, 3 occupations, 5 task leaves.
Taxonomy five_leaf() {
  return build_taxonomy(
      TaxonomyKind::kDomain,
      inner("root", "Occupations",
            {inner("F1", "Family One",
                   {inner("O1", "Occ One", {leaf("T1", "task one"), leaf("T2", "task two")}),
                    inner("O2", "Occ Two", {leaf("T3", "task three")})}),
             inner("F2", "Family Two", {inner("O3", "Occ Three", {leaf("T4", "task four"), leaf("T5", "task five")})})}));
}

std::size_t count_lines_starting(const std::string& s, const std::string& marker) {
  std::size_t n = 0;
  for (const auto& line : text::split(s, '\n')) {
    if (text::trim(line).substr(0, marker.size()) == marker) ++n;
  }
  return n;
}

TEST(Taxonomy, FixtureHasThreeFamiliesSixOccupationsTwelveLeaves) {
  const Taxonomy t = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  EXPECT_EQ(t.kind(), TaxonomyKind::kDomain);
  EXPECT_EQ(t.nodes_at_level(1).size(), 3u);
  EXPECT_EQ(t.nodes_at_level(2).size(), 6u);
  EXPECT_EQ(t.nodes_at_level(3).size(), 12u);
  EXPECT_EQ(t.path_count(), 12u);
}

TEST(Taxonomy, FiveLeafFixtureHasFivePaths) {
  const Taxonomy t = five_leaf();
  EXPECT_EQ(t.path_count(), 5u);
  EXPECT_EQ(all_paths(t).size(), 5u);
  EXPECT_EQ(t.paths()[2].node_ids(), (std::vector<std::string>{"F1", "O2", "T3"}));
}

TEST(Taxonomy, BalancedBinaryTreeHasEightPaths) {
  EXPECT_EQ(testing::balanced(TaxonomyKind::kSkill, 2).path_count(), 8u);
}

TEST(Taxonomy, RootWithoutChildrenIsRejected) {
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain, leaf("root", "r")), TaxonomyError);
  EXPECT_THROW(load_taxonomy_string(R"({"kind":"domain","root":{"id":"r","label":"r","children":[]}})"),
               TaxonomyError);
}

TEST(Taxonomy, StructuralViolations) {
  // Leaf above depth 3.
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain,
                              inner("root", "r", {inner("F", "f", {leaf("O", "o")})})),
               TaxonomyError);
  // Tree deeper than 3.
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain,
                              inner("root", "r", {inner("F", "f", {inner("O", "o", {inner("T", "t", {leaf("X", "x")})})})})),
               TaxonomyError);
  // Duplicate id.
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain,
                              inner("root", "r", {inner("F", "f", {inner("O", "o", {leaf("T", "a"), leaf("T", "b")})})})),
               TaxonomyError);
  // Empty label.
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain,
                              inner("root", "r", {inner("F", "", {inner("O", "o", {leaf("T", "t")})})})),
               TaxonomyError);
  // SOC code on a leaf.
  TaxonomyNode bad = leaf("T", "t");
  bad.annotations["soc_code"] = "11-1011";
  EXPECT_THROW(build_taxonomy(TaxonomyKind::kDomain, inner("root", "r", {inner("F", "f", {inner("O", "o", {bad})})})),
               TaxonomyError);
  // Declared level disagrees with position.
  EXPECT_THROW(load_taxonomy_string(R"({"kind":"skill","root":{"id":"r","label":"r","children":[
      {"id":"a","label":"a","level":2,"children":[{"id":"b","label":"b","children":[{"id":"c","label":"c"}]}]}]}})"),
               TaxonomyError);
}

TEST(Taxonomy, DocumentRequiresKind) {
  EXPECT_THROW(load_taxonomy_string(R"({"root":{"id":"r","label":"r"}})"), InputError);
  EXPECT_THROW(load_taxonomy_string(R"({"kind":"occupation","root":{"id":"r","label":"r"}})"), InputError);
  EXPECT_THROW(load_taxonomy_string("{not json"), InputError);
}

TEST(Taxonomy, ResolvesFixturePathIgnoringCaseAndSpacing) {
  const Taxonomy t = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  const std::vector<std::string> labels{"Business and Financial Operations", "Accountants",
                                        "prepare adjusting journal entries"};
  const TaxonomyPath p = resolve_path(t, labels);
  EXPECT_EQ(p.node_ids(), (std::vector<std::string>{"13-0000", "13-2011.00", "13-2011.00/t1"}));
  const std::vector<std::string> messy{"  business AND financial operations", "ACCOUNTANTS",
                                       "Prepare   adjusting journal entries "};
  EXPECT_EQ(resolve_path(t, messy), p);
}

TEST(Taxonomy, NonLeafTerminusIsPartialMatch) {
  const Taxonomy t = load_taxonomy_file(testing::fixture("skill_taxonomy.json"));
  const std::vector<std::string> labels{"Information Input"};
  try {
    resolve_path(t, labels);
    FAIL();
  } catch (const ResolveError& e) {
    EXPECT_EQ(e.kind(), ResolveError::Kind::kPartialMatch);
  }
}

TEST(Taxonomy, AbsentLabelIsNoMatch) {
  const Taxonomy t = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  const std::vector<std::string> labels{"Nonexistent Family", "X", "Y"};
  try {
    resolve_path(t, labels);
    FAIL();
  } catch (const ResolveError& e) {
    EXPECT_EQ(e.kind(), ResolveError::Kind::kNoMatch);
  }
}

TEST(Taxonomy, FlattenHasOneLinePerLeafAndIsStable) {
  const Taxonomy t = five_leaf();
  const std::string a = flatten_for_prompt(t);
  EXPECT_EQ(count_lines_starting(a, "* "), 5u);
  EXPECT_EQ(count_lines_starting(a, "+ "), 5u);  // 2 families + 3 occupations
  EXPECT_EQ(a, flatten_for_prompt(five_leaf()));
  EXPECT_NE(a.find("* task three"), std::string::npos);
}

TEST(Taxonomy, CopiesShareNodes) {
  const Taxonomy a = five_leaf();
  const Taxonomy b = a;
  EXPECT_EQ(&a.root(), &b.root());
}

TEST(Taxonomy, PropertiesOnRandomTrees) {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 200; ++round) {
    const TaxonomyKind kind = round % 2 == 0 ? TaxonomyKind::kDomain : TaxonomyKind::kSkill;
    const Taxonomy t = testing::random_taxonomy(kind, rng);
    // One path per leaf.
    EXPECT_EQ(t.path_count(), t.nodes_at_level(3).size());
    std::set<std::string> keys;
    for (std::size_t i = 0; i < t.path_count(); ++i) {
      const TaxonomyPath& p = t.paths()[i];
      EXPECT_EQ(p.length(), 3u);
      EXPECT_TRUE(keys.insert(p.key()).second);
      EXPECT_EQ(t.index_of(p), i);
      // Round trip through labels.
      const auto labels = t.labels(p);
      EXPECT_EQ(t.resolve(labels), p);
    }
    EXPECT_EQ(t.flatten_for_prompt(), t.flatten_for_prompt());
    const Taxonomy again = load_taxonomy(taxonomy_to_json(t));
    EXPECT_EQ(again.paths(), t.paths());
    EXPECT_EQ(again.flatten_for_prompt(), t.flatten_for_prompt());
  }
}

TEST(Taxonomy, FullDocumentCountsWhenSupplied) {
  const char* domain = std::getenv("ATLAS_FULL_DOMAIN_TAXONOMY");
  const char* skill = std::getenv("ATLAS_FULL_SKILL_TAXONOMY");
  if (domain == nullptr && skill == nullptr) GTEST_SKIP() << "full taxonomy documents not supplied";
  if (domain != nullptr) {
    const Taxonomy t = load_taxonomy_file(domain);
    EXPECT_EQ(t.nodes_at_level(1).size(), 23u);
    EXPECT_EQ(t.nodes_at_level(2).size(), 743u);
    EXPECT_EQ(t.path_count(), 5806u);
  }
  if (skill != nullptr) {
    const Taxonomy t = load_taxonomy_file(skill);
    EXPECT_EQ(t.nodes_at_level(1).size(), 4u);
    EXPECT_EQ(t.nodes_at_level(2).size(), 9u);
    EXPECT_EQ(t.path_count(), 41u);
  }
}

}  // namespace
}  // namespace atlas
