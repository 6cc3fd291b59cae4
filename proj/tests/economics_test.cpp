#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "atlas/economics.hpp"
#include "test_support.hpp"

namespace atlas {
namespace {

using testing::inner;
using testing::leaf;

const Taxonomy& domain_fixture() {
  static const Taxonomy t = load_taxonomy_file(testing::fixture("domain_taxonomy.json"));
  return t;
}
const Taxonomy& skill_fixture() {
  static const Taxonomy t = load_taxonomy_file(testing::fixture("skill_taxonomy.json"));
  return t;
}

void expect_rel(double got, double want) {
  EXPECT_LE(std::fabs(got - want), 1e-9 * std::max(1.0, std::fabs(want))) << got << " vs " << want;
}

// One family with two occupations, each with one task leaf.
Taxonomy small_domain() {
  TaxonomyNode a = inner("11-1011.00", "Chief Executives", {leaf("a1", "Direct operations")});
  a.annotations["soc_code"] = "11-1011.00";
  TaxonomyNode b = inner("11-2021.00", "Marketing Managers", {leaf("b1", "Plan campaigns")});
  b.annotations["soc_code"] = "11-2021";
  TaxonomyNode c = inner("23-1011.00", "Lawyers", {leaf("c1", "Argue cases")});
  c.annotations["soc_code"] = "23-1011.00";
  return build_taxonomy(TaxonomyKind::kDomain,
                        inner("r", "r", {inner("11-0000", "Management", {a, b}), inner("23-0000", "Legal", {c})}));
}

Taxonomy small_skill() {
  TaxonomyNode s1 = leaf("s1", "Getting Information");
  s1.annotations["activity_id"] = "4.A.1.a.1";
  return build_taxonomy(TaxonomyKind::kSkill,
                        inner("r", "r", {inner("c", "Input", {inner("m", "Looking", {s1, leaf("s2", "Monitoring")})})}));
}

TEST(Normalize, SocDetailSuffix) {
  EXPECT_EQ(normalize_soc("15-1252.00"), "15-1252");
  EXPECT_EQ(normalize_soc(" 15-1252 "), "15-1252");
  EXPECT_EQ(normalize_soc("15-1252.01"), "15-1252.01");
}

TEST(Family, SingleOccupationCapital) {
  const std::vector<OccupationStats> occ{{"11-1011", "CEO", 100, 50000}};
  const auto t = domain_employment_capital(occ, small_domain());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].capital, 5000000.0);
  EXPECT_EQ(t.rows[0].employment, 100.0);
  EXPECT_EQ(t.rows[1].capital, 0.0);
}

TEST(Family, UnmatchedAndDuplicates) {
  const std::vector<OccupationStats> occ{{"11-1011", "CEO", 100, 50000}, {"99-9999", "X", 5, 5}};
  const auto t = domain_employment_capital(occ, small_domain());
  EXPECT_EQ(t.unmatched_soc, std::vector<std::string>{"99-9999"});
  EXPECT_EQ(t.total_employment, 100.0);
  const std::vector<OccupationStats> dup{{"11-1011", "CEO", 1, 1}, {"11-1011.00", "CEO", 1, 1}};
  EXPECT_THROW(validate_occupations(dup), InputError);
  const std::vector<OccupationStats> neg{{"11-1011", "CEO", -1, 1}};
  EXPECT_THROW(validate_occupations(neg), InputError);
}

TEST(Family, FixtureByHand) {
  const auto occ = read_occupations_file(testing::fixture("occupations.csv"));
  EXPECT_EQ(occ.metadata.at("currency"), "USD");
  EXPECT_EQ(occ.metadata.at("year"), "2024");
  const auto t = domain_employment_capital(occ.rows, domain_fixture());
  ASSERT_EQ(t.rows.size(), 3u);
  expect_rel(t.rows[0].employment, 1800);
  expect_rel(t.rows[0].capital, 1000.0 * 80000 + 800.0 * 70000);
  expect_rel(t.rows[1].employment, 1700);
  expect_rel(t.rows[1].capital, 1500.0 * 130000 + 200.0 * 110000);
  expect_rel(t.rows[2].employment, 3300);
  expect_rel(t.rows[2].capital, 2800.0 * 40000 + 500.0 * 70000);
  expect_rel(t.total_capital, 500e6);
  EXPECT_TRUE(t.unmatched_soc.empty());
}

TEST(Skill, ImportanceAtScaleMaxGivesEmployment) {
  const std::vector<OccupationStats> occ{{"11-1011", "CEO", 100, 50000}};
  ImportanceTable imp{5.0, {{"11-1011", "4.A.1.a.1", 5.0}}};
  const auto t = effective_skill_employment_capital(occ, imp, small_skill());
  EXPECT_EQ(t.find("s1")->effective_employment, 100.0);
  EXPECT_EQ(t.find("s1")->effective_capital, 5000000.0);
}

TEST(Skill, WeightedSumAndParents) {
  const std::vector<OccupationStats> occ{{"11-1011", "CEO", 100, 50000}, {"11-2021", "MM", 200, 40000}};
  ImportanceTable imp{5.0, {{"11-1011", "4.A.1.a.1", 5.0}, {"11-2021", "s1", 2.5}, {"11-2021", "s2", 1.0}}};
  const auto t = effective_skill_employment_capital(occ, imp, small_skill());
  EXPECT_EQ(t.find("s1")->effective_employment, 200.0);
  EXPECT_EQ(t.find("s2")->effective_employment, 40.0);
  EXPECT_EQ(t.find("m")->effective_employment, 240.0);
  EXPECT_EQ(t.find("c")->effective_employment, 240.0);
  EXPECT_EQ(t.find("c")->level, 1);
}

TEST(Skill, UnknownActivityIsAnError) {
  const std::vector<OccupationStats> occ{{"11-1011", "CEO", 100, 50000}};
  ImportanceTable imp{5.0, {{"11-1011", "4.Z.9", 3.0}}};
  EXPECT_THROW(effective_skill_employment_capital(occ, imp, small_skill()), InputError);
  ImportanceTable orphan{5.0, {{"55-5555", "s1", 3.0}}};
  EXPECT_EQ(effective_skill_employment_capital(occ, orphan, small_skill()).unmatched_soc,
            std::vector<std::string>{"55-5555"});
}

TEST(Skill, FixtureByHand) {
  const auto occ = read_occupations_file(testing::fixture("occupations.csv"));
  const auto imp = read_importance_file(testing::fixture("importance.csv"));
  EXPECT_EQ(imp.scale_max, 5.0);
  const auto t = effective_skill_employment_capital(occ.rows, imp, skill_fixture());
  // 4.A.3.b.1: Accountants 4.0, Software Developers 5.0, Data Scientists 4.7.
  const double emp = 1000 * 0.8 + 1500 * 1.0 + 200 * 0.94;
  const double cap = 1000 * 0.8 * 80000 + 1500 * 1.0 * 130000 + 200 * 0.94 * 110000;
  expect_rel(t.find("4.A.3.b.1")->effective_employment, emp);
  expect_rel(t.find("4.A.3.b.1")->effective_capital, cap);
  const double b6 = 1000 * 0.7 + 2800 * 0.64 + 500 * 0.8;
  expect_rel(t.find("4.A.3.b.6")->effective_employment, b6);
  expect_rel(t.find("4.A.3")->effective_employment, emp + b6);
}

TEST(Digital, SharesAndExclusion) {
  const std::vector<OccupationStats> occ{
      {"11-1011", "CEO", 100, 1}, {"11-2021", "MM", 100, 1}, {"23-1011", "Lawyer", 50, 1}};
  auto lbl = [](const std::string& soc, const std::string& h, WorkMode m) {
    return DigitalLabel{soc, "", h, m, ""};
  };
  const std::vector<DigitalLabel> labels{lbl("11-1011", "a", WorkMode::kDigital),
                                         lbl("11-1011", "b", WorkMode::kDigital),
                                         lbl("11-2021", "c", WorkMode::kDigital),
                                         lbl("11-2021", "d", WorkMode::kPhysical)};
  const auto t = digital_share(labels, occ, small_domain());
  ASSERT_EQ(t.occupations.size(), 2u);
  EXPECT_EQ(t.occupations[0].ratio, 1.0);
  EXPECT_EQ(t.occupations[1].ratio, 0.5);
  EXPECT_EQ(*t.find("11-0000")->weighted_share, 0.75);
  EXPECT_FALSE(t.find("23-0000")->weighted_share.has_value());
  EXPECT_EQ(t.excluded_soc, std::vector<std::string>{"23-1011"});

  const std::vector<DigitalLabel> stray{lbl("77-7777", "x", WorkMode::kDigital)};
  EXPECT_THROW(digital_share(stray, occ, small_domain()), InputError);
}

TEST(Digital, FixtureByHand) {
  const auto occ = read_occupations_file(testing::fixture("occupations.csv"));
  const auto labels = read_digital_labels_file(testing::fixture("digital_labels.csv"));
  ASSERT_EQ(labels.size(), 13u);
  const auto t = digital_share(labels, occ.rows, domain_fixture());
  expect_rel(*t.find("13-0000")->weighted_share, 1.0);
  expect_rel(*t.find("43-0000")->weighted_share, (2800 * 0.5 + 500 * (2.0 / 3.0)) / 3300);
  expect_rel(*t.find("43-0000")->unweighted_share, (0.5 + 2.0 / 3.0) / 2);
}

TEST(Digital, TaskHashIsCanonical) {
  EXPECT_EQ(task_hash("Greet visitors"), task_hash("  greet   VISITORS "));
  EXPECT_EQ(task_hash("x").size(), 16u);
  EXPECT_NE(task_hash("a"), task_hash("b"));
}

TEST(DigitalParse, Vocabulary) {
  auto d = parse_digital_response("DIGITAL. It is done on a laptop.");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->first, WorkMode::kDigital);
  EXPECT_EQ(d->second, "It is done on a laptop.");
  EXPECT_EQ(parse_digital_response("PHYSICAL - lifting boxes")->first, WorkMode::kPhysical);
  EXPECT_TRUE(parse_digital_response("DIGITAL"));
  EXPECT_FALSE(parse_digital_response("digital work mostly"));
  EXPECT_FALSE(parse_digital_response("DIGITALLY"));
  EXPECT_FALSE(parse_digital_response("It is DIGITAL"));
  EXPECT_FALSE(parse_digital_response(""));
}

TEST(Labeling, KeywordMockSevenThree) {
  std::vector<LabelingTask> tasks;
  const char* texts[] = {"Type reports on a keyboard", "Write software",         "Test software releases",
                         "Enter data with a keyboard", "Install software updates", "Review software logs",
                         "Program keyboard macros",    "Lift boxes",             "Drive a forklift",
                         "Clean the warehouse floor"};
  for (const char* t : texts) tasks.push_back({"11-1011", t});
  CallbackAnnotator mock("mock", [](const AnnotationRequest& r) {
    const bool digital = r.subject.find("keyboard") != std::string::npos ||
                         r.subject.find("software") != std::string::npos;
    return std::string(digital ? "DIGITAL - uses a computer" : "PHYSICAL - hands-on work");
  });
  const auto out = label_tasks_digital(tasks, mock);
  ASSERT_EQ(out.labels.size(), 10u);
  const auto digital = std::count_if(out.labels.begin(), out.labels.end(),
                                     [](const DigitalLabel& l) { return l.label == WorkMode::kDigital; });
  EXPECT_EQ(digital, 7);
  EXPECT_EQ(out.labels[0].task_hash, task_hash(texts[0]));
  EXPECT_EQ(out.labels[0].justification, "uses a computer");
  EXPECT_TRUE(out.unlabeled.empty());
}

TEST(Labeling, OffVocabularyIsAskedAgainThenDropped) {
  int calls = 0;
  CallbackAnnotator flaky("flaky", [&](const AnnotationRequest& r) {
    ++calls;
    EXPECT_NE(r.prompt.find("DIGITAL or PHYSICAL"), std::string::npos);
    if (r.subject == "fixable") return std::string(calls % 2 == 1 ? "digital work mostly" : "DIGITAL.");
    return std::string("digital work mostly");
  });
  const std::vector<LabelingTask> one{{"11-1011", "fixable"}};
  const auto a = label_tasks_digital(one, flaky);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(a.labels.size(), 1u);
  calls = 0;
  const std::vector<LabelingTask> never{{"11-1011", "hopeless"}};
  const auto b = label_tasks_digital(never, flaky);
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(b.labels.empty());
  ASSERT_EQ(b.unlabeled.size(), 1u);
  EXPECT_EQ(b.unlabeled[0].last_output, "digital work mostly");
}

TEST(Labeling, AlwaysDigital) {
  CallbackAnnotator yes("yes", [](const AnnotationRequest&) { return std::string("DIGITAL"); });
  const std::vector<LabelingTask> tasks{{"1", "a"}, {"2", "b"}, {"3", "c"}};
  for (const auto& l : label_tasks_digital(tasks, yes).labels) EXPECT_EQ(l.label, WorkMode::kDigital);
}

EffortDistribution family_effort(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  EffortDistribution e;
  e.level = GroupLevel::domain_family();
  for (const auto& [id, n] : counts) e.counts.push_back({id, id, n});
  return e;
}

FamilyTable families(const std::vector<std::pair<std::string, double>>& employment) {
  FamilyTable t;
  for (const auto& [id, emp] : employment) {
    t.rows.push_back({id, id, 1, emp, emp * 1000});
    t.total_employment += emp;
    t.total_capital += emp * 1000;
  }
  return t;
}

TEST(Alignment, UniformIsOne) {
  const auto a = alignment_report(family_effort({{"a", 5}, {"b", 5}, {"c", 5}, {"d", 5}}),
                                  families({{"a", 10}, {"b", 10}, {"c", 10}, {"d", 10}}));
  for (const auto& r : a.rows) EXPECT_DOUBLE_EQ(*r.effort_to_employment, 1.0);
}

TEST(Alignment, ConcentratedEffort) {
  const auto a = alignment_report(family_effort({{"a", 8}, {"b", 0}}), families({{"a", 50}, {"b", 50}}));
  EXPECT_DOUBLE_EQ(*a.rows[0].effort_to_employment, 2.0);
  EXPECT_DOUBLE_EQ(*a.rows[1].effort_to_employment, 0.0);
  const auto z = alignment_report(family_effort({{"a", 1}, {"b", 1}}), families({{"a", 50}, {"b", 0}}));
  EXPECT_FALSE(z.rows[1].effort_to_employment.has_value());
}

double column_sum(const std::vector<AlignmentRow>& rows, double AlignmentRow::*field) {
  double s = 0;
  for (const auto& r : rows) s += r.*field;
  return s;
}

TEST(EconomicsProperty, SharesSumToOneAndScaleInvariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> emp(1, 5000);
  std::uniform_real_distribution<double> wage(20000, 200000);
  const std::vector<std::string> socs{"13-2011", "13-1161", "15-1252", "15-2051", "43-4051", "43-6011"};
  for (int round = 0; round < 200; ++round) {
    std::vector<OccupationStats> occ;
    for (const auto& s : socs) occ.push_back({s, s, std::floor(emp(rng)), std::floor(wage(rng))});
    const auto fam = domain_employment_capital(occ, domain_fixture());
    EffortDistribution effort;
    effort.level = GroupLevel::domain_family();
    for (const auto& r : fam.rows) effort.counts.push_back({r.node_id, r.label, 1 + rng() % 9});
    const auto a = alignment_report(effort, fam);
    EXPECT_NEAR(column_sum(a.rows, &AlignmentRow::employment_share), 1.0, 1e-9);
    EXPECT_NEAR(column_sum(a.rows, &AlignmentRow::capital_share), 1.0, 1e-9);
    EXPECT_NEAR(column_sum(a.rows, &AlignmentRow::effort_share), 1.0, 1e-9);

    // Scaling every wage leaves capital shares unchanged.
    auto scaled = occ;
    for (auto& o : scaled) o.median_wage *= 3.5;
    const auto a2 = alignment_report(effort, domain_employment_capital(scaled, domain_fixture()));
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_NEAR(a.rows[i].capital_share, a2.rows[i].capital_share, 1e-12);

    // Raising one occupation's employment never lowers its family's total.
    auto more = occ;
    const std::size_t k = rng() % more.size();
    more[k].employment += 100;
    const auto fam2 = domain_employment_capital(more, domain_fixture());
    for (std::size_t i = 0; i < fam.rows.size(); ++i) EXPECT_GE(fam2.rows[i].employment, fam.rows[i].employment);
  }
}

TEST(EconomicsProperty, SkillSharesSumToOne) {
  const auto occ = read_occupations_file(testing::fixture("occupations.csv"));
  const auto imp = read_importance_file(testing::fixture("importance.csv"));
  const auto skills = effective_skill_employment_capital(occ.rows, imp, skill_fixture());
  EffortDistribution effort;
  effort.level = GroupLevel::skill_category();
  for (const auto* n : skill_fixture().nodes_at_level(1)) effort.counts.push_back({n->id, n->label, 2});
  const auto a = alignment_report(effort, skills);
  ASSERT_EQ(a.rows.size(), 4u);
  EXPECT_NEAR(column_sum(a.rows, &AlignmentRow::employment_share), 1.0, 1e-9);
  EXPECT_NEAR(column_sum(a.rows, &AlignmentRow::capital_share), 1.0, 1e-9);
  EXPECT_THROW(alignment_report(effort, domain_employment_capital(occ.rows, domain_fixture())),
               std::exception);
}

TEST(EconomicsFiles, HeaderAndScaleChecks) {
  testing::TempDir dir;
  EXPECT_THROW(read_occupations_file(dir.write("o.csv", "soc,title\n1,2\n")), InputError);
  EXPECT_THROW(read_occupations_file(dir.write("o2.csv", "soc_code,title,employment,median_wage\n1,x,abc,3\n")),
               InputError);
  EXPECT_THROW(read_importance_file(dir.write("i.csv", "soc_code,activity_id,importance\n1,a,2\n")), InputError);
  EXPECT_THROW(read_importance_file(dir.write("i2.csv", "# scale_max=5\nsoc_code,activity_id,importance\n1,a,7\n")),
               InputError);
  EXPECT_THROW(read_digital_labels_file(dir.write("d.csv", "soc_code,task_hash,label,justification\n1,h,MAYBE,\n")),
               InputError);
}

TEST(EconomicsFiles, SkillCsvColumns) {
  const auto occ = read_occupations_file(testing::fixture("occupations.csv"));
  const auto imp = read_importance_file(testing::fixture("importance.csv"));
  std::ostringstream out;
  write_skill_csv(out, effective_skill_employment_capital(occ.rows, imp, skill_fixture()));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "node_id,label,level,effective_employment_relative_weight,effective_capital_relative_weight");
}

}  // namespace
}  // namespace atlas
