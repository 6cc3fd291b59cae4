#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "atlas/annotator.hpp"
#include "atlas/coverage.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas {

struct OccupationStats {
  std::string soc_code;
  std::string title;
  double employment = 0.0;
  double median_wage = 0.0;  // currency per year
};

// Occupations CSV (soc_code,title,employment,median_wage). Leading comment
// lines of the form "key=value" (e.g. "# currency=USD", "# year=2024") are
// carried through as metadata.
struct OccupationTable {
  std::vector<OccupationStats> rows;
  std::map<std::string, std::string> metadata;
};

OccupationTable read_occupations_file(const std::filesystem::path& path);
// Throws InputError on negative values or repeated SOC codes.
void validate_occupations(std::span<const OccupationStats> occupations);

struct ImportanceRecord {
  std::string soc_code;
  std::string activity_id;
  double importance = 0.0;
};

struct ImportanceTable {
  double scale_max = 0.0;
  std::vector<ImportanceRecord> records;
};

// Importance CSV (soc_code,activity_id,importance) preceded by a
// "# scale_max=<value>" comment line.
ImportanceTable read_importance_file(const std::filesystem::path& path);
void validate_importances(const ImportanceTable& table);

enum class WorkMode { kDigital, kPhysical };
std::string_view to_string(WorkMode m);

struct DigitalLabel {
  std::string soc_code;
  std::string task_text;  // empty when read back from a labels file
  std::string task_hash;
  WorkMode label = WorkMode::kDigital;
  std::string justification;
};

// First 16 hex digits of SHA-256 over the canonicalized task text.
std::string task_hash(std::string_view task_text);

// Labels CSV: soc_code,task_hash,label,justification.
std::vector<DigitalLabel> read_digital_labels_file(const std::filesystem::path& path);
void write_digital_labels_csv(std::ostream& out, std::span<const DigitalLabel> labels);

// SOC codes compare after dropping a trailing ".00" detail suffix, so
// "15-1252.00" and "15-1252" refer to the same occupation.
std::string normalize_soc(std::string_view soc);

struct FamilyRow {
  std::string node_id;
  std::string label;
  std::size_t occupations = 0;
  double employment = 0.0;
  double capital = 0.0;  // sum of employment * median wage
};

struct FamilyTable {
  std::vector<FamilyRow> rows;  // every family, taxonomy order
  std::vector<std::string> unmatched_soc;
  double total_employment = 0.0;  // matched only
  double total_capital = 0.0;
};

FamilyTable domain_employment_capital(std::span<const OccupationStats> occupations,
                                      const Taxonomy& domain);

// Effective values are importance-weighted relative weights, not worker
// counts.
struct SkillRow {
  std::string node_id;
  std::string label;
  int level = 0;
  double effective_employment = 0.0;
  double effective_capital = 0.0;
};

struct SkillTable {
  std::vector<SkillRow> rows;  // every non-root node, preorder
  std::vector<std::string> unmatched_soc;
  double scale_max = 0.0;

  const SkillRow* find(std::string_view node_id) const;
};

// Per leaf s: sum over occupations o of employment(o) * importance(o,s) /
// scale_max, and likewise with the wage factor for capital. Parents are the
// sum of their children. Importance rows whose activity matches no skill
// leaf raise InputError; rows for SOC codes without occupation statistics are
// listed in unmatched_soc.
SkillTable effective_skill_employment_capital(std::span<const OccupationStats> occupations,
                                              const ImportanceTable& importances,
                                              const Taxonomy& skill);

struct OccupationDigital {
  std::string soc_code;
  std::size_t digital = 0;
  std::size_t labeled = 0;
  double ratio = 0.0;
};

struct FamilyDigital {
  std::string node_id;
  std::string label;
  std::size_t occupations = 0;  // occupations with at least one label
  std::optional<double> weighted_share;  // employment-weighted mean of ratios
  std::optional<double> unweighted_share;
};

struct DigitalShareTable {
  std::vector<OccupationDigital> occupations;  // sorted by SOC code
  std::vector<FamilyDigital> families;         // taxonomy order
  std::vector<std::string> excluded_soc;       // occupations with zero labels

  const FamilyDigital* find(std::string_view node_id) const;
};

// Throws InputError if a label names an SOC code absent from `occupations`.
DigitalShareTable digital_share(std::span<const DigitalLabel> labels,
                                std::span<const OccupationStats> occupations,
                                const Taxonomy& domain);

struct LabelingTask {
  std::string soc_code;
  std::string task_text;
};

struct UnlabeledTask {
  std::string soc_code;
  std::string task_text;
  std::string last_output;
};

struct DigitalLabeling {
  std::vector<DigitalLabel> labels;
  std::vector<UnlabeledTask> unlabeled;
};

std::string digital_label_prompt(std::string_view task_text);

// Accepts responses that begin with the exact token DIGITAL or PHYSICAL,
// optionally followed by punctuation and a justification.
std::optional<std::pair<WorkMode, std::string>> parse_digital_response(std::string_view response);

// One request per task. A response outside the two-token vocabulary is
// asked again once, then the task is recorded as unlabeled. Transport
// failures past the retry budget propagate as AnnotatorFailure.
DigitalLabeling label_tasks_digital(std::span<const LabelingTask> tasks, Annotator& annotator,
                                    const RetryPolicy& retry = {});

struct AlignmentRow {
  std::string node_id;
  std::string label;
  std::size_t effort_count = 0;
  double effort_share = 0.0;
  double employment = 0.0;
  double capital = 0.0;
  double employment_share = 0.0;
  double capital_share = 0.0;
  std::optional<double> digital_share;
  // effort_share / employment_share; absent when employment_share is 0.
  std::optional<double> effort_to_employment;
};

struct AlignmentTable {
  GroupLevel level;
  std::vector<AlignmentRow> rows;
};

// Effort must be grouped by domain family.
AlignmentTable alignment_report(const EffortDistribution& effort, const FamilyTable& families,
                                const DigitalShareTable* digital = nullptr);
// Effort must be grouped at a skill level; rows at that level are compared.
AlignmentTable alignment_report(const EffortDistribution& effort, const SkillTable& skills);

// family_id,label,occupations,employment,capital,employment_share,capital_share
void write_family_csv(std::ostream& out, const FamilyTable& table);
// node_id,label,level,effective_employment_relative_weight,effective_capital_relative_weight
void write_skill_csv(std::ostream& out, const SkillTable& table);
// family_id,label,occupations,employment_weighted_share,unweighted_share
void write_digital_share_csv(std::ostream& out, const DigitalShareTable& table);
// soc_code,digital_tasks,labeled_tasks,ratio
void write_occupation_digital_csv(std::ostream& out, const DigitalShareTable& table);
// level,node_id,label,effort_count,effort_share,employment_share,capital_share,digital_share,effort_to_employment
void write_alignment_csv(std::ostream& out, const AlignmentTable& table);

}  // namespace atlas
