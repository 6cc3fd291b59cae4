#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/annotator.hpp"
#include "atlas/mapping.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas {

struct WorkflowNode {
  std::string id;
  std::string description;
  int status = 0;  // 0 failure, 1 success
  std::vector<WorkflowNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct Workflow {
  std::string benchmark;
  std::string agent;
  std::string model;
  std::string trajectory_id;
  // Task the trajectory was solving; links the workflow to mapping results.
  std::optional<std::string> example_id;
  WorkflowNode root;
};

// Node ids must be unique within a workflow and statuses 0/1.
void validate_workflow(const Workflow& workflow);

Workflow workflow_from_json(const nlohmann::json& doc);
nlohmann::json workflow_to_json(const Workflow& workflow);

// Accepts JSON lines (one workflow per line) or a single JSON array.
std::vector<Workflow> read_workflows_file(const std::filesystem::path& path);

struct ComplexityEntry {
  const WorkflowNode* node = nullptr;
  int complexity = 0;
  int depth = 0;  // root = 0
};

// Leaf-descendant count for every node, preorder. A leaf counts itself.
// Throws InputError for an empty tree (root without an id).
std::vector<ComplexityEntry> complexity(const WorkflowNode& root);

enum class Grouping { kOverall, kAgent, kModel, kBenchmark, kDomainFamily, kSkillCategory };

std::string_view to_string(Grouping g);
// Throws ConfigError on an unknown name.
Grouping parse_grouping(std::string_view name);

inline constexpr std::string_view kUnattributed = "unattributed";
inline constexpr std::string_view kOverallGroup = "overall";

// Ties workflows to domain/skill groups through mapping results. By default a
// node inherits the mapping of the workflow's example. With per_node set, a
// node is first looked up as example "<trajectory_id>#<node id>" in the
// workflow's benchmark (see workflow_node_examples) and falls back to the
// inherited mapping.
struct GroupAttribution {
  const Taxonomy* domain = nullptr;
  const Taxonomy* skill = nullptr;
  std::map<ExampleRef, std::vector<TaxonomyPath>> domain_paths;
  std::map<ExampleRef, std::vector<TaxonomyPath>> skill_paths;
  bool per_node = false;

  static GroupAttribution from_mappings(std::span<const MappingResult> results,
                                        const Taxonomy* domain, const Taxonomy* skill);
};

// One example per workflow node, for mapping node descriptions individually.
std::vector<TaskExample> workflow_node_examples(std::span<const Workflow> workflows);

struct LevelStat {
  std::size_t successes = 0;
  std::size_t totals = 0;

  double sr() const;
};

inline constexpr double kLcbZ = 1.6448536269514722;  // one-sided 95%

// One-sided Wilson lower bound on a binomial proportion.
double wilson_lower_bound(std::size_t successes, std::size_t totals, double z = kLcbZ);

struct AutonomyCurve {
  Grouping grouping = Grouping::kOverall;
  std::string group;        // id or metadata value
  std::string group_label;  // display label
  std::map<int, LevelStat> levels;

  std::size_t total_nodes() const;
};

// A node belonging to several groups (an example mapped to two families)
// counts in each of them. Curves come back sorted by group key.
std::vector<AutonomyCurve> success_rates(std::span<const Workflow> workflows, Grouping grouping,
                                         const GroupAttribution* attribution = nullptr);

enum class ConfidenceMode { kRaw, kLcb };

std::string_view to_string(ConfidenceMode m);
ConfidenceMode parse_confidence_mode(std::string_view s);

struct AutonomyResult {
  std::optional<int> level;  // nullopt = none
  std::vector<int> non_monotonic;
  std::vector<int> sparse;  // levels below min_samples
  double threshold = 0.0;
  std::size_t min_samples = 0;
  ConfidenceMode mode = ConfidenceMode::kRaw;
};

// max{k : totals(k) >= min_samples and score(k) >= H}, where score is SR or
// its lower bound. Throws std::invalid_argument unless 0 < H <= 1 and
// min_samples >= 1.
AutonomyResult autonomy_level(const AutonomyCurve& curve, double threshold,
                              std::size_t min_samples = 10,
                              ConfidenceMode mode = ConfidenceMode::kRaw);

struct OrderingJudgment {
  std::string shallow_id;
  std::string deep_id;
  int level = 0;  // complexity of the shallower task; the other is level + 1
  std::string shallow_description;
  std::string deep_description;
  bool deep_shown_first = false;
  bool affirmed = false;
  std::string judge_id;
  std::string raw;
};

struct OrderingReport {
  std::vector<OrderingJudgment> judgments;
  std::size_t affirmed = 0;
  // Pairs whose verdict could not be parsed after one re-ask.
  std::size_t excluded = 0;
  double fraction = 0.0;
};

std::string ordering_prompt(std::string_view task_a, std::string_view task_b);
// "A" or "B" (optionally followed by punctuation and text); nullopt otherwise.
std::optional<char> parse_ordering_verdict(std::string_view response);

// Samples pair_count (level k, level k+1) pairs: k uniformly among adjacent
// level pairs present in the corpus, then one node at each level uniformly.
// Throws InputError if the corpus has no adjacent levels.
OrderingReport validate_ordering(std::span<const Workflow> workflows, std::size_t pair_count,
                                 Annotator& judge, std::uint64_t seed,
                                 const RetryPolicy& retry = {});

enum class AdviceDecision { kDelegateEndToEnd, kDecompose, kInsufficientData };

std::string_view to_string(AdviceDecision d);

struct ConsultedValue {
  Grouping grouping = Grouping::kDomainFamily;
  std::string group;
  std::string group_label;
  std::size_t totals = 0;
  std::optional<double> sr;   // at the estimated complexity
  std::optional<double> lcb;
  bool passes = false;
  // Highest complexity below the estimate at which this curve passes.
  std::optional<int> passing_below;
};

struct AutonomyAdvice {
  ExampleRef task;
  int estimated_complexity = 0;
  double threshold = 0.0;
  std::vector<ConsultedValue> consulted;
  AdviceDecision decision = AdviceDecision::kInsufficientData;
};

using ComplexityEstimator = std::function<std::optional<int>(const TaskExample&)>;

struct AdviceOptions {
  double threshold = 0.8;
  std::size_t min_samples = 10;
  ConfidenceMode mode = ConfidenceMode::kRaw;
};

// Uses the complexity given by the caller, else asks the estimator. Throws
// InputError when neither produces one, or when the task matches no curve.
AutonomyAdvice advise(const TaskExample& task, std::span<const MappingResult> task_mappings,
                      std::span<const AutonomyCurve> curves, const AdviceOptions& options,
                      std::optional<int> complexity,
                      const ComplexityEstimator& estimator = {});

nlohmann::json advice_to_json(const AutonomyAdvice& advice);

void write_curve_csv(std::ostream& out, std::span<const AutonomyCurve> curves);
void write_autonomy_csv(std::ostream& out, std::span<const AutonomyCurve> curves,
                        std::span<const AutonomyResult> results);
// Group x level matrix of SR values (null where a level is absent).
nlohmann::json autonomy_heatmap_json(std::span<const AutonomyCurve> curves);

}  // namespace atlas
