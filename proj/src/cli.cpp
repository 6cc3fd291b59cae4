#include "atlas/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "atlas/autonomy.hpp"
#include "atlas/coverage.hpp"
#include "atlas/csv.hpp"
#include "atlas/economics.hpp"
#include "atlas/mapping.hpp"
#include "atlas/report.hpp"
#include "atlas/sampler.hpp"
#include "atlas/taxonomy.hpp"
#include "atlas/text.hpp"
#include "atlas/validate.hpp"

namespace atlas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  RunConfig config;
  std::string annotator;  // keyword | replay | remote; empty = none
  fs::path annotator_rules;
  fs::path replay;
  std::vector<std::string> kinds{"domain", "skill"};
  std::vector<std::string> groupings;
  bool per_node_groups = false;
  std::size_t ordering_pairs = 0;
  fs::path label_tasks;
  fs::path queries;
  std::string task_benchmark = "query";
  std::string task_id = "1";
  std::string task_text;
  int complexity = 0;  // 0 = not given
  std::uint64_t seed = 0;
  bool seed_given = false;
};

json options_to_json(const Options& o) {
  json j = run_config_to_json(o.config);
  j["annotator"] = o.annotator.empty() ? json(nullptr) : json(o.annotator);
  j["annotator_rules"] = o.annotator_rules.empty() ? json(nullptr) : json(o.annotator_rules.string());
  j["replay"] = o.replay.empty() ? json(nullptr) : json(o.replay.string());
  j["kinds"] = o.kinds;
  j["groupings"] = o.groupings;
  j["per_node_groups"] = o.per_node_groups;
  j["ordering_pairs"] = o.ordering_pairs;
  j["label_tasks"] = o.label_tasks.empty() ? json(nullptr) : json(o.label_tasks.string());
  j["queries"] = o.queries.empty() ? json(nullptr) : json(o.queries.string());
  if (o.config.subcommand == "advise" && o.queries.empty()) {
    j["task_benchmark"] = o.task_benchmark;
    j["task_id"] = o.task_id;
    j["task_text"] = o.task_text;
    j["complexity"] = o.complexity > 0 ? json(o.complexity) : json(nullptr);
  }
  return j;
}

void validate_options(const Options& o) {
  const RunConfig& c = o.config;
  if (c.batch_size == 0) throw ConfigError("--batch-size must be positive");
  if (!(c.delta > 0.0)) throw ConfigError("--delta must be positive");
  if (c.permutations == 0) throw ConfigError("--permutations must be positive");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) throw ConfigError("--threshold must lie in (0, 1]");
  if (c.min_samples == 0) throw ConfigError("--min-samples must be at least 1");
  if (c.parallelism == 0) throw ConfigError("--parallelism must be at least 1");
  for (const auto& k : o.kinds) {
    if (k != "domain" && k != "skill") throw ConfigError("--kinds accepts domain and skill");
  }
  for (const auto& g : o.groupings) parse_grouping(g);
}

std::unique_ptr<Annotator> make_annotator(const Options& o) {
  if (o.annotator == "remote") {
    return std::make_unique<RemoteAnnotator>(RemoteAnnotator::from_environment());
  }
  if (o.annotator == "keyword") {
    if (o.annotator_rules.empty()) throw ConfigError("--annotator keyword needs --annotator-rules");
    return std::make_unique<KeywordAnnotator>(KeywordAnnotator::from_file(o.annotator_rules));
  }
  if (o.annotator == "replay") {
    if (o.replay.empty()) throw ConfigError("--annotator replay needs --replay");
    // Either {key, output} lines or a recorded mappings file.
    std::ifstream in(o.replay);
    if (!in) throw InputError("cannot open replay file " + o.replay.string());
    std::string line;
    while (std::getline(in, line) && text::trim(line).empty()) {
    }
    const json first = json::parse(line, nullptr, false);
    if (first.is_object() && first.contains("key")) {
      return std::make_unique<ReplayAnnotator>(ReplayAnnotator::from_file(o.replay));
    }
    const auto records = read_mapping_records(o.replay);
    return std::make_unique<ReplayAnnotator>("replay:" + o.replay.filename().string(),
                                             replay_outputs(records));
  }
  if (o.annotator.empty()) throw ConfigError("this step needs an annotator (--annotator)");
  throw ConfigError("unknown annotator '" + o.annotator + "'");
}

template <typename Fn>
void write_csv(RunBundle& bundle, const std::string& name, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  bundle.write_text(name, s.str());
}

std::string percent(double fraction) { return text::format_fixed(100.0 * fraction, 1) + "%"; }

// Lazily loaded inputs; each file is read (and digested into the manifest)
// at most once per run.
class Inputs {
 public:
  Inputs(const Options& opts, RunBundle& bundle) : opts_(opts), bundle_(bundle) {}

  const fs::path& require(const fs::path& path, const char* flag) {
    if (path.empty()) {
      throw ConfigError(opts_.config.subcommand + " needs " + flag);
    }
    if (!fs::exists(path)) throw InputError("input file not found: " + path.string());
    return path;
  }

  const Taxonomy& domain() {
    if (!domain_) domain_ = load_tax(opts_.config.domain_taxonomy, "--domain-taxonomy", TaxonomyKind::kDomain);
    return *domain_;
  }
  const Taxonomy& skill() {
    if (!skill_) skill_ = load_tax(opts_.config.skill_taxonomy, "--skill-taxonomy", TaxonomyKind::kSkill);
    return *skill_;
  }
  const std::vector<MappingResult>& mappings() {
    if (!mappings_) {
      const auto& p = require(opts_.config.mappings, "--mappings");
      const Taxonomy& d = domain();
      const Taxonomy& s = skill();
      mappings_ = read_mappings_file(p, d, s);
      bundle_.add_input("mappings", p);
    }
    return *mappings_;
  }
  const std::vector<Workflow>& workflows() {
    if (!workflows_) {
      const auto& p = require(opts_.config.workflows, "--workflows");
      workflows_ = read_workflows_file(p);
      bundle_.add_input("workflows", p);
    }
    return *workflows_;
  }
  const OccupationTable& occupations() {
    if (!occupations_) {
      const auto& p = require(opts_.config.occupations, "--occupations");
      occupations_ = read_occupations_file(p);
      bundle_.add_input("occupations", p);
    }
    return *occupations_;
  }
  const ImportanceTable& importance() {
    if (!importance_) {
      const auto& p = require(opts_.config.importance, "--importance");
      importance_ = read_importance_file(p);
      bundle_.add_input("importance", p);
    }
    return *importance_;
  }
  Annotator& annotator() {
    if (!annotator_) {
      annotator_ = make_annotator(opts_);
      if (!opts_.annotator_rules.empty() && opts_.annotator == "keyword") {
        bundle_.add_input("annotator_rules", opts_.annotator_rules);
      }
      if (!opts_.replay.empty() && opts_.annotator == "replay") bundle_.add_input("replay", opts_.replay);
    }
    return *annotator_;
  }
  void note_input(const std::string& role, const fs::path& path) { bundle_.add_input(role, path); }

 private:
  Taxonomy load_tax(const fs::path& path, const char* flag, TaxonomyKind kind) {
    require(path, flag);
    Taxonomy t = load_taxonomy_file(path);
    if (t.kind() != kind) {
      throw InputError(path.string() + ": taxonomy kind is " + std::string(to_string(t.kind())) +
                       ", " + flag + " expects " + std::string(to_string(kind)));
    }
    bundle_.add_input(std::string(to_string(kind)) + "_taxonomy", path);
    return t;
  }

  const Options& opts_;
  RunBundle& bundle_;
  std::optional<Taxonomy> domain_;
  std::optional<Taxonomy> skill_;
  std::optional<std::vector<MappingResult>> mappings_;
  std::optional<std::vector<Workflow>> workflows_;
  std::optional<OccupationTable> occupations_;
  std::optional<ImportanceTable> importance_;
  std::unique_ptr<Annotator> annotator_;
};

const std::vector<GroupLevel> kEffortLevels{GroupLevel::domain_family(), GroupLevel::domain_occupation(),
                                            GroupLevel::skill_category(), GroupLevel::skill_leaf()};

void stage_coverage(Inputs& in, RunBundle& bundle, std::ostream& out) {
  const auto& results = in.mappings();
  const auto dom = select_kind(results, TaxonomyKind::kDomain);
  const auto sk = select_kind(results, TaxonomyKind::kSkill);
  const std::vector<CoverageReport> reports{coverage(dom, in.domain(), "corpus"),
                                            coverage(sk, in.skill(), "corpus")};
  write_csv(bundle, "coverage.csv", [&](std::ostream& s) { write_coverage_csv(s, reports); });
  const auto outcomes = mapping_outcome_stats(results);
  write_csv(bundle, "outcomes.csv", [&](std::ostream& s) { write_outcomes_csv(s, outcomes); });

  std::vector<BreadthStats> breadths;
  for (const auto& level : kEffortLevels) {
    const bool domain = level.kind == TaxonomyKind::kDomain;
    const Taxonomy& t = domain ? in.domain() : in.skill();
    const auto& subset = domain ? dom : sk;
    const auto effort = effort_by_node(subset, t, level);
    write_csv(bundle, "effort_" + level.name() + ".csv", [&](std::ostream& s) { write_effort_csv(s, effort); });
    breadths.push_back(breadth(subset, t, level));
    write_csv(bundle, "breadth_" + level.name() + ".csv",
              [&](std::ostream& s) { write_breadth_csv(s, breadths.back()); });
  }
  bundle.write_json("coverage.json", coverage_summary_json(reports, breadths));
  for (const auto& r : reports) {
    out << to_string(r.kind) << " coverage: " << percent(r.coverage) << " (" << r.covered_paths.size()
        << "/" << r.total_paths << " paths)\n";
  }
}

void stage_sample(const Options& o, std::uint64_t seed, Inputs& in, RunBundle& bundle,
                  std::ostream& out) {
  const auto pools = build_pools(in.mappings(), in.domain(), in.skill());
  SamplingParams params;
  params.batch_size = o.config.batch_size;
  params.delta = o.config.delta;
  params.rule = parse_stop_rule(o.config.stop_rule);
  params.seed = seed;
  std::vector<SamplingRun> runs;
  std::vector<SensitivitySummary> sensitivity;
  for (const auto& pool : pools) {
    if (pool.items.empty()) continue;
    runs.push_back(sample_until_saturation(shuffle_pool(pool, seed), params));
    sensitivity.push_back(
        permutation_sensitivity(pool, params, o.config.permutations, seed, o.config.parallelism));
    out << pool.benchmark << ": stop at " << runs.back().selected_ids.size() << " of "
        << pool.items.size() << " examples; permutation mean "
        << text::format_fixed(sensitivity.back().stop_size.mean, 1) << "\n";
  }
  write_csv(bundle, "sampling_runs.csv", [&](std::ostream& s) { write_sampling_runs_csv(s, runs); });
  write_csv(bundle, "sampling_trace.csv", [&](std::ostream& s) { write_sampling_trace_csv(s, runs); });
  write_csv(bundle, "sensitivity.csv", [&](std::ostream& s) { write_sensitivity_csv(s, sensitivity); });
  write_csv(bundle, "sensitivity_detail.csv",
            [&](std::ostream& s) { write_sensitivity_detail_csv(s, sensitivity); });
}

std::vector<LabelingTask> read_label_tasks(const fs::path& path) {
  const csv::Table t = csv::read_file(path);
  csv::require_header(t, {"soc_code", "task_text"}, path.string());
  std::vector<LabelingTask> out;
  for (const auto& r : t.rows) out.push_back({std::string(text::trim(r[0])), r[1]});
  return out;
}

void stage_economics(const Options& o, Inputs& in, RunBundle& bundle, std::ostream& out) {
  const auto& occ = in.occupations();
  const FamilyTable families = domain_employment_capital(occ.rows, in.domain());
  write_csv(bundle, "family_employment_capital.csv", [&](std::ostream& s) { write_family_csv(s, families); });

  std::optional<SkillTable> skills;
  if (!o.config.importance.empty()) {
    skills = effective_skill_employment_capital(occ.rows, in.importance(), in.skill());
    write_csv(bundle, "skill_effective_employment_capital.csv",
              [&](std::ostream& s) { write_skill_csv(s, *skills); });
  }

  std::optional<DigitalShareTable> digital;
  std::vector<DigitalLabel> labels;
  std::vector<UnlabeledTask> unlabeled;
  if (!o.config.digital_labels.empty()) {
    labels = read_digital_labels_file(in.require(o.config.digital_labels, "--digital-labels"));
    in.note_input("digital_labels", o.config.digital_labels);
  } else if (!o.label_tasks.empty()) {
    const auto tasks = read_label_tasks(in.require(o.label_tasks, "--label-tasks"));
    in.note_input("label_tasks", o.label_tasks);
    DigitalLabeling labeling = label_tasks_digital(tasks, in.annotator());
    labels = std::move(labeling.labels);
    unlabeled = std::move(labeling.unlabeled);
    write_csv(bundle, "digital_labels.csv", [&](std::ostream& s) { write_digital_labels_csv(s, labels); });
    write_csv(bundle, "unlabeled_tasks.csv", [&](std::ostream& s) {
      csv::Writer w(s);
      w.row({"soc_code", "task_text", "last_output"});
      for (const auto& u : unlabeled) w.row({u.soc_code, u.task_text, u.last_output});
    });
  }
  if (!o.config.digital_labels.empty() || !o.label_tasks.empty()) {
    digital = digital_share(labels, occ.rows, in.domain());
    write_csv(bundle, "digital_share.csv", [&](std::ostream& s) { write_digital_share_csv(s, *digital); });
    write_csv(bundle, "occupation_digital.csv",
              [&](std::ostream& s) { write_occupation_digital_csv(s, *digital); });
  }

  json summary = {{"occupation_metadata", occ.metadata},
                  {"total_employment", families.total_employment},
                  {"total_capital", families.total_capital},
                  {"unmatched_soc", families.unmatched_soc}};
  if (skills) {
    summary["importance_scale_max"] = skills->scale_max;
    summary["importance_unmatched_soc"] = skills->unmatched_soc;
  }
  if (digital) {
    summary["digital_excluded_soc"] = digital->excluded_soc;
    summary["unlabeled_tasks"] = unlabeled.size();
  }

  if (!o.config.mappings.empty()) {
    const auto dom = select_kind(in.mappings(), TaxonomyKind::kDomain);
    const auto effort = effort_by_node(dom, in.domain(), GroupLevel::domain_family());
    const AlignmentTable fam = alignment_report(effort, families, digital ? &*digital : nullptr);
    write_csv(bundle, "alignment_domain_family.csv", [&](std::ostream& s) { write_alignment_csv(s, fam); });
    bundle.write_json("plot_effort_vs_employment.json", effort_vs_employment_series(fam));
    if (skills) {
      const auto sk = select_kind(in.mappings(), TaxonomyKind::kSkill);
      const auto sk_effort = effort_by_node(sk, in.skill(), GroupLevel::skill_category());
      const AlignmentTable cat = alignment_report(sk_effort, *skills);
      write_csv(bundle, "alignment_skill_category.csv", [&](std::ostream& s) { write_alignment_csv(s, cat); });
      bundle.write_json("plot_skill_distribution.json", skill_distribution_series(cat));
    }
  }
  bundle.write_json("economics.json", summary);
  out << "families: " << families.rows.size() << ", total employment "
      << text::format_double(families.total_employment) << "\n";
}

std::vector<Grouping> groupings_for(const Options& o) {
  std::vector<Grouping> out;
  for (const auto& g : o.groupings) out.push_back(parse_grouping(g));
  if (out.empty()) {
    out = {Grouping::kOverall, Grouping::kAgent, Grouping::kModel, Grouping::kBenchmark};
    if (!o.config.mappings.empty()) {
      out.push_back(Grouping::kDomainFamily);
      out.push_back(Grouping::kSkillCategory);
    }
  }
  return out;
}

void stage_autonomy(const Options& o, std::uint64_t seed, Inputs& in, RunBundle& bundle,
                    std::ostream& out) {
  const auto& workflows = in.workflows();
  const auto mode = parse_confidence_mode(o.config.confidence_mode);
  std::optional<GroupAttribution> attribution;
  if (!o.config.mappings.empty()) {
    attribution = GroupAttribution::from_mappings(in.mappings(), &in.domain(), &in.skill());
    attribution->per_node = o.per_node_groups;
  }

  write_csv(bundle, "complexity.csv", [&](std::ostream& s) {
    csv::Writer w(s);
    w.row({"trajectory_id", "node_id", "depth", "complexity", "status"});
    for (const auto& wf : workflows) {
      for (const auto& e : complexity(wf.root)) {
        w.row({wf.trajectory_id, e.node->id, std::to_string(e.depth), std::to_string(e.complexity),
               std::to_string(e.node->status)});
      }
    }
  });

  for (Grouping g : groupings_for(o)) {
    const auto curves = success_rates(workflows, g, attribution ? &*attribution : nullptr);
    std::vector<AutonomyResult> results;
    for (const auto& c : curves) {
      results.push_back(autonomy_level(c, o.config.threshold, o.config.min_samples, mode));
    }
    const std::string name(to_string(g));
    write_csv(bundle, "curves_" + name + ".csv", [&](std::ostream& s) { write_curve_csv(s, curves); });
    write_csv(bundle, "autonomy_" + name + ".csv",
              [&](std::ostream& s) { write_autonomy_csv(s, curves, results); });
    bundle.write_json("plot_heatmap_" + name + ".json", autonomy_heatmap_json(curves));
    for (std::size_t i = 0; i < curves.size(); ++i) {
      out << name << " " << curves[i].group_label << ": autonomy "
          << (results[i].level ? std::to_string(*results[i].level) : "none") << "\n";
    }
  }

  if (o.ordering_pairs > 0) {
    const OrderingReport rep = validate_ordering(workflows, o.ordering_pairs, in.annotator(), seed);
    write_csv(bundle, "ordering_judgments.csv", [&](std::ostream& s) {
      csv::Writer w(s);
      w.row({"level", "shallow_id", "deep_id", "deep_shown_first", "affirmed", "judge_id"});
      for (const auto& j : rep.judgments) {
        w.row({std::to_string(j.level), j.shallow_id, j.deep_id, j.deep_shown_first ? "1" : "0",
               j.affirmed ? "1" : "0", j.judge_id});
      }
    });
    bundle.write_json("ordering.json", {{"pairs_requested", o.ordering_pairs},
                                        {"judged", rep.judgments.size()},
                                        {"affirmed", rep.affirmed},
                                        {"excluded", rep.excluded},
                                        {"fraction", rep.fraction}});
    out << "ordering satisfied in " << percent(rep.fraction) << " of " << rep.judgments.size()
        << " judged pairs\n";
  }
}

std::optional<int> workflow_estimate(const std::vector<Workflow>& workflows, const TaskExample& task) {
  std::vector<int> roots;
  for (const auto& w : workflows) {
    if (w.benchmark == task.benchmark && w.example_id == task.example_id) {
      roots.push_back(complexity(w.root).front().complexity);
    }
  }
  if (roots.empty()) return std::nullopt;
  std::sort(roots.begin(), roots.end());
  return roots[roots.size() / 2];
}

void stage_advise(const Options& o, Inputs& in, RunBundle& bundle, std::ostream& out) {
  std::vector<TaskExample> tasks;
  if (!o.queries.empty()) {
    const IngestResult ingest = read_examples_file(in.require(o.queries, "--queries"));
    in.note_input("queries", o.queries);
    if (!ingest.rejected.empty()) {
      throw InputError(o.queries.string() + ": line " + std::to_string(ingest.rejected.front().index + 1) +
                       ": " + ingest.rejected.front().reason);
    }
    tasks = ingest.accepted;
  } else {
    if (text::trim(o.task_text).empty()) throw ConfigError("advise needs --queries or --task-text");
    tasks.push_back({o.task_benchmark, o.task_id, o.task_text, {}});
    if (o.complexity > 0) tasks.back().metadata["complexity"] = std::to_string(o.complexity);
  }

  const auto& workflows = in.workflows();
  GroupAttribution attribution = GroupAttribution::from_mappings(in.mappings(), &in.domain(), &in.skill());
  attribution.per_node = o.per_node_groups;
  std::vector<AutonomyCurve> curves = success_rates(workflows, Grouping::kDomainFamily, &attribution);
  auto skill_curves = success_rates(workflows, Grouping::kSkillCategory, &attribution);
  curves.insert(curves.end(), skill_curves.begin(), skill_curves.end());

  AdviceOptions options;
  options.threshold = o.config.threshold;
  options.min_samples = o.config.min_samples;
  options.mode = parse_confidence_mode(o.config.confidence_mode);
  const ComplexityEstimator estimator = [&](const TaskExample& t) { return workflow_estimate(workflows, t); };

  std::string lines;
  for (const auto& task : tasks) {
    std::vector<MappingResult> task_mappings;
    for (const auto& r : in.mappings()) {
      if (r.example == task.ref()) task_mappings.push_back(r);
    }
    if (task_mappings.empty() && !o.annotator.empty()) {
      task_mappings.push_back(map_example(task, in.domain(), in.annotator()));
      task_mappings.push_back(map_example(task, in.skill(), in.annotator()));
    }
    std::optional<int> given;
    if (auto it = task.metadata.find("complexity"); it != task.metadata.end()) {
      try {
        given = std::stoi(it->second);
      } catch (const std::exception&) {
        throw InputError("task " + task.ref().str() + ": complexity '" + it->second + "' is not an integer");
      }
    }
    const AutonomyAdvice advice = advise(task, task_mappings, curves, options, given, estimator);
    lines += advice_to_json(advice).dump() + "\n";
    out << task.ref().str() << ": " << to_string(advice.decision) << " (complexity "
        << advice.estimated_complexity << ")\n";
  }
  bundle.write_text("advice.jsonl", lines);
}

void stage_map(const Options& o, Inputs& in, RunBundle& bundle, std::ostream& out, std::ostream& err) {
  const IngestResult ingest = read_examples_file(in.require(o.config.examples, "--examples"));
  in.note_input("examples", o.config.examples);
  Annotator& annotator = in.annotator();
  MapCorpusOptions options;
  options.parallelism = o.config.parallelism;

  std::string lines;
  std::vector<MappingResult> all;
  std::string abort_reason;
  for (const auto& kind_name : o.kinds) {
    const TaxonomyKind kind = parse_taxonomy_kind(kind_name);
    const Taxonomy& t = kind == TaxonomyKind::kDomain ? in.domain() : in.skill();
    CorpusMapping m = map_corpus(ingest.accepted, t, annotator, options);
    for (const auto& r : m.results) {
      std::ostringstream s;
      write_mapping_line(s, r, t);
      lines += s.str();
    }
    all.insert(all.end(), m.results.begin(), m.results.end());
    out << kind_name << ": " << m.counts.mapped << " mapped, " << m.counts.empty << " empty, "
        << m.counts.invalid << " invalid\n";
    if (m.aborted) {
      abort_reason = m.abort_reason;
      break;
    }
  }
  bundle.write_text("mappings.jsonl", lines);
  const auto outcomes = mapping_outcome_stats(all);
  write_csv(bundle, "outcomes.csv", [&](std::ostream& s) { write_outcomes_csv(s, outcomes); });
  write_csv(bundle, "ingest_rejections.csv", [&](std::ostream& s) {
    csv::Writer w(s);
    w.row({"line", "benchmark", "example_id", "reason"});
    for (const auto& r : ingest.rejected) {
      w.row({std::to_string(r.index + 1), r.example.benchmark, r.example.example_id, r.reason});
    }
  });
  if (!abort_reason.empty()) {
    bundle.finish();
    err << "mapping aborted: " << abort_reason << "\n";
    throw AnnotatorError(abort_reason);
  }
}

int execute(Options& o, std::ostream& out, std::ostream& err) {
  validate_options(o);
  const std::string& sub = o.config.subcommand;
  if (!o.seed_given) {
    std::random_device rd;
    o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  o.config.seed = o.seed;

  if (sub == "validate") {
    const auto violations = validate_inputs(o.config);
    RunBundle bundle = RunBundle::create(o.config.out_dir, sub);
    bundle.set_config(options_to_json(o));
    bundle.set_seed(o.seed);
    write_csv(bundle, "violations.csv", [&](std::ostream& s) { write_violations_csv(s, violations); });
    bundle.finish();
    for (const auto& v : violations) {
      err << v.file << (v.location.empty() ? "" : " " + v.location) << ": " << v.message << "\n";
    }
    out << violations.size() << " violation(s); bundle: " << bundle.dir().string() << "\n";
    return violations.empty() ? kOk : kInputError;
  }

  RunBundle bundle = RunBundle::create(o.config.out_dir, sub);
  bundle.set_config(options_to_json(o));
  bundle.set_seed(o.seed);
  Inputs in(o, bundle);
  if (sub == "map") {
    stage_map(o, in, bundle, out, err);
  } else if (sub == "coverage") {
    stage_coverage(in, bundle, out);
  } else if (sub == "sample") {
    stage_sample(o, o.seed, in, bundle, out);
  } else if (sub == "economics") {
    stage_economics(o, in, bundle, out);
  } else if (sub == "autonomy") {
    stage_autonomy(o, o.seed, in, bundle, out);
  } else if (sub == "advise") {
    stage_advise(o, in, bundle, out);
  } else if (sub == "report") {
    stage_coverage(in, bundle, out);
    stage_sample(o, o.seed, in, bundle, out);
    if (!o.config.occupations.empty()) stage_economics(o, in, bundle, out);
    if (!o.config.workflows.empty()) stage_autonomy(o, o.seed, in, bundle, out);
  } else {
    throw ConfigError("unknown subcommand " + sub);
  }
  bundle.finish();
  out << "bundle: " << bundle.dir().string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  RunConfig& c = o.config;
  CLI::App app{"Benchmark coverage, labor-market alignment and agent autonomy analysis", "atlas"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "Config file (TOML/INI); keys mirror the long flag names");

  app.add_option("--domain-taxonomy", c.domain_taxonomy, "Domain taxonomy JSON");
  app.add_option("--skill-taxonomy", c.skill_taxonomy, "Skill taxonomy JSON");
  app.add_option("--examples", c.examples, "Task examples (JSON lines)");
  app.add_option("--mappings", c.mappings, "Recorded mappings (JSON lines)");
  app.add_option("--occupations", c.occupations, "Occupation employment/wage CSV");
  app.add_option("--importance", c.importance, "Occupation x work-activity importance CSV");
  app.add_option("--digital-labels", c.digital_labels, "Task DIGITAL/PHYSICAL labels CSV");
  app.add_option("--workflows", c.workflows, "Agent workflows (JSON lines or array)");
  app.add_option("--out", c.out_dir, "Root directory for run bundles")->capture_default_str();

  app.add_option("--batch-size", c.batch_size, "Sampling batch size")->capture_default_str();
  app.add_option("--delta", c.delta, "Stop when a batch adds less than this many percentage points")
      ->capture_default_str();
  app.add_option("--stop-rule", c.stop_rule, "Which gains must fall below delta")
      ->check(CLI::IsMember({"both", "domain", "skill", "either"}))
      ->capture_default_str();
  app.add_option("--permutations", c.permutations, "Sensitivity permutations")->capture_default_str();
  app.add_option("--threshold", c.threshold, "Autonomy success-rate threshold H")->capture_default_str();
  app.add_option("--min-samples", c.min_samples, "Minimum nodes per complexity level")->capture_default_str();
  app.add_option("--confidence-mode", c.confidence_mode, "Score levels by raw SR or its lower bound")
      ->check(CLI::IsMember({"raw", "lcb"}))
      ->capture_default_str();
  auto* seed_opt = app.add_option("--seed", o.seed, "Seed for every random choice (recorded)");
  app.add_option("--parallelism", c.parallelism, "Worker threads")->capture_default_str();

  app.add_option("--annotator", o.annotator, "Annotator backend")
      ->check(CLI::IsMember({"keyword", "replay", "remote"}));
  app.add_option("--annotator-rules", o.annotator_rules, "Keyword annotator rules JSON");
  app.add_option("--replay", o.replay, "Replay file: {key, output} lines or recorded mappings");
  app.add_option("--kinds", o.kinds, "Taxonomies to map onto")->delimiter(',')->capture_default_str();
  app.add_option("--grouping", o.groupings,
                 "Autonomy grouping (overall, agent, model, benchmark, domain_family, skill_category)")
      ->delimiter(',');
  app.add_flag("--per-node-groups", o.per_node_groups, "Attribute workflow nodes by their own mapping");
  app.add_option("--ordering-pairs", o.ordering_pairs, "Pairs for the complexity ordering check");
  app.add_option("--label-tasks", o.label_tasks, "CSV (soc_code,task_text) to label DIGITAL/PHYSICAL");
  app.add_option("--queries", o.queries, "Advisor queries (JSON lines like --examples)");
  app.add_option("--task-benchmark", o.task_benchmark, "Advisor query benchmark")->capture_default_str();
  app.add_option("--task-id", o.task_id, "Advisor query id")->capture_default_str();
  app.add_option("--task-text", o.task_text, "Advisor query instruction");
  app.add_option("--complexity", o.complexity, "Advisor query complexity estimate");

  const std::vector<std::pair<const char*, const char*>> subcommands{
      {"map", "Map task examples onto the taxonomies"},
      {"coverage", "Coverage, effort and breadth from mappings"},
      {"sample", "Coverage-aware sampling and permutation sensitivity"},
      {"economics", "Employment, capital and digital-share alignment"},
      {"autonomy", "Success-rate curves and autonomy levels"},
      {"advise", "Delegate or decompose a task"},
      {"report", "Run coverage, sample, economics and autonomy into one bundle"},
      {"validate", "Cross-check input files"},
  };
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();
  app.require_subcommand(1);

  if (args.empty()) {
    err << app.help();
    return kConfigError;
  }
  std::vector<std::string> storage{"atlas"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  o.seed_given = seed_opt->count() > 0;
  c.subcommand = app.get_subcommands().front()->get_name();

  try {
    return execute(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const AnnotatorError& e) {
    err << "annotator error: " << e.what() << "\n";
    return kAnnotatorError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace atlas::cli
