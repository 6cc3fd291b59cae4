#include "atlas/autonomy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "atlas/csv.hpp"
#include "atlas/sampler.hpp"
#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

namespace {

WorkflowNode node_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": workflow node is not an object");
  WorkflowNode n;
  auto id = j.find("id");
  if (id == j.end()) throw InputError(where + ": workflow node without id");
  n.id = id->is_string() ? id->get<std::string>() : id->dump();
  if (auto d = j.find("description"); d != j.end() && d->is_string()) n.description = d->get<std::string>();
  auto st = j.find("status");
  if (st == j.end()) throw InputError(where + ": node " + n.id + " has no status");
  if (st->is_boolean()) {
    n.status = st->get<bool>() ? 1 : 0;
  } else if (st->is_number_integer()) {
    n.status = st->get<int>();
  } else {
    throw InputError(where + ": node " + n.id + " status must be 0 or 1");
  }
  if (auto c = j.find("children"); c != j.end()) {
    if (!c->is_array()) throw InputError(where + ": node " + n.id + " children must be an array");
    for (const auto& child : *c) n.children.push_back(node_from_json(child, where));
  }
  return n;
}

json node_to_json(const WorkflowNode& n) {
  json j = {{"id", n.id}, {"description", n.description}, {"status", n.status}};
  json kids = json::array();
  for (const auto& c : n.children) kids.push_back(node_to_json(c));
  j["children"] = std::move(kids);
  return j;
}

int fill_complexity(const WorkflowNode& n, int depth, std::vector<ComplexityEntry>& out) {
  const std::size_t slot = out.size();
  out.push_back({&n, 0, depth});
  int total = 0;
  for (const auto& c : n.children) total += fill_complexity(c, depth + 1, out);
  if (n.children.empty()) total = 1;
  out[slot].complexity = total;
  return total;
}

struct GroupKey {
  std::string id;
  std::string label;
  friend bool operator<(const GroupKey& a, const GroupKey& b) { return a.id < b.id; }
};

GroupKey metadata_group(const std::string& value) {
  if (value.empty()) return {std::string(kUnattributed), std::string(kUnattributed)};
  return {value, value};
}

std::set<GroupKey> groups_from_paths(const std::vector<TaxonomyPath>& paths, const Taxonomy& t) {
  std::set<GroupKey> out;
  for (const auto& p : paths) {
    const std::string& id = p.id_at_depth(1);
    out.insert({id, t.node(id).label});
  }
  return out;
}

double score(const LevelStat& s, ConfidenceMode mode) {
  return mode == ConfidenceMode::kLcb ? wilson_lower_bound(s.successes, s.totals) : s.sr();
}

bool passes(const LevelStat& s, double threshold, std::size_t min_samples, ConfidenceMode mode) {
  return s.totals >= min_samples && s.totals > 0 && score(s, mode) >= threshold;
}

std::string join_levels(const std::vector<int>& levels) {
  std::string out;
  for (int l : levels) {
    if (!out.empty()) out += ';';
    out += std::to_string(l);
  }
  return out;
}

}  // namespace

void validate_workflow(const Workflow& workflow) {
  const std::string where = "workflow " + workflow.trajectory_id;
  if (workflow.root.id.empty()) throw InputError(where + ": empty tree");
  std::set<std::string> ids;
  std::vector<const WorkflowNode*> stack{&workflow.root};
  while (!stack.empty()) {
    const WorkflowNode* n = stack.back();
    stack.pop_back();
    if (n->id.empty()) throw InputError(where + ": node with empty id");
    if (!ids.insert(n->id).second) throw InputError(where + ": duplicate node id " + n->id);
    if (n->status != 0 && n->status != 1) {
      throw InputError(where + ": node " + n->id + " status must be 0 or 1");
    }
    for (const auto& c : n->children) stack.push_back(&c);
  }
}

Workflow workflow_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("workflow document is not an object");
  Workflow w;
  auto str = [&](const char* k) {
    auto it = doc.find(k);
    if (it == doc.end() || it->is_null()) return std::string();
    return it->is_string() ? it->get<std::string>() : it->dump();
  };
  w.benchmark = str("benchmark");
  w.agent = str("agent");
  w.model = str("model");
  w.trajectory_id = str("trajectory_id");
  if (w.trajectory_id.empty()) throw InputError("workflow without trajectory_id");
  if (auto e = doc.find("example_id"); e != doc.end() && !e->is_null()) {
    w.example_id = e->is_string() ? e->get<std::string>() : e->dump();
  }
  auto root = doc.find("root");
  if (root == doc.end() || root->is_null()) {
    throw InputError("workflow " + w.trajectory_id + ": empty tree");
  }
  w.root = node_from_json(*root, "workflow " + w.trajectory_id);
  validate_workflow(w);
  return w;
}

json workflow_to_json(const Workflow& w) {
  json j = {{"benchmark", w.benchmark},
            {"agent", w.agent},
            {"model", w.model},
            {"trajectory_id", w.trajectory_id},
            {"root", node_to_json(w.root)}};
  if (w.example_id) j["example_id"] = *w.example_id;
  return j;
}

std::vector<Workflow> read_workflows_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open workflows file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  std::vector<Workflow> out;
  const std::string_view body = text::trim(content);
  if (!body.empty() && body.front() == '[') {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw InputError(path.string() + ": invalid JSON");
    for (const auto& w : doc) out.push_back(workflow_from_json(w));
    return out;
  }
  std::istringstream lines(content);
  std::string line;
  for (std::size_t n = 1; std::getline(lines, line); ++n) {
    if (text::trim(line).empty()) continue;
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": invalid JSON");
    }
    try {
      out.push_back(workflow_from_json(doc));
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ComplexityEntry> complexity(const WorkflowNode& root) {
  if (root.id.empty()) throw InputError("complexity of an empty tree");
  std::vector<ComplexityEntry> out;
  fill_complexity(root, 0, out);
  return out;
}

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::kOverall: return "overall";
    case Grouping::kAgent: return "agent";
    case Grouping::kModel: return "model";
    case Grouping::kBenchmark: return "benchmark";
    case Grouping::kDomainFamily: return "domain_family";
    case Grouping::kSkillCategory: return "skill_category";
  }
  return "overall";
}

Grouping parse_grouping(std::string_view name) {
  for (Grouping g : {Grouping::kOverall, Grouping::kAgent, Grouping::kModel, Grouping::kBenchmark,
                     Grouping::kDomainFamily, Grouping::kSkillCategory}) {
    if (to_string(g) == name) return g;
  }
  throw ConfigError("unknown grouping '" + std::string(name) +
                    "' (expected overall, agent, model, benchmark, domain_family, skill_category)");
}

GroupAttribution GroupAttribution::from_mappings(std::span<const MappingResult> results,
                                                 const Taxonomy* domain, const Taxonomy* skill) {
  GroupAttribution a;
  a.domain = domain;
  a.skill = skill;
  for (const auto& r : results) {
    if (r.status != MappingStatus::kMapped) continue;
    auto& target = r.taxonomy_kind == TaxonomyKind::kDomain ? a.domain_paths : a.skill_paths;
    auto& paths = target[r.example];
    paths.insert(paths.end(), r.paths.begin(), r.paths.end());
  }
  return a;
}

std::vector<TaskExample> workflow_node_examples(std::span<const Workflow> workflows) {
  std::vector<TaskExample> out;
  for (const auto& w : workflows) {
    std::vector<const WorkflowNode*> stack{&w.root};
    while (!stack.empty()) {
      const WorkflowNode* n = stack.back();
      stack.pop_back();
      out.push_back({w.benchmark, w.trajectory_id + "#" + n->id, n->description, {}});
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
    }
  }
  return out;
}

double LevelStat::sr() const {
  return totals == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(totals);
}

double wilson_lower_bound(std::size_t successes, std::size_t totals, double z) {
  if (totals == 0) return 0.0;
  const double n = static_cast<double>(totals);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2 * n);
  const double margin = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return std::max(0.0, (centre - margin) / (1 + z2 / n));
}

std::size_t AutonomyCurve::total_nodes() const {
  std::size_t n = 0;
  for (const auto& [k, s] : levels) n += s.totals;
  return n;
}

std::vector<AutonomyCurve> success_rates(std::span<const Workflow> workflows, Grouping grouping,
                                         const GroupAttribution* attribution) {
  const bool by_taxonomy =
      grouping == Grouping::kDomainFamily || grouping == Grouping::kSkillCategory;
  const Taxonomy* taxonomy = nullptr;
  const std::map<ExampleRef, std::vector<TaxonomyPath>>* lookup = nullptr;
  if (by_taxonomy) {
    if (attribution == nullptr) {
      throw std::invalid_argument("grouping by " + std::string(to_string(grouping)) +
                                  " needs mapping results");
    }
    const bool domain = grouping == Grouping::kDomainFamily;
    taxonomy = domain ? attribution->domain : attribution->skill;
    lookup = domain ? &attribution->domain_paths : &attribution->skill_paths;
    if (taxonomy == nullptr) {
      throw std::invalid_argument("grouping by " + std::string(to_string(grouping)) +
                                  " needs the " + (domain ? "domain" : "skill") + " taxonomy");
    }
  }

  std::map<std::string, AutonomyCurve> curves;
  auto add = [&](const GroupKey& g, int level, int status) {
    AutonomyCurve& c = curves[g.id];
    c.grouping = grouping;
    c.group = g.id;
    c.group_label = g.label;
    LevelStat& s = c.levels[level];
    ++s.totals;
    s.successes += static_cast<std::size_t>(status);
  };
  const std::set<GroupKey> unattributed{{std::string(kUnattributed), std::string(kUnattributed)}};

  for (const auto& w : workflows) {
    std::set<GroupKey> inherited;
    switch (grouping) {
      case Grouping::kOverall:
        inherited.insert({std::string(kOverallGroup), std::string(kOverallGroup)});
        break;
      case Grouping::kAgent: inherited.insert(metadata_group(w.agent)); break;
      case Grouping::kModel: inherited.insert(metadata_group(w.model)); break;
      case Grouping::kBenchmark: inherited.insert(metadata_group(w.benchmark)); break;
      default:
        if (w.example_id) {
          auto it = lookup->find({w.benchmark, *w.example_id});
          if (it != lookup->end()) inherited = groups_from_paths(it->second, *taxonomy);
        }
        if (inherited.empty()) inherited = unattributed;
        break;
    }
    for (const auto& e : complexity(w.root)) {
      const std::set<GroupKey>* groups = &inherited;
      std::set<GroupKey> own;
      if (by_taxonomy && attribution->per_node) {
        auto it = lookup->find({w.benchmark, w.trajectory_id + "#" + e.node->id});
        if (it != lookup->end() && !it->second.empty()) {
          own = groups_from_paths(it->second, *taxonomy);
          groups = &own;
        }
      }
      for (const auto& g : *groups) add(g, e.complexity, e.node->status);
    }
  }

  std::vector<AutonomyCurve> out;
  out.reserve(curves.size());
  for (auto& [k, c] : curves) out.push_back(std::move(c));
  return out;
}

std::string_view to_string(ConfidenceMode m) { return m == ConfidenceMode::kLcb ? "lcb" : "raw"; }

ConfidenceMode parse_confidence_mode(std::string_view s) {
  if (s == "raw") return ConfidenceMode::kRaw;
  if (s == "lcb") return ConfidenceMode::kLcb;
  throw ConfigError("unknown confidence mode '" + std::string(s) + "' (expected raw or lcb)");
}

AutonomyResult autonomy_level(const AutonomyCurve& curve, double threshold,
                              std::size_t min_samples, ConfidenceMode mode) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1]");
  }
  if (min_samples < 1) throw std::invalid_argument("min_samples must be at least 1");
  AutonomyResult r;
  r.threshold = threshold;
  r.min_samples = min_samples;
  r.mode = mode;
  for (const auto& [k, s] : curve.levels) {
    if (s.totals < min_samples) r.sparse.push_back(k);
    if (passes(s, threshold, min_samples, mode)) r.level = k;
  }
  if (r.level) {
    for (const auto& [k, s] : curve.levels) {
      if (k >= *r.level) break;
      if (s.totals > 0 && score(s, mode) < threshold) r.non_monotonic.push_back(k);
    }
  }
  return r;
}

std::string ordering_prompt(std::string_view task_a, std::string_view task_b) {
  std::string p =
      "Two tasks performed by a software agent are listed below. Decide which of them is more "
      "complex, in the sense of requiring more elementary steps to carry out.\n\n";
  p += "Task A: ";
  p += task_a;
  p += "\nTask B: ";
  p += task_b;
  p += "\n\nAnswer with the single letter A or B.";
  return p;
}

std::optional<char> parse_ordering_verdict(std::string_view response) {
  std::string_view s = text::trim(response);
  if (s.empty()) return std::nullopt;
  const char c = s.front();
  if (c != 'A' && c != 'B') return std::nullopt;
  if (s.size() > 1 && std::isalnum(static_cast<unsigned char>(s[1]))) return std::nullopt;
  return c;
}

OrderingReport validate_ordering(std::span<const Workflow> workflows, std::size_t pair_count,
                                 Annotator& judge, std::uint64_t seed, const RetryPolicy& retry) {
  if (pair_count == 0) throw std::invalid_argument("pair_count must be positive");
  std::map<int, std::vector<const WorkflowNode*>> by_level;
  for (const auto& w : workflows) {
    for (const auto& e : complexity(w.root)) by_level[e.complexity].push_back(e.node);
  }
  std::vector<int> adjacent;
  for (const auto& [k, nodes] : by_level) {
    if (by_level.count(k + 1) != 0) adjacent.push_back(k);
  }
  if (adjacent.empty()) throw InputError("workflow corpus has no adjacent complexity levels");

  std::mt19937_64 rng(seed);
  OrderingReport report;
  const std::string judge_id = judge.id();
  for (std::size_t i = 0; i < pair_count; ++i) {
    const int k = adjacent[uniform_index(rng, adjacent.size())];
    const auto& lo = by_level.at(k);
    const auto& hi = by_level.at(k + 1);
    const WorkflowNode* shallow = lo[uniform_index(rng, lo.size())];
    const WorkflowNode* deep = hi[uniform_index(rng, hi.size())];
    const bool deep_first = uniform_index(rng, 2) == 1;

    AnnotationRequest req;
    req.key = "ordering/" + std::to_string(seed) + "/" + std::to_string(i);
    req.purpose = std::string(purpose::kOrderingJudge);
    req.prompt = deep_first ? ordering_prompt(deep->description, shallow->description)
                            : ordering_prompt(shallow->description, deep->description);
    std::string raw;
    std::optional<char> verdict;
    for (int attempt = 0; attempt < 2 && !verdict; ++attempt) {
      raw = annotate_with_retry(judge, req, retry);
      verdict = parse_ordering_verdict(raw);
    }
    if (!verdict) {
      ++report.excluded;
      continue;
    }
    OrderingJudgment j;
    j.shallow_id = shallow->id;
    j.deep_id = deep->id;
    j.level = k;
    j.shallow_description = shallow->description;
    j.deep_description = deep->description;
    j.deep_shown_first = deep_first;
    j.affirmed = *verdict == (deep_first ? 'A' : 'B');
    j.judge_id = judge_id;
    j.raw = raw;
    if (j.affirmed) ++report.affirmed;
    report.judgments.push_back(std::move(j));
  }
  if (!report.judgments.empty()) {
    report.fraction =
        static_cast<double>(report.affirmed) / static_cast<double>(report.judgments.size());
  }
  return report;
}

std::string_view to_string(AdviceDecision d) {
  switch (d) {
    case AdviceDecision::kDelegateEndToEnd: return "delegate_end_to_end";
    case AdviceDecision::kDecompose: return "decompose";
    case AdviceDecision::kInsufficientData: return "insufficient_data";
  }
  return "insufficient_data";
}

AutonomyAdvice advise(const TaskExample& task, std::span<const MappingResult> task_mappings,
                      std::span<const AutonomyCurve> curves, const AdviceOptions& options,
                      std::optional<int> complexity_given, const ComplexityEstimator& estimator) {
  if (!(options.threshold > 0.0 && options.threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1]");
  }
  if (options.min_samples < 1) throw std::invalid_argument("min_samples must be at least 1");
  AutonomyAdvice advice;
  advice.task = task.ref();
  advice.threshold = options.threshold;

  std::optional<int> k = complexity_given;
  if (!k && estimator) k = estimator(task);
  if (!k) throw InputError("no complexity estimate for task " + task.ref().str());
  if (*k < 1) throw InputError("complexity estimate for " + task.ref().str() + " must be >= 1");
  advice.estimated_complexity = *k;

  std::set<std::string> families;
  std::set<std::string> categories;
  for (const auto& r : task_mappings) {
    if (r.example != task.ref() || r.status != MappingStatus::kMapped) continue;
    auto& target = r.taxonomy_kind == TaxonomyKind::kDomain ? families : categories;
    for (const auto& p : r.paths) target.insert(p.id_at_depth(1));
  }

  for (const auto& c : curves) {
    const bool matched = (c.grouping == Grouping::kDomainFamily && families.count(c.group) != 0) ||
                         (c.grouping == Grouping::kSkillCategory && categories.count(c.group) != 0);
    if (!matched) continue;
    ConsultedValue v;
    v.grouping = c.grouping;
    v.group = c.group;
    v.group_label = c.group_label;
    if (auto it = c.levels.find(*k); it != c.levels.end()) {
      v.totals = it->second.totals;
      v.sr = it->second.sr();
      v.lcb = wilson_lower_bound(it->second.successes, it->second.totals);
      v.passes = passes(it->second, options.threshold, options.min_samples, options.mode);
    }
    for (const auto& [level, s] : c.levels) {
      if (level >= *k) break;
      if (passes(s, options.threshold, options.min_samples, options.mode)) v.passing_below = level;
    }
    advice.consulted.push_back(std::move(v));
  }
  if (advice.consulted.empty()) {
    throw InputError("task " + task.ref().str() + " matches no group with an autonomy curve");
  }

  const auto& cv = advice.consulted;
  if (std::all_of(cv.begin(), cv.end(), [](const ConsultedValue& v) { return v.passes; })) {
    advice.decision = AdviceDecision::kDelegateEndToEnd;
  } else if (std::any_of(cv.begin(), cv.end(),
                         [](const ConsultedValue& v) { return v.passing_below.has_value(); })) {
    advice.decision = AdviceDecision::kDecompose;
  } else {
    advice.decision = AdviceDecision::kInsufficientData;
  }
  return advice;
}

json advice_to_json(const AutonomyAdvice& a) {
  json consulted = json::array();
  for (const auto& v : a.consulted) {
    json j = {{"grouping", to_string(v.grouping)},
              {"group", v.group},
              {"group_label", v.group_label},
              {"totals", v.totals},
              {"passes", v.passes}};
    j["sr"] = v.sr ? json(*v.sr) : json(nullptr);
    j["lcb"] = v.lcb ? json(*v.lcb) : json(nullptr);
    j["passing_below"] = v.passing_below ? json(*v.passing_below) : json(nullptr);
    consulted.push_back(std::move(j));
  }
  return {{"benchmark", a.task.benchmark},
          {"example_id", a.task.example_id},
          {"estimated_complexity", a.estimated_complexity},
          {"threshold", a.threshold},
          {"decision", to_string(a.decision)},
          {"consulted", std::move(consulted)}};
}

void write_curve_csv(std::ostream& out, std::span<const AutonomyCurve> curves) {
  csv::Writer w(out);
  w.row({"group", "level", "successes", "totals", "sr", "lcb"});
  for (const auto& c : curves) {
    for (const auto& [k, s] : c.levels) {
      w.row({c.group, std::to_string(k), std::to_string(s.successes), std::to_string(s.totals),
             text::format_double(s.sr()),
             text::format_double(wilson_lower_bound(s.successes, s.totals))});
    }
  }
}

void write_autonomy_csv(std::ostream& out, std::span<const AutonomyCurve> curves,
                        std::span<const AutonomyResult> results) {
  if (curves.size() != results.size()) {
    throw std::invalid_argument("write_autonomy_csv: curves and results differ in length");
  }
  csv::Writer w(out);
  w.row({"group", "group_label", "autonomy_level", "non_monotonic_levels", "sparse_levels",
         "threshold", "min_samples", "confidence_mode"});
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& r = results[i];
    w.row({curves[i].group, curves[i].group_label, r.level ? std::to_string(*r.level) : "none",
           join_levels(r.non_monotonic), join_levels(r.sparse), text::format_double(r.threshold),
           std::to_string(r.min_samples), std::string(to_string(r.mode))});
  }
}

json autonomy_heatmap_json(std::span<const AutonomyCurve> curves) {
  std::set<int> levels;
  for (const auto& c : curves) {
    for (const auto& [k, s] : c.levels) levels.insert(k);
  }
  json x = json::array();
  for (int k : levels) x.push_back(k);
  json groups = json::array();
  json labels = json::array();
  json sr = json::array();
  json totals = json::array();
  for (const auto& c : curves) {
    groups.push_back(c.group);
    labels.push_back(c.group_label);
    json row = json::array();
    json trow = json::array();
    for (int k : levels) {
      auto it = c.levels.find(k);
      row.push_back(it == c.levels.end() ? json(nullptr) : json(it->second.sr()));
      trow.push_back(it == c.levels.end() ? 0 : it->second.totals);
    }
    sr.push_back(std::move(row));
    totals.push_back(std::move(trow));
  }
  return {{"kind", "heatmap"},
          {"grouping", curves.empty() ? "overall" : std::string(to_string(curves.front().grouping))},
          {"x_axis", {{"name", "complexity"}, {"values", std::move(x)}}},
          {"y_axis", {{"name", "group"}, {"values", std::move(groups)}, {"labels", std::move(labels)}}},
          {"values", {{"name", "success_rate"}, {"matrix", std::move(sr)}}},
          {"totals", std::move(totals)}};
}

}  // namespace atlas
