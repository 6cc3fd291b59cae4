#include "atlas/economics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <set>

#include "atlas/csv.hpp"
#include "atlas/digest.hpp"
#include "atlas/text.hpp"

namespace atlas {

namespace {

double parse_number(const std::string& s, const std::string& where) {
  const std::string t(text::trim(s));
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw InputError(where + ": '" + s + "' is not a number");
  }
  return v;
}

std::map<std::string, std::string> comment_metadata(const csv::Table& table) {
  std::map<std::string, std::string> out;
  for (const auto& c : table.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    out[std::string(text::trim(std::string_view(c).substr(0, eq)))] =
        std::string(text::trim(std::string_view(c).substr(eq + 1)));
  }
  return out;
}

double share(double part, double total) { return total > 0.0 ? part / total : 0.0; }

std::string opt(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string();
}

// Normalized SOC -> (family node, occupation node) for every level-2 node of
// the domain taxonomy carrying a soc_code annotation.
struct SocIndex {
  std::map<std::string, std::pair<const TaxonomyNode*, const TaxonomyNode*>> by_soc;
};

SocIndex index_soc(const Taxonomy& domain) {
  if (domain.kind() != TaxonomyKind::kDomain) {
    throw std::invalid_argument("expected a domain taxonomy");
  }
  SocIndex idx;
  for (const TaxonomyNode* family : domain.nodes_at_level(1)) {
    for (const auto& occ : family->children) {
      const std::string* soc = occ.annotation(kSocCodeKey);
      if (soc == nullptr) continue;
      const std::string key = normalize_soc(*soc);
      if (!idx.by_soc.emplace(key, std::make_pair(family, &occ)).second) {
        throw InputError("SOC code " + key + " is annotated on more than one occupation");
      }
    }
  }
  return idx;
}

}  // namespace

std::string_view to_string(WorkMode m) {
  return m == WorkMode::kDigital ? "DIGITAL" : "PHYSICAL";
}

std::string normalize_soc(std::string_view soc) {
  std::string s(text::trim(soc));
  if (s.size() > 3 && s.compare(s.size() - 3, 3, ".00") == 0) s.resize(s.size() - 3);
  return s;
}

std::string task_hash(std::string_view task_text) {
  return sha256_hex(text::canonicalize(task_text)).substr(0, 16);
}

void validate_occupations(std::span<const OccupationStats> occupations) {
  std::set<std::string> seen;
  for (const auto& o : occupations) {
    if (o.soc_code.empty()) throw InputError("occupation with empty soc_code");
    if (o.employment < 0.0) throw InputError("occupation " + o.soc_code + ": negative employment");
    if (o.median_wage < 0.0) throw InputError("occupation " + o.soc_code + ": negative median_wage");
    if (!seen.insert(normalize_soc(o.soc_code)).second) {
      throw InputError("duplicate SOC code " + o.soc_code);
    }
  }
}

OccupationTable read_occupations_file(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  const std::string src = path.string();
  csv::require_header(t, {"soc_code", "title", "employment", "median_wage"}, src);
  OccupationTable out;
  out.metadata = comment_metadata(t);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = src + ":" + std::to_string(t.row_lines[i]);
    out.rows.push_back({std::string(text::trim(r[0])), r[1], parse_number(r[2], where),
                        parse_number(r[3], where)});
  }
  try {
    validate_occupations(out.rows);
  } catch (const InputError& e) {
    throw InputError(src + ": " + e.what());
  }
  return out;
}

void validate_importances(const ImportanceTable& table) {
  if (!(table.scale_max > 0.0)) throw InputError("importance scale_max must be positive");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : table.records) {
    if (r.importance < 0.0 || r.importance > table.scale_max) {
      throw InputError("importance " + text::format_double(r.importance) + " for (" + r.soc_code +
                       ", " + r.activity_id + ") outside [0, " +
                       text::format_double(table.scale_max) + "]");
    }
    if (!seen.insert({normalize_soc(r.soc_code), r.activity_id}).second) {
      throw InputError("duplicate importance row (" + r.soc_code + ", " + r.activity_id + ")");
    }
  }
}

ImportanceTable read_importance_file(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  const std::string src = path.string();
  csv::require_header(t, {"soc_code", "activity_id", "importance"}, src);
  const auto meta = comment_metadata(t);
  auto it = meta.find("scale_max");
  if (it == meta.end()) throw InputError(src + ": missing '# scale_max=<value>' header comment");
  ImportanceTable out;
  out.scale_max = parse_number(it->second, src + " scale_max");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out.records.push_back({std::string(text::trim(r[0])), std::string(text::trim(r[1])),
                           parse_number(r[2], src + ":" + std::to_string(t.row_lines[i]))});
  }
  try {
    validate_importances(out);
  } catch (const InputError& e) {
    throw InputError(src + ": " + e.what());
  }
  return out;
}

std::vector<DigitalLabel> read_digital_labels_file(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  const std::string src = path.string();
  csv::require_header(t, {"soc_code", "task_hash", "label", "justification"}, src);
  std::vector<DigitalLabel> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    DigitalLabel l;
    l.soc_code = std::string(text::trim(r[0]));
    l.task_hash = std::string(text::trim(r[1]));
    const std::string label(text::trim(r[2]));
    if (label == "DIGITAL") {
      l.label = WorkMode::kDigital;
    } else if (label == "PHYSICAL") {
      l.label = WorkMode::kPhysical;
    } else {
      throw InputError(src + ":" + std::to_string(t.row_lines[i]) + ": label must be DIGITAL or PHYSICAL");
    }
    l.justification = r[3];
    out.push_back(std::move(l));
  }
  return out;
}

void write_digital_labels_csv(std::ostream& out, std::span<const DigitalLabel> labels) {
  csv::Writer w(out);
  w.row({"soc_code", "task_hash", "label", "justification"});
  for (const auto& l : labels) {
    w.row({l.soc_code, l.task_hash.empty() ? task_hash(l.task_text) : l.task_hash,
           std::string(to_string(l.label)), l.justification});
  }
}

FamilyTable domain_employment_capital(std::span<const OccupationStats> occupations,
                                      const Taxonomy& domain) {
  validate_occupations(occupations);
  const SocIndex idx = index_soc(domain);
  std::map<std::string, FamilyRow> acc;
  FamilyTable out;
  for (const auto& o : occupations) {
    auto it = idx.by_soc.find(normalize_soc(o.soc_code));
    if (it == idx.by_soc.end()) {
      out.unmatched_soc.push_back(o.soc_code);
      continue;
    }
    FamilyRow& row = acc[it->second.first->id];
    ++row.occupations;
    row.employment += o.employment;
    row.capital += o.employment * o.median_wage;
  }
  for (const TaxonomyNode* family : domain.nodes_at_level(1)) {
    FamilyRow row = acc[family->id];
    row.node_id = family->id;
    row.label = family->label;
    out.total_employment += row.employment;
    out.total_capital += row.capital;
    out.rows.push_back(std::move(row));
  }
  std::sort(out.unmatched_soc.begin(), out.unmatched_soc.end());
  return out;
}

const SkillRow* SkillTable::find(std::string_view node_id) const {
  for (const auto& r : rows) {
    if (r.node_id == node_id) return &r;
  }
  return nullptr;
}

SkillTable effective_skill_employment_capital(std::span<const OccupationStats> occupations,
                                              const ImportanceTable& importances,
                                              const Taxonomy& skill) {
  if (skill.kind() != TaxonomyKind::kSkill) throw std::invalid_argument("expected a skill taxonomy");
  validate_occupations(occupations);
  validate_importances(importances);

  std::map<std::string, const TaxonomyNode*> leaf_by_activity;
  for (const TaxonomyNode* leaf : skill.nodes_at_level(Taxonomy::kLeafDepth)) {
    const std::string* act = leaf->annotation(kActivityIdKey);
    leaf_by_activity.emplace(act != nullptr ? *act : leaf->id, leaf);
    leaf_by_activity.emplace(leaf->id, leaf);
  }
  std::map<std::string, const OccupationStats*> occ_by_soc;
  for (const auto& o : occupations) occ_by_soc.emplace(normalize_soc(o.soc_code), &o);

  std::map<std::string, std::pair<double, double>> leaf_values;
  std::set<std::string> unmatched;
  for (const auto& r : importances.records) {
    auto leaf = leaf_by_activity.find(r.activity_id);
    if (leaf == leaf_by_activity.end()) {
      throw InputError("importance row (" + r.soc_code + ", " + r.activity_id +
                       "): unknown activity_id");
    }
    auto occ = occ_by_soc.find(normalize_soc(r.soc_code));
    if (occ == occ_by_soc.end()) {
      unmatched.insert(r.soc_code);
      continue;
    }
    const double weight = r.importance / importances.scale_max;
    auto& v = leaf_values[leaf->second->id];
    v.first += occ->second->employment * weight;
    v.second += occ->second->employment * occ->second->median_wage * weight;
  }

  SkillTable out;
  out.scale_max = importances.scale_max;
  out.unmatched_soc.assign(unmatched.begin(), unmatched.end());
  // Post-order sums, emitted in preorder.
  std::map<std::string, std::pair<double, double>> totals;
  auto sum = [&](auto&& self, const TaxonomyNode& n) -> std::pair<double, double> {
    std::pair<double, double> v{0.0, 0.0};
    if (n.is_leaf()) {
      auto it = leaf_values.find(n.id);
      if (it != leaf_values.end()) v = it->second;
    } else {
      for (const auto& c : n.children) {
        auto cv = self(self, c);
        v.first += cv.first;
        v.second += cv.second;
      }
    }
    totals[n.id] = v;
    return v;
  };
  sum(sum, skill.root());
  auto emit = [&](auto&& self, const TaxonomyNode& n) -> void {
    if (n.level > 0) {
      const auto& v = totals.at(n.id);
      out.rows.push_back({n.id, n.label, n.level, v.first, v.second});
    }
    for (const auto& c : n.children) self(self, c);
  };
  emit(emit, skill.root());
  return out;
}

const FamilyDigital* DigitalShareTable::find(std::string_view node_id) const {
  for (const auto& f : families) {
    if (f.node_id == node_id) return &f;
  }
  return nullptr;
}

DigitalShareTable digital_share(std::span<const DigitalLabel> labels,
                                std::span<const OccupationStats> occupations,
                                const Taxonomy& domain) {
  validate_occupations(occupations);
  const SocIndex idx = index_soc(domain);
  std::map<std::string, const OccupationStats*> occ_by_soc;
  for (const auto& o : occupations) occ_by_soc.emplace(normalize_soc(o.soc_code), &o);

  std::map<std::string, OccupationDigital> per_occ;
  for (const auto& l : labels) {
    const std::string soc = normalize_soc(l.soc_code);
    if (occ_by_soc.find(soc) == occ_by_soc.end()) {
      throw InputError("digital label for unknown occupation " + l.soc_code);
    }
    auto& d = per_occ[soc];
    d.soc_code = soc;
    ++d.labeled;
    if (l.label == WorkMode::kDigital) ++d.digital;
  }
  DigitalShareTable out;
  for (const auto& o : occupations) {
    if (per_occ.find(normalize_soc(o.soc_code)) == per_occ.end()) out.excluded_soc.push_back(o.soc_code);
  }
  std::sort(out.excluded_soc.begin(), out.excluded_soc.end());

  struct Acc {
    double weighted = 0.0;
    double weight = 0.0;
    double plain = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> fam;
  for (auto& [soc, d] : per_occ) {
    d.ratio = static_cast<double>(d.digital) / static_cast<double>(d.labeled);
    out.occupations.push_back(d);
    auto node = idx.by_soc.find(soc);
    if (node == idx.by_soc.end()) continue;
    Acc& a = fam[node->second.first->id];
    const double emp = occ_by_soc.at(soc)->employment;
    a.weighted += emp * d.ratio;
    a.weight += emp;
    a.plain += d.ratio;
    ++a.n;
  }
  for (const TaxonomyNode* family : domain.nodes_at_level(1)) {
    FamilyDigital f;
    f.node_id = family->id;
    f.label = family->label;
    auto it = fam.find(family->id);
    if (it != fam.end() && it->second.n > 0) {
      const Acc& a = it->second;
      f.occupations = a.n;
      f.unweighted_share = a.plain / static_cast<double>(a.n);
      f.weighted_share = a.weight > 0.0 ? a.weighted / a.weight : *f.unweighted_share;
    }
    out.families.push_back(std::move(f));
  }
  return out;
}

std::string digital_label_prompt(std::string_view task_text) {
  return "You are given an occupational task description, and your task is to classify "
         "whether completing this task primarily requires digital work or physical work.\n\n"
         "Task: " + std::string(task_text) +
         "\n\nReturn: DIGITAL or PHYSICAL. Provide a one-sentence justification.";
}

std::optional<std::pair<WorkMode, std::string>> parse_digital_response(std::string_view response) {
  const std::string_view body = text::trim(response);
  for (WorkMode mode : {WorkMode::kDigital, WorkMode::kPhysical}) {
    const std::string_view token = to_string(mode);
    if (body.substr(0, token.size()) != token) continue;
    std::string_view rest = body.substr(token.size());
    if (!rest.empty()) {
      const char c = rest.front();
      const bool separator = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '.' ||
                             c == ':' || c == '-' || c == ',' || c == ';';
      if (!separator) return std::nullopt;
      rest = text::trim(rest.substr(1));
      while (!rest.empty() && (rest.front() == '-' || rest.front() == ':')) {
        rest = text::trim(rest.substr(1));
      }
    }
    return std::make_pair(mode, std::string(rest));
  }
  return std::nullopt;
}

DigitalLabeling label_tasks_digital(std::span<const LabelingTask> tasks, Annotator& annotator,
                                    const RetryPolicy& retry) {
  DigitalLabeling out;
  for (const auto& task : tasks) {
    AnnotationRequest req;
    req.key = "digital/" + task.soc_code + "/" + task_hash(task.task_text);
    req.purpose = std::string(purpose::kDigitalLabel);
    req.subject = task.task_text;
    req.prompt = digital_label_prompt(task.task_text);
    std::string last;
    std::optional<std::pair<WorkMode, std::string>> parsed;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
      last = annotate_with_retry(annotator, req, retry);
      parsed = parse_digital_response(last);
    }
    if (!parsed) {
      out.unlabeled.push_back({task.soc_code, task.task_text, last});
      continue;
    }
    out.labels.push_back({task.soc_code, task.task_text, task_hash(task.task_text), parsed->first,
                          parsed->second});
  }
  return out;
}

AlignmentTable alignment_report(const EffortDistribution& effort, const FamilyTable& families,
                                const DigitalShareTable* digital) {
  if (!(effort.level == GroupLevel::domain_family())) {
    throw std::invalid_argument("alignment grouping mismatch: effort is grouped by " +
                                effort.level.name() + ", economics by domain_family");
  }
  AlignmentTable out;
  out.level = effort.level;
  const double total_effort = static_cast<double>(effort.total_incidences());
  for (const auto& f : families.rows) {
    AlignmentRow row;
    row.node_id = f.node_id;
    row.label = f.label;
    row.effort_count = effort.count_for(f.node_id);
    row.effort_share = share(static_cast<double>(row.effort_count), total_effort);
    row.employment = f.employment;
    row.capital = f.capital;
    row.employment_share = share(f.employment, families.total_employment);
    row.capital_share = share(f.capital, families.total_capital);
    if (digital != nullptr) {
      if (const FamilyDigital* d = digital->find(f.node_id)) row.digital_share = d->weighted_share;
    }
    if (row.employment_share > 0.0) row.effort_to_employment = row.effort_share / row.employment_share;
    out.rows.push_back(std::move(row));
  }
  return out;
}

AlignmentTable alignment_report(const EffortDistribution& effort, const SkillTable& skills) {
  if (effort.level.kind != TaxonomyKind::kSkill) {
    throw std::invalid_argument("alignment grouping mismatch: effort is grouped by " +
                                effort.level.name() + ", economics by skill");
  }
  AlignmentTable out;
  out.level = effort.level;
  double total_emp = 0.0;
  double total_cap = 0.0;
  for (const auto& r : skills.rows) {
    if (r.level != effort.level.depth) continue;
    total_emp += r.effective_employment;
    total_cap += r.effective_capital;
  }
  const double total_effort = static_cast<double>(effort.total_incidences());
  for (const auto& r : skills.rows) {
    if (r.level != effort.level.depth) continue;
    AlignmentRow row;
    row.node_id = r.node_id;
    row.label = r.label;
    row.effort_count = effort.count_for(r.node_id);
    row.effort_share = share(static_cast<double>(row.effort_count), total_effort);
    row.employment = r.effective_employment;
    row.capital = r.effective_capital;
    row.employment_share = share(r.effective_employment, total_emp);
    row.capital_share = share(r.effective_capital, total_cap);
    if (row.employment_share > 0.0) row.effort_to_employment = row.effort_share / row.employment_share;
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_family_csv(std::ostream& out, const FamilyTable& table) {
  csv::Writer w(out);
  w.row({"family_id", "label", "occupations", "employment", "capital", "employment_share",
         "capital_share"});
  for (const auto& r : table.rows) {
    w.row({r.node_id, r.label, std::to_string(r.occupations), text::format_double(r.employment),
           text::format_double(r.capital),
           text::format_double(share(r.employment, table.total_employment)),
           text::format_double(share(r.capital, table.total_capital))});
  }
}

void write_skill_csv(std::ostream& out, const SkillTable& table) {
  csv::Writer w(out);
  w.row({"node_id", "label", "level", "effective_employment_relative_weight",
         "effective_capital_relative_weight"});
  for (const auto& r : table.rows) {
    w.row({r.node_id, r.label, std::to_string(r.level), text::format_double(r.effective_employment),
           text::format_double(r.effective_capital)});
  }
}

void write_digital_share_csv(std::ostream& out, const DigitalShareTable& table) {
  csv::Writer w(out);
  w.row({"family_id", "label", "occupations", "employment_weighted_share", "unweighted_share"});
  for (const auto& f : table.families) {
    w.row({f.node_id, f.label, std::to_string(f.occupations), opt(f.weighted_share),
           opt(f.unweighted_share)});
  }
}

void write_occupation_digital_csv(std::ostream& out, const DigitalShareTable& table) {
  csv::Writer w(out);
  w.row({"soc_code", "digital_tasks", "labeled_tasks", "ratio"});
  for (const auto& o : table.occupations) {
    w.row({o.soc_code, std::to_string(o.digital), std::to_string(o.labeled),
           text::format_double(o.ratio)});
  }
}

void write_alignment_csv(std::ostream& out, const AlignmentTable& table) {
  csv::Writer w(out);
  w.row({"level", "node_id", "label", "effort_count", "effort_share", "employment_share",
         "capital_share", "digital_share", "effort_to_employment"});
  for (const auto& r : table.rows) {
    w.row({table.level.name(), r.node_id, r.label, std::to_string(r.effort_count),
           text::format_double(r.effort_share), text::format_double(r.employment_share),
           text::format_double(r.capital_share), opt(r.digital_share),
           opt(r.effort_to_employment)});
  }
}

}  // namespace atlas
