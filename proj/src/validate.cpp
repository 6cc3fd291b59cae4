#include "atlas/validate.hpp"

#include <exception>
#include <ostream>
#include <set>

#include "atlas/autonomy.hpp"
#include "atlas/csv.hpp"
#include "atlas/economics.hpp"
#include "atlas/mapping.hpp"
#include "atlas/taxonomy.hpp"
#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

json run_config_to_json(const RunConfig& c) {
  auto p = [](const std::filesystem::path& path) {
    return path.empty() ? json(nullptr) : json(path.string());
  };
  return {{"subcommand", c.subcommand},
          {"domain_taxonomy", p(c.domain_taxonomy)},
          {"skill_taxonomy", p(c.skill_taxonomy)},
          {"examples", p(c.examples)},
          {"mappings", p(c.mappings)},
          {"occupations", p(c.occupations)},
          {"importance", p(c.importance)},
          {"digital_labels", p(c.digital_labels)},
          {"workflows", p(c.workflows)},
          {"out", c.out_dir.string()},
          {"batch_size", c.batch_size},
          {"delta", c.delta},
          {"stop_rule", c.stop_rule},
          {"permutations", c.permutations},
          {"threshold", c.threshold},
          {"min_samples", c.min_samples},
          {"confidence_mode", c.confidence_mode},
          {"seed", c.seed ? json(*c.seed) : json(nullptr)},
          {"parallelism", c.parallelism}};
}

namespace {

class Checker {
 public:
  std::vector<Violation> violations;

  void add(const std::filesystem::path& file, std::string location, std::string message) {
    violations.push_back({file.string(), std::move(location), std::move(message)});
  }

  // Runs `fn`, turning any exception into a violation against `file`.
  template <typename Fn>
  bool guard(const std::filesystem::path& file, Fn&& fn) {
    if (!std::filesystem::exists(file)) {
      add(file, "", "file not found");
      return false;
    }
    try {
      fn();
      return true;
    } catch (const std::exception& e) {
      add(file, "", e.what());
      return false;
    }
  }
};

std::string row_at(const csv::Table& t, std::size_t i) {
  return "line " + std::to_string(t.row_lines.at(i));
}

std::optional<Taxonomy> load_kind(Checker& c, const std::filesystem::path& path, TaxonomyKind want) {
  std::optional<Taxonomy> t;
  if (path.empty()) return t;
  c.guard(path, [&] { t = load_taxonomy_file(path); });
  if (t && t->kind() != want) {
    c.add(path, "", "taxonomy kind is " + std::string(to_string(t->kind())) + ", expected " +
                        std::string(to_string(want)));
    t.reset();
  }
  return t;
}

}  // namespace

std::vector<Violation> validate_inputs(const RunConfig& config) {
  Checker c;
  const auto domain = load_kind(c, config.domain_taxonomy, TaxonomyKind::kDomain);
  const auto skill = load_kind(c, config.skill_taxonomy, TaxonomyKind::kSkill);

  std::set<std::string> taxonomy_soc;
  if (domain) {
    for (const TaxonomyNode* occ : domain->nodes_at_level(2)) {
      if (const std::string* soc = occ->annotation(kSocCodeKey)) taxonomy_soc.insert(normalize_soc(*soc));
    }
  }
  std::set<std::string> activities;
  if (skill) {
    for (const TaxonomyNode* leaf : skill->nodes_at_level(Taxonomy::kLeafDepth)) {
      activities.insert(leaf->id);
      if (const std::string* a = leaf->annotation(kActivityIdKey)) activities.insert(*a);
    }
  }

  std::set<std::string> occupation_soc;
  bool have_occupations = false;
  if (!config.occupations.empty()) {
    OccupationTable occ;
    csv::Table raw;
    have_occupations = c.guard(config.occupations, [&] {
      raw = csv::read_file(config.occupations);
      occ = read_occupations_file(config.occupations);
    });
    for (std::size_t i = 0; i < occ.rows.size(); ++i) {
      const std::string soc = normalize_soc(occ.rows[i].soc_code);
      occupation_soc.insert(soc);
      if (domain && taxonomy_soc.count(soc) == 0) {
        c.add(config.occupations, row_at(raw, i),
              "SOC code " + occ.rows[i].soc_code + " is not annotated on any domain occupation");
      }
    }
  }

  if (!config.importance.empty()) {
    ImportanceTable imp;
    csv::Table raw;
    c.guard(config.importance, [&] {
      raw = csv::read_file(config.importance);
      imp = read_importance_file(config.importance);
    });
    for (std::size_t i = 0; i < imp.records.size(); ++i) {
      const auto& r = imp.records[i];
      if (skill && activities.count(r.activity_id) == 0) {
        c.add(config.importance, row_at(raw, i),
              "unknown activity_id " + r.activity_id + " (soc " + r.soc_code + ")");
      }
      if (have_occupations && occupation_soc.count(normalize_soc(r.soc_code)) == 0) {
        c.add(config.importance, row_at(raw, i), "SOC code " + r.soc_code + " not in occupations");
      }
    }
  }

  if (!config.digital_labels.empty()) {
    std::vector<DigitalLabel> labels;
    csv::Table raw;
    c.guard(config.digital_labels, [&] {
      raw = csv::read_file(config.digital_labels);
      labels = read_digital_labels_file(config.digital_labels);
    });
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (have_occupations && occupation_soc.count(normalize_soc(labels[i].soc_code)) == 0) {
        c.add(config.digital_labels, row_at(raw, i),
              "SOC code " + labels[i].soc_code + " not in occupations");
      }
    }
  }

  if (!config.examples.empty()) {
    IngestResult ingest;
    c.guard(config.examples, [&] { ingest = read_examples_file(config.examples); });
    for (const auto& r : ingest.rejected) {
      c.add(config.examples, "line " + std::to_string(r.index + 1), r.reason);
    }
  }

  if (!config.mappings.empty()) {
    std::vector<MappingRecord> records;
    c.guard(config.mappings, [&] { records = read_mapping_records(config.mappings); });
    for (const auto& r : records) {
      const std::string where = "line " + std::to_string(r.line) + " " + r.example.str();
      TaxonomyKind kind;
      try {
        kind = parse_taxonomy_kind(r.taxonomy_kind);
      } catch (const std::exception& e) {
        c.add(config.mappings, where, e.what());
        continue;
      }
      MappingStatus status;
      try {
        status = parse_mapping_status(r.status);
      } catch (const std::exception& e) {
        c.add(config.mappings, where, e.what());
        continue;
      }
      if ((status == MappingStatus::kMapped) != !r.paths.empty()) {
        c.add(config.mappings, where, "status " + r.status + " inconsistent with " +
                                          std::to_string(r.paths.size()) + " paths");
      }
      const std::optional<Taxonomy>& t = kind == TaxonomyKind::kDomain ? domain : skill;
      if (!t) {
        const auto& given = kind == TaxonomyKind::kDomain ? config.domain_taxonomy : config.skill_taxonomy;
        if (given.empty()) {
          c.add(config.mappings, where, "no " + r.taxonomy_kind + " taxonomy supplied to check paths");
        }
        continue;
      }
      for (const auto& labels : r.paths) {
        try {
          t->resolve(labels);
        } catch (const std::exception&) {
          c.add(config.mappings, where,
                "path '" + text::join(labels, " > ") + "' not in the " + r.taxonomy_kind + " taxonomy");
        }
      }
    }
  }

  if (!config.workflows.empty()) {
    c.guard(config.workflows, [&] { read_workflows_file(config.workflows); });
  }
  return std::move(c.violations);
}

void write_violations_csv(std::ostream& out, const std::vector<Violation>& violations) {
  csv::Writer w(out);
  w.row({"file", "location", "message"});
  for (const auto& v : violations) w.row({v.file, v.location, v.message});
}

}  // namespace atlas
