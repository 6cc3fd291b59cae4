#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace atlas {

// Everything a pipeline run reads; empty paths mean "not supplied".
struct RunConfig {
  std::string subcommand;
  std::filesystem::path domain_taxonomy;
  std::filesystem::path skill_taxonomy;
  std::filesystem::path examples;
  std::filesystem::path mappings;
  std::filesystem::path occupations;
  std::filesystem::path importance;
  std::filesystem::path digital_labels;
  std::filesystem::path workflows;
  std::filesystem::path out_dir = "runs";

  std::size_t batch_size = 5;
  double delta = 0.1;
  std::string stop_rule = "both";
  std::size_t permutations = 500;
  double threshold = 0.8;
  std::size_t min_samples = 10;
  std::string confidence_mode = "raw";
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 1;
};

nlohmann::json run_config_to_json(const RunConfig& config);

struct Violation {
  std::string file;
  std::string location;  // line, row or example reference
  std::string message;
};

// Parses every supplied file and runs the cross-file checks: taxonomy kinds,
// SOC codes across occupations / importance / digital labels / the domain
// taxonomy, activity ids against the skill taxonomy, mapping paths against
// both taxonomies, workflow structure. Never throws for bad data.
std::vector<Violation> validate_inputs(const RunConfig& config);

void write_violations_csv(std::ostream& out, const std::vector<Violation>& violations);

}  // namespace atlas
