#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/autonomy.hpp"
#include "atlas/economics.hpp"

namespace atlas {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct BundleInput {
  std::string role;
  std::filesystem::path path;
  std::string sha256;
};

struct BundleOutput {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// A run directory <root>/<subcommand>-<UTC timestamp>[-N]. Directories are
// never reused, and files inside are written once.
class RunBundle {
 public:
  static RunBundle create(const std::filesystem::path& root, std::string_view subcommand,
                          std::chrono::system_clock::time_point now =
                              std::chrono::system_clock::now());

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<BundleOutput>& outputs() const { return outputs_; }

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }
  void add_input(std::string role, const std::filesystem::path& path);

  // Throws InputError if `name` was already written in this bundle.
  void write_text(const std::string& name, std::string_view content);
  void write_json(const std::string& name, const nlohmann::json& doc);

  nlohmann::json manifest() const;
  // Writes manifest.json; call once, after all outputs.
  void finish();

 private:
  RunBundle() = default;

  std::filesystem::path dir_;
  std::string subcommand_;
  std::string started_at_;
  nlohmann::json config_ = nlohmann::json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<BundleInput> inputs_;
  std::vector<BundleOutput> outputs_;
};

std::string utc_timestamp(std::chrono::system_clock::time_point t, bool compact);

// Plot data documents: numeric series with axis metadata, no rendering.
nlohmann::json effort_vs_employment_series(const AlignmentTable& alignment);
nlohmann::json skill_distribution_series(const AlignmentTable& alignment);

}  // namespace atlas
