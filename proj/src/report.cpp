#include "atlas/report.hpp"

#include <ctime>
#include <fstream>

#include "atlas/digest.hpp"
#include "atlas/error.hpp"

namespace atlas {

using nlohmann::json;

std::string utc_timestamp(std::chrono::system_clock::time_point t, bool compact) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, compact ? "%Y%m%dT%H%M%SZ" : "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunBundle RunBundle::create(const std::filesystem::path& root, std::string_view subcommand,
                            std::chrono::system_clock::time_point now) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw ConfigError("cannot create output directory " + root.string() + ": " + ec.message());
  RunBundle b;
  b.subcommand_ = std::string(subcommand);
  b.started_at_ = utc_timestamp(now, false);
  const std::string base = b.subcommand_ + "-" + utc_timestamp(now, true);
  for (int n = 0;; ++n) {
    fs::path candidate = root / (n == 0 ? base : base + "-" + std::to_string(n));
    // create_directory reports false when the directory already exists.
    if (fs::create_directory(candidate, ec)) {
      b.dir_ = std::move(candidate);
      return b;
    }
    if (ec) throw ConfigError("cannot create run directory " + candidate.string() + ": " + ec.message());
  }
}

void RunBundle::add_input(std::string role, const std::filesystem::path& path) {
  inputs_.push_back({std::move(role), path, sha256_file(path)});
}

void RunBundle::write_text(const std::string& name, std::string_view content) {
  for (const auto& o : outputs_) {
    if (o.name == name) throw InputError("bundle output " + name + " written twice");
  }
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
  outputs_.push_back({name, sha256_hex(content), content.size()});
}

void RunBundle::write_json(const std::string& name, const json& doc) {
  write_text(name, doc.dump(2) + "\n");
}

json RunBundle::manifest() const {
  json inputs = json::array();
  for (const auto& i : inputs_) {
    inputs.push_back({{"role", i.role}, {"path", i.path.string()}, {"sha256", i.sha256}});
  }
  json outputs = json::array();
  for (const auto& o : outputs_) {
    outputs.push_back({{"name", o.name}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  }
  return {{"tool", "atlas"},
          {"tool_version", kToolVersion},
          {"subcommand", subcommand_},
          {"started_at", started_at_},
          {"finished_at", utc_timestamp(std::chrono::system_clock::now(), false)},
          {"seed", seed_ ? json(*seed_) : json(nullptr)},
          {"config", config_},
          {"inputs", std::move(inputs)},
          {"outputs", std::move(outputs)}};
}

void RunBundle::finish() {
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << manifest().dump(2) << "\n";
}

json effort_vs_employment_series(const AlignmentTable& alignment) {
  json points = json::array();
  for (const auto& r : alignment.rows) {
    json p = {{"id", r.node_id},
              {"label", r.label},
              {"x", r.employment_share},
              {"y", r.effort_share},
              {"capital_share", r.capital_share},
              {"effort_count", r.effort_count}};
    p["digital_share"] = r.digital_share ? json(*r.digital_share) : json(nullptr);
    points.push_back(std::move(p));
  }
  return {{"kind", "scatter"},
          {"level", alignment.level.name()},
          {"x_axis", {{"name", "employment_share"}, {"unit", "fraction"}}},
          {"y_axis", {{"name", "effort_share"}, {"unit", "fraction"}}},
          {"points", std::move(points)}};
}

json skill_distribution_series(const AlignmentTable& alignment) {
  json categories = json::array();
  json effort = json::array();
  json employment = json::array();
  json capital = json::array();
  for (const auto& r : alignment.rows) {
    categories.push_back(r.label);
    effort.push_back(r.effort_share);
    employment.push_back(r.employment_share);
    capital.push_back(r.capital_share);
  }
  return {{"kind", "bars"},
          {"level", alignment.level.name()},
          {"categories", std::move(categories)},
          {"series",
           json::array({{{"name", "effort_share"}, {"values", std::move(effort)}},
                        {{"name", "effective_employment_share"}, {"values", std::move(employment)}},
                        {{"name", "effective_capital_share"}, {"values", std::move(capital)}}})}};
}

}  // namespace atlas
