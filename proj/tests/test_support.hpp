#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "atlas/mapping.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ATLAS_FIXTURE_DIR) / name;
}

inline TaxonomyNode leaf(std::string id, std::string label) {
  TaxonomyNode n;
  n.id = std::move(id);
  n.label = std::move(label);
  return n;
}

inline TaxonomyNode inner(std::string id, std::string label, std::vector<TaxonomyNode> children) {
  TaxonomyNode n = leaf(std::move(id), std::move(label));
  n.children = std::move(children);
  return n;
}

// Depth-3 tree with `branching` children per node; ids and labels "i.j.k".
inline Taxonomy balanced(TaxonomyKind kind, int branching) {
  std::vector<TaxonomyNode> top;
  for (int i = 0; i < branching; ++i) {
    std::vector<TaxonomyNode> mid;
    for (int j = 0; j < branching; ++j) {
      std::vector<TaxonomyNode> leaves;
      for (int k = 0; k < branching; ++k) {
        const std::string id = std::to_string(i) + "." + std::to_string(j) + "." + std::to_string(k);
        leaves.push_back(leaf(id, "L" + id));
      }
      const std::string id = std::to_string(i) + "." + std::to_string(j);
      mid.push_back(inner(id, "M" + id, std::move(leaves)));
    }
    top.push_back(inner(std::to_string(i), "T" + std::to_string(i), std::move(mid)));
  }
  return build_taxonomy(kind, inner("root", "root", std::move(top)));
}

// Uneven depth-3 tree drawn from `rng`: 1-4 children per inner node.
inline Taxonomy random_taxonomy(TaxonomyKind kind, std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  std::vector<TaxonomyNode> top;
  const int n1 = pick(1, 4);
  for (int i = 0; i < n1; ++i) {
    std::vector<TaxonomyNode> mid;
    const int n2 = pick(1, 4);
    for (int j = 0; j < n2; ++j) {
      std::vector<TaxonomyNode> leaves;
      const int n3 = pick(1, 4);
      for (int k = 0; k < n3; ++k) {
        const std::string id = std::to_string(i) + "." + std::to_string(j) + "." + std::to_string(k);
        leaves.push_back(leaf(id, "L" + id));
      }
      const std::string id = std::to_string(i) + "." + std::to_string(j);
      mid.push_back(inner(id, "M" + id, std::move(leaves)));
    }
    top.push_back(inner(std::to_string(i), "T" + std::to_string(i), std::move(mid)));
  }
  return build_taxonomy(kind, inner("root", "root", std::move(top)));
}

inline MappingResult mapped(const std::string& bench, const std::string& id, const Taxonomy& t,
                            std::vector<std::size_t> path_indices) {
  MappingResult r;
  r.example = {bench, id};
  r.taxonomy_kind = t.kind();
  for (std::size_t i : path_indices) r.paths.push_back(t.paths().at(i));
  r.status = r.paths.empty() ? MappingStatus::kEmpty : MappingStatus::kMapped;
  r.annotator_id = "test";
  return r;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("atlas-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace atlas::testing
