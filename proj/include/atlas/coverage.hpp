#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "atlas/mapping.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas {

// Tracks which paths of one taxonomy have been seen. Merging is associative
// and commutative, so shards can be combined in any order.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(const Taxonomy& taxonomy);

  // Returns true if the path was not covered before. Throws InputError for a
  // path of the wrong kind or one absent from the taxonomy.
  bool add(const TaxonomyPath& path);
  bool add_index(std::size_t path_index);
  // Adds every path of a mapped result; returns how many were new.
  std::size_t add(const MappingResult& result);

  void merge(const CoverageAccumulator& other);

  std::size_t covered() const { return covered_; }
  std::size_t total() const { return seen_.size(); }
  double fraction() const;
  bool is_covered(std::size_t path_index) const { return seen_[path_index]; }

 private:
  const Taxonomy* taxonomy_;
  std::vector<bool> seen_;
  std::size_t covered_ = 0;
};

struct CoverageReport {
  TaxonomyKind kind = TaxonomyKind::kDomain;
  std::string corpus_label;
  std::vector<TaxonomyPath> covered_paths;  // taxonomy order
  std::size_t total_paths = 0;
  double coverage = 0.0;
  std::map<std::string, double> per_benchmark;
  std::map<std::string, std::size_t> per_benchmark_paths;
};

// Union of mapped paths over `results` whose kind matches `taxonomy`.
// Results of the other kind are a foreign-path InputError.
CoverageReport coverage(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                        std::string corpus_label = "corpus");

// Node grouping used for effort and breadth: nodes `depth` levels below the
// root of a `kind` taxonomy.
struct GroupLevel {
  TaxonomyKind kind = TaxonomyKind::kDomain;
  int depth = 1;

  static GroupLevel domain_family() { return {TaxonomyKind::kDomain, 1}; }
  static GroupLevel domain_occupation() { return {TaxonomyKind::kDomain, 2}; }
  static GroupLevel skill_category() { return {TaxonomyKind::kSkill, 1}; }
  static GroupLevel skill_leaf() { return {TaxonomyKind::kSkill, Taxonomy::kLeafDepth}; }

  std::string name() const;
  friend bool operator==(const GroupLevel&, const GroupLevel&) = default;
};

void require_level(const GroupLevel& level, const Taxonomy& taxonomy);

struct NodeCount {
  std::string node_id;
  std::string label;
  std::size_t count = 0;
};

struct EffortDistribution {
  GroupLevel level;
  std::vector<NodeCount> counts;  // every node at the level, taxonomy order
  std::size_t total_examples = 0;

  std::size_t total_incidences() const;
  std::size_t count_for(std::string_view node_id) const;
};

// Each example adds 1 to every distinct node at `level` reached by any of its
// mapped paths.
EffortDistribution effort_by_node(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                                  const GroupLevel& level);

struct BreadthStats {
  GroupLevel level;
  std::map<ExampleRef, std::size_t> per_example;
  std::map<std::size_t, std::size_t> histogram;
  std::size_t total_examples = 0;
  // Fractions of total_examples (unmapped examples count with breadth 0).
  double share_zero = 0.0;
  double share_one = 0.0;
  double share_gt1 = 0.0;
  double share_gt3 = 0.0;
  double share_ge4 = 0.0;
  double mean = 0.0;
  // Mean breadth over mapped examples only, per benchmark.
  std::map<std::string, double> per_benchmark_mean;
};

BreadthStats breadth(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                     const GroupLevel& level);

// --- Report output ---------------------------------------------------------

// benchmark,kind,covered_paths,total_paths,coverage
void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> reports);
// level,node_id,label,count,share
void write_effort_csv(std::ostream& out, const EffortDistribution& effort);
// level,breadth,examples,share
void write_breadth_csv(std::ostream& out, const BreadthStats& stats);

nlohmann::json coverage_summary_json(std::span<const CoverageReport> reports,
                                     std::span<const BreadthStats> breadths);

}  // namespace atlas
