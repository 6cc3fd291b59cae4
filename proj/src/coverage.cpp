#include "atlas/coverage.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "atlas/csv.hpp"
#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

namespace {

void require_kind(const MappingResult& r, const Taxonomy& t) {
  if (r.taxonomy_kind != t.kind()) {
    throw InputError("foreign mapping for " + r.example.str() + ": " +
                     std::string(to_string(r.taxonomy_kind)) + " result passed to a " +
                     std::string(to_string(t.kind())) + " taxonomy");
  }
}

// Distinct node ids at `depth` reached by the result's paths.
std::set<std::string> nodes_reached(const MappingResult& r, const Taxonomy& t, int depth) {
  std::set<std::string> out;
  for (const auto& p : r.paths) {
    if (!t.contains(p)) {
      throw InputError("mapping for " + r.example.str() + " has a path absent from the " +
                       std::string(to_string(t.kind())) + " taxonomy: " + p.key());
    }
    out.insert(p.id_at_depth(depth));
  }
  return out;
}

}  // namespace

CoverageAccumulator::CoverageAccumulator(const Taxonomy& taxonomy)
    : taxonomy_(&taxonomy), seen_(taxonomy.path_count(), false) {}

bool CoverageAccumulator::add_index(std::size_t path_index) {
  if (seen_.at(path_index)) return false;
  seen_[path_index] = true;
  ++covered_;
  return true;
}

bool CoverageAccumulator::add(const TaxonomyPath& path) {
  if (path.kind() != taxonomy_->kind()) {
    throw InputError("foreign path " + path.key() + " for a " +
                     std::string(to_string(taxonomy_->kind())) + " taxonomy");
  }
  auto idx = taxonomy_->index_of(path);
  if (!idx) throw InputError("path " + path.key() + " is not in the taxonomy");
  return add_index(*idx);
}

std::size_t CoverageAccumulator::add(const MappingResult& result) {
  require_kind(result, *taxonomy_);
  std::size_t added = 0;
  for (const auto& p : result.paths) added += add(p) ? 1 : 0;
  return added;
}

void CoverageAccumulator::merge(const CoverageAccumulator& other) {
  if (other.seen_.size() != seen_.size()) {
    throw std::invalid_argument("cannot merge coverage over different taxonomies");
  }
  for (std::size_t i = 0; i < seen_.size(); ++i) {
    if (other.seen_[i]) add_index(i);
  }
}

double CoverageAccumulator::fraction() const {
  return seen_.empty() ? 0.0 : static_cast<double>(covered_) / static_cast<double>(seen_.size());
}

CoverageReport coverage(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                        std::string corpus_label) {
  CoverageReport report;
  report.kind = taxonomy.kind();
  report.corpus_label = std::move(corpus_label);
  report.total_paths = taxonomy.path_count();
  CoverageAccumulator pooled(taxonomy);
  std::map<std::string, CoverageAccumulator> per_bench;
  for (const auto& r : results) {
    pooled.add(r);
    auto it = per_bench.try_emplace(r.example.benchmark, taxonomy).first;
    it->second.add(r);
  }
  for (std::size_t i = 0; i < taxonomy.path_count(); ++i) {
    if (pooled.is_covered(i)) report.covered_paths.push_back(taxonomy.paths()[i]);
  }
  report.coverage = pooled.fraction();
  for (const auto& [bench, acc] : per_bench) {
    report.per_benchmark[bench] = acc.fraction();
    report.per_benchmark_paths[bench] = acc.covered();
  }
  return report;
}

std::string GroupLevel::name() const {
  if (kind == TaxonomyKind::kDomain) {
    switch (depth) {
      case 1: return "domain_family";
      case 2: return "domain_occupation";
      case 3: return "domain_task";
    }
  } else {
    switch (depth) {
      case 1: return "skill_category";
      case 2: return "skill_group";
      case 3: return "skill_leaf";
    }
  }
  return std::string(to_string(kind)) + "_level" + std::to_string(depth);
}

void require_level(const GroupLevel& level, const Taxonomy& taxonomy) {
  if (level.kind != taxonomy.kind() || level.depth < 1 || level.depth > Taxonomy::kLeafDepth) {
    throw std::invalid_argument("grouping level " + level.name() + " is not valid for a " +
                                std::string(to_string(taxonomy.kind())) + " taxonomy");
  }
}

std::size_t EffortDistribution::total_incidences() const {
  std::size_t n = 0;
  for (const auto& c : counts) n += c.count;
  return n;
}

std::size_t EffortDistribution::count_for(std::string_view node_id) const {
  for (const auto& c : counts) {
    if (c.node_id == node_id) return c.count;
  }
  return 0;
}

EffortDistribution effort_by_node(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                                  const GroupLevel& level) {
  require_level(level, taxonomy);
  // Union per example first, so one example with several results still
  // counts once per node.
  std::map<ExampleRef, std::set<std::string>> reached;
  for (const auto& r : results) {
    require_kind(r, taxonomy);
    auto& nodes = reached[r.example];
    auto more = nodes_reached(r, taxonomy, level.depth);
    nodes.insert(more.begin(), more.end());
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& [ref, nodes] : reached) {
    for (const auto& n : nodes) ++counts[n];
  }
  EffortDistribution out;
  out.level = level;
  out.total_examples = reached.size();
  for (const TaxonomyNode* n : taxonomy.nodes_at_level(level.depth)) {
    auto it = counts.find(n->id);
    out.counts.push_back({n->id, n->label, it == counts.end() ? 0 : it->second});
  }
  return out;
}

BreadthStats breadth(std::span<const MappingResult> results, const Taxonomy& taxonomy,
                     const GroupLevel& level) {
  require_level(level, taxonomy);
  std::map<ExampleRef, std::set<std::string>> reached;
  for (const auto& r : results) {
    require_kind(r, taxonomy);
    auto& nodes = reached[r.example];
    auto more = nodes_reached(r, taxonomy, level.depth);
    nodes.insert(more.begin(), more.end());
  }
  BreadthStats out;
  out.level = level;
  out.total_examples = reached.size();
  std::map<std::string, std::pair<std::size_t, std::size_t>> bench_sum;  // sum, mapped count
  double sum = 0.0;
  for (const auto& [ref, nodes] : reached) {
    const std::size_t b = nodes.size();
    out.per_example[ref] = b;
    ++out.histogram[b];
    sum += static_cast<double>(b);
    auto& acc = bench_sum[ref.benchmark];
    if (b > 0) {
      acc.first += b;
      ++acc.second;
    }
  }
  if (out.total_examples > 0) {
    const double n = static_cast<double>(out.total_examples);
    auto share = [&](auto pred) {
      std::size_t c = 0;
      for (const auto& [b, k] : out.histogram) c += pred(b) ? k : 0;
      return static_cast<double>(c) / n;
    };
    out.share_zero = share([](std::size_t b) { return b == 0; });
    out.share_one = share([](std::size_t b) { return b == 1; });
    out.share_gt1 = share([](std::size_t b) { return b > 1; });
    out.share_gt3 = share([](std::size_t b) { return b > 3; });
    out.share_ge4 = share([](std::size_t b) { return b >= 4; });
    out.mean = sum / n;
  }
  for (const auto& [bench, acc] : bench_sum) {
    out.per_benchmark_mean[bench] =
        acc.second == 0 ? 0.0 : static_cast<double>(acc.first) / static_cast<double>(acc.second);
  }
  return out;
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> reports) {
  csv::Writer w(out);
  w.row({"benchmark", "kind", "covered_paths", "total_paths", "coverage"});
  for (const auto& r : reports) {
    w.row({std::string(kAllBenchmarks), std::string(to_string(r.kind)),
           std::to_string(r.covered_paths.size()), std::to_string(r.total_paths),
           text::format_double(r.coverage)});
  }
  for (const auto& r : reports) {
    for (const auto& [bench, cov] : r.per_benchmark) {
      w.row({bench, std::string(to_string(r.kind)), std::to_string(r.per_benchmark_paths.at(bench)),
             std::to_string(r.total_paths), text::format_double(cov)});
    }
  }
}

void write_effort_csv(std::ostream& out, const EffortDistribution& effort) {
  csv::Writer w(out);
  w.row({"level", "node_id", "label", "count", "share"});
  const double total = static_cast<double>(effort.total_incidences());
  for (const auto& c : effort.counts) {
    w.row({effort.level.name(), c.node_id, c.label, std::to_string(c.count),
           text::format_double(total > 0 ? static_cast<double>(c.count) / total : 0.0)});
  }
}

void write_breadth_csv(std::ostream& out, const BreadthStats& stats) {
  csv::Writer w(out);
  w.row({"level", "breadth", "examples", "share"});
  const double n = static_cast<double>(stats.total_examples);
  for (const auto& [b, k] : stats.histogram) {
    w.row({stats.level.name(), std::to_string(b), std::to_string(k),
           text::format_double(n > 0 ? static_cast<double>(k) / n : 0.0)});
  }
}

json coverage_summary_json(std::span<const CoverageReport> reports,
                           std::span<const BreadthStats> breadths) {
  json j;
  j["coverage"] = json::array();
  for (const auto& r : reports) {
    j["coverage"].push_back({{"kind", std::string(to_string(r.kind))},
                             {"corpus", r.corpus_label},
                             {"covered_paths", r.covered_paths.size()},
                             {"total_paths", r.total_paths},
                             {"coverage", r.coverage},
                             {"per_benchmark", r.per_benchmark}});
  }
  j["breadth"] = json::array();
  for (const auto& b : breadths) {
    j["breadth"].push_back({{"level", b.level.name()},
                            {"examples", b.total_examples},
                            {"share_zero", b.share_zero},
                            {"share_one", b.share_one},
                            {"share_gt1", b.share_gt1},
                            {"share_gt3", b.share_gt3},
                            {"share_ge4", b.share_ge4},
                            {"mean", b.mean},
                            {"per_benchmark_mean", b.per_benchmark_mean}});
  }
  return j;
}

}  // namespace atlas
