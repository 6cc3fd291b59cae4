#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "atlas/mapping.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas {

// One candidate example, reduced to the dense path indices it covers.
struct PoolItem {
  std::string example_id;
  std::vector<std::size_t> domain_paths;
  std::vector<std::size_t> skill_paths;
};

struct SamplingPool {
  std::string benchmark;
  std::size_t domain_total = 0;  // |paths| of the domain taxonomy
  std::size_t skill_total = 0;
  std::vector<PoolItem> items;   // sampling order
};

// Joins domain and skill results of `benchmark` by example id; order is the
// first appearance of each example in `results`.
SamplingPool build_pool(std::span<const MappingResult> results, const Taxonomy& domain,
                        const Taxonomy& skill, const std::string& benchmark);

// One pool per benchmark, sorted by benchmark name.
std::vector<SamplingPool> build_pools(std::span<const MappingResult> results,
                                      const Taxonomy& domain, const Taxonomy& skill);

// Which per-batch coverage gains must fall below delta before stopping.
enum class StopRule { kBoth, kDomain, kSkill, kEither };

std::string_view to_string(StopRule rule);
StopRule parse_stop_rule(std::string_view s);

struct SamplingParams {
  std::size_t batch_size = 5;
  // Minimum per-batch coverage gain, in percentage points of the taxonomy.
  double delta = 0.1;
  StopRule rule = StopRule::kBoth;
  // Seed that produced the pool order; recorded, never used for sampling.
  std::optional<std::uint64_t> seed;
};

// Throws std::invalid_argument for batch_size == 0 or delta <= 0.
void validate(const SamplingParams& params);

struct BatchTrace {
  std::size_t selected = 0;          // examples selected after this batch
  double domain_coverage = 0.0;      // fractions in [0, 1]
  double skill_coverage = 0.0;
  double domain_gain_pp = 0.0;       // percentage points added by the batch
  double skill_gain_pp = 0.0;
};

enum class StopReason { kSaturated, kExhausted };
std::string_view to_string(StopReason reason);

struct SamplingRun {
  std::string benchmark;
  std::size_t pool_size = 0;
  std::vector<std::string> selected_ids;
  SamplingParams params;
  std::size_t batches = 0;  // batches consumed; the stop batch is batches - 1
  StopReason reason = StopReason::kExhausted;
  std::vector<BatchTrace> trace;
  // Occurrences of each path index among the selected examples.
  std::map<std::size_t, std::size_t> domain_counts;
  std::map<std::size_t, std::size_t> skill_counts;

  double final_domain_coverage() const { return trace.empty() ? 0.0 : trace.back().domain_coverage; }
  double final_skill_coverage() const { return trace.empty() ? 0.0 : trace.back().skill_coverage; }
};

// Consumes whole batches in pool order until one batch gains less than
// delta per the stop rule, or the pool runs out. At least one batch is
// always consumed. Throws std::invalid_argument on bad parameters or an
// empty pool.
SamplingRun sample_until_saturation(const SamplingPool& pool, const SamplingParams& params);

// Uniform integer in [0, n) without modulo bias; identical on every platform.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

// Deterministic Fisher-Yates shuffle driven by a 64-bit Mersenne Twister.
SamplingPool shuffle_pool(const SamplingPool& pool, std::uint64_t seed);

// Independent per-permutation seed derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Chao1 richness from per-category occurrence counts (each >= 1):
//   S_obs + f1^2 / (2 f2)            if f2 > 0
//   S_obs + f1 (f1 - 1) / (2 (f2+1)) if f2 = 0
// Throws std::invalid_argument for empty input or a zero count.
double chao1(std::span<const std::size_t> counts);
double chao1(const std::map<std::size_t, std::size_t>& counts);

struct Distribution {
  double mean = 0.0;
  double median = 0.0;
  double lo = 0.0;  // empirical 2.5th percentile
  double hi = 0.0;  // empirical 97.5th percentile
  // Normal-approximation 95% interval of the mean, reported for comparison.
  double mean_ci_lo = 0.0;
  double mean_ci_hi = 0.0;
};

// Linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);
Distribution summarize(std::span<const double> values);

struct PermutationOutcome {
  std::uint64_t seed = 0;
  std::size_t stop_size = 0;
  double domain_coverage = 0.0;
  double skill_coverage = 0.0;
  double domain_chao1 = 0.0;
  double skill_chao1 = 0.0;
  // Observed distinct paths divided by the Chao1 estimate (0 if nothing seen).
  double domain_completeness = 0.0;
  double skill_completeness = 0.0;
};

PermutationOutcome summarize_run(const SamplingRun& run, std::uint64_t seed);

struct SensitivitySummary {
  std::string benchmark;
  std::size_t pool_size = 0;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
  SamplingParams params;
  Distribution stop_size;
  Distribution domain_coverage;
  Distribution skill_coverage;
  Distribution domain_completeness;
  Distribution skill_completeness;
  Distribution domain_chao1;
  Distribution skill_chao1;
  std::vector<PermutationOutcome> runs;
};

// Replays the stopping rule over `permutations` independent shuffles of the
// pool. Replays may run on up to `parallelism` threads; the summary depends
// only on (pool, params, permutations, seed).
SensitivitySummary permutation_sensitivity(const SamplingPool& pool, const SamplingParams& params,
                                           std::size_t permutations, std::uint64_t seed,
                                           std::size_t parallelism = 1);

// benchmark,seed,pool_size,batch_size,delta,stop_rule,batches,selected,stop_reason,domain_coverage,skill_coverage
void write_sampling_runs_csv(std::ostream& out, std::span<const SamplingRun> runs);
// benchmark,batch,selected,domain_coverage,skill_coverage,domain_gain_pp,skill_gain_pp
void write_sampling_trace_csv(std::ostream& out, std::span<const SamplingRun> runs);
// Compact layout, coverage columns are Chao1 completeness in percent:
// benchmark,total,size_avg,size_lo,size_hi,domain_avg,domain_lo,domain_hi,skill_avg,skill_lo,skill_hi
void write_sensitivity_csv(std::ostream& out, std::span<const SensitivitySummary> summaries);
// Every distribution (mean, median, percentiles, mean CI) for every measure.
void write_sensitivity_detail_csv(std::ostream& out, std::span<const SensitivitySummary> summaries);

}  // namespace atlas
