#include "atlas/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "atlas/csv.hpp"
#include "atlas/text.hpp"

namespace atlas {

std::string_view to_string(StopRule rule) {
  switch (rule) {
    case StopRule::kBoth: return "both";
    case StopRule::kDomain: return "domain";
    case StopRule::kSkill: return "skill";
    case StopRule::kEither: return "either";
  }
  return "both";
}

StopRule parse_stop_rule(std::string_view s) {
  if (s == "both") return StopRule::kBoth;
  if (s == "domain") return StopRule::kDomain;
  if (s == "skill") return StopRule::kSkill;
  if (s == "either") return StopRule::kEither;
  throw std::invalid_argument("unknown stop rule '" + std::string(s) +
                              "' (expected both, domain, skill or either)");
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kSaturated ? "saturated" : "exhausted";
}

namespace {

std::vector<std::size_t> indices_of(const MappingResult& r, const Taxonomy& t) {
  std::vector<std::size_t> out;
  for (const auto& p : r.paths) {
    auto idx = t.index_of(p);
    if (!idx) throw InputError("mapping for " + r.example.str() + " has a path absent from the taxonomy: " + p.key());
    out.push_back(*idx);
  }
  return out;
}

void append_unique(std::vector<std::size_t>& into, const std::vector<std::size_t>& more) {
  for (std::size_t v : more) {
    if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double chao1_or_zero(const std::map<std::size_t, std::size_t>& counts) {
  return counts.empty() ? 0.0 : chao1(counts);
}

}  // namespace

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

SamplingPool build_pool(std::span<const MappingResult> results, const Taxonomy& domain,
                        const Taxonomy& skill, const std::string& benchmark) {
  if (domain.kind() != TaxonomyKind::kDomain || skill.kind() != TaxonomyKind::kSkill) {
    throw std::invalid_argument("build_pool needs a domain and a skill taxonomy");
  }
  SamplingPool pool;
  pool.benchmark = benchmark;
  pool.domain_total = domain.path_count();
  pool.skill_total = skill.path_count();
  std::map<std::string, std::size_t> position;
  for (const auto& r : results) {
    if (r.example.benchmark != benchmark) continue;
    auto [it, inserted] = position.try_emplace(r.example.example_id, pool.items.size());
    if (inserted) pool.items.push_back(PoolItem{r.example.example_id, {}, {}});
    PoolItem& item = pool.items[it->second];
    if (r.taxonomy_kind == TaxonomyKind::kDomain) {
      append_unique(item.domain_paths, indices_of(r, domain));
    } else {
      append_unique(item.skill_paths, indices_of(r, skill));
    }
  }
  return pool;
}

std::vector<SamplingPool> build_pools(std::span<const MappingResult> results,
                                      const Taxonomy& domain, const Taxonomy& skill) {
  std::set<std::string> benchmarks;
  for (const auto& r : results) benchmarks.insert(r.example.benchmark);
  std::vector<SamplingPool> out;
  for (const auto& b : benchmarks) out.push_back(build_pool(results, domain, skill, b));
  return out;
}

void validate(const SamplingParams& params) {
  if (params.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(params.delta > 0.0)) throw std::invalid_argument("delta must be positive");
}

SamplingRun sample_until_saturation(const SamplingPool& pool, const SamplingParams& params) {
  validate(params);
  if (pool.items.empty()) throw std::invalid_argument("sampling pool for '" + pool.benchmark + "' is empty");
  if (pool.domain_total == 0 || pool.skill_total == 0) {
    throw std::invalid_argument("sampling pool has no taxonomy paths");
  }
  SamplingRun run;
  run.benchmark = pool.benchmark;
  run.pool_size = pool.items.size();
  run.params = params;

  std::vector<bool> seen_domain(pool.domain_total, false);
  std::vector<bool> seen_skill(pool.skill_total, false);
  std::size_t covered_domain = 0;
  std::size_t covered_skill = 0;
  const double d_total = static_cast<double>(pool.domain_total);
  const double s_total = static_cast<double>(pool.skill_total);

  std::size_t next = 0;
  while (next < pool.items.size()) {
    const std::size_t end = std::min(pool.items.size(), next + params.batch_size);
    std::size_t new_domain = 0;
    std::size_t new_skill = 0;
    for (; next < end; ++next) {
      const PoolItem& item = pool.items[next];
      run.selected_ids.push_back(item.example_id);
      for (std::size_t p : item.domain_paths) {
        ++run.domain_counts[p];
        if (!seen_domain.at(p)) {
          seen_domain[p] = true;
          ++new_domain;
        }
      }
      for (std::size_t p : item.skill_paths) {
        ++run.skill_counts[p];
        if (!seen_skill.at(p)) {
          seen_skill[p] = true;
          ++new_skill;
        }
      }
    }
    covered_domain += new_domain;
    covered_skill += new_skill;
    BatchTrace t;
    t.selected = run.selected_ids.size();
    t.domain_coverage = static_cast<double>(covered_domain) / d_total;
    t.skill_coverage = static_cast<double>(covered_skill) / s_total;
    t.domain_gain_pp = 100.0 * static_cast<double>(new_domain) / d_total;
    t.skill_gain_pp = 100.0 * static_cast<double>(new_skill) / s_total;
    run.trace.push_back(t);
    ++run.batches;

    const bool domain_slow = t.domain_gain_pp < params.delta;
    const bool skill_slow = t.skill_gain_pp < params.delta;
    bool stop = false;
    switch (params.rule) {
      case StopRule::kBoth: stop = domain_slow && skill_slow; break;
      case StopRule::kDomain: stop = domain_slow; break;
      case StopRule::kSkill: stop = skill_slow; break;
      case StopRule::kEither: stop = domain_slow || skill_slow; break;
    }
    if (stop) {
      run.reason = StopReason::kSaturated;
      return run;
    }
  }
  run.reason = StopReason::kExhausted;
  return run;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

SamplingPool shuffle_pool(const SamplingPool& pool, std::uint64_t seed) {
  SamplingPool out = pool;
  std::mt19937_64 rng(seed);
  for (std::size_t i = out.items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(out.items[i - 1], out.items[j]);
  }
  return out;
}

double chao1(std::span<const std::size_t> counts) {
  if (counts.empty()) throw std::invalid_argument("chao1: no observations");
  std::size_t f1 = 0;
  std::size_t f2 = 0;
  for (std::size_t c : counts) {
    if (c == 0) throw std::invalid_argument("chao1: occurrence counts must be >= 1");
    if (c == 1) ++f1;
    if (c == 2) ++f2;
  }
  const double s_obs = static_cast<double>(counts.size());
  const double F1 = static_cast<double>(f1);
  const double F2 = static_cast<double>(f2);
  if (f2 > 0) return s_obs + F1 * F1 / (2.0 * F2);
  return s_obs + F1 * (F1 - 1.0) / (2.0 * (F2 + 1.0));
}

double chao1(const std::map<std::size_t, std::size_t>& counts) {
  std::vector<std::size_t> v;
  v.reserve(counts.size());
  for (const auto& [k, c] : counts) v.push_back(c);
  return chao1(v);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

Distribution summarize(std::span<const double> values) {
  Distribution d;
  if (values.empty()) return d;
  const std::vector<double> v(values.begin(), values.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double n = static_cast<double>(v.size());
  d.mean = sum / n;
  d.median = percentile(v, 0.5);
  d.lo = percentile(v, 0.025);
  d.hi = percentile(v, 0.975);
  double ss = 0.0;
  for (double x : v) ss += (x - d.mean) * (x - d.mean);
  const double se = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  d.mean_ci_lo = d.mean - 1.959963984540054 * se;
  d.mean_ci_hi = d.mean + 1.959963984540054 * se;
  return d;
}

PermutationOutcome summarize_run(const SamplingRun& run, std::uint64_t seed) {
  PermutationOutcome o;
  o.seed = seed;
  o.stop_size = run.selected_ids.size();
  o.domain_coverage = run.final_domain_coverage();
  o.skill_coverage = run.final_skill_coverage();
  o.domain_chao1 = chao1_or_zero(run.domain_counts);
  o.skill_chao1 = chao1_or_zero(run.skill_counts);
  o.domain_completeness =
      o.domain_chao1 > 0 ? static_cast<double>(run.domain_counts.size()) / o.domain_chao1 : 0.0;
  o.skill_completeness =
      o.skill_chao1 > 0 ? static_cast<double>(run.skill_counts.size()) / o.skill_chao1 : 0.0;
  return o;
}

SensitivitySummary permutation_sensitivity(const SamplingPool& pool, const SamplingParams& params,
                                           std::size_t permutations, std::uint64_t seed,
                                           std::size_t parallelism) {
  validate(params);
  if (permutations < 1) throw std::invalid_argument("permutations must be >= 1");
  if (pool.items.empty()) throw std::invalid_argument("sampling pool for '" + pool.benchmark + "' is empty");
  SensitivitySummary s;
  s.benchmark = pool.benchmark;
  s.pool_size = pool.items.size();
  s.permutations = permutations;
  s.seed = seed;
  s.params = params;
  s.runs.resize(permutations);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= permutations) return;
      const std::uint64_t sub = derive_seed(seed, i);
      SamplingParams p = params;
      p.seed = sub;
      s.runs[i] = summarize_run(sample_until_saturation(shuffle_pool(pool, sub), p), sub);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, permutations));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }

  auto column = [&](auto field) {
    std::vector<double> v;
    v.reserve(s.runs.size());
    for (const auto& r : s.runs) v.push_back(static_cast<double>(field(r)));
    return summarize(v);
  };
  s.stop_size = column([](const PermutationOutcome& r) { return r.stop_size; });
  s.domain_coverage = column([](const PermutationOutcome& r) { return r.domain_coverage; });
  s.skill_coverage = column([](const PermutationOutcome& r) { return r.skill_coverage; });
  s.domain_completeness = column([](const PermutationOutcome& r) { return r.domain_completeness; });
  s.skill_completeness = column([](const PermutationOutcome& r) { return r.skill_completeness; });
  s.domain_chao1 = column([](const PermutationOutcome& r) { return r.domain_chao1; });
  s.skill_chao1 = column([](const PermutationOutcome& r) { return r.skill_chao1; });
  return s;
}

void write_sampling_runs_csv(std::ostream& out, std::span<const SamplingRun> runs) {
  csv::Writer w(out);
  w.row({"benchmark", "seed", "pool_size", "batch_size", "delta", "stop_rule", "batches",
         "selected", "stop_reason", "domain_coverage", "skill_coverage"});
  for (const auto& r : runs) {
    w.row({r.benchmark, r.params.seed ? std::to_string(*r.params.seed) : "",
           std::to_string(r.pool_size), std::to_string(r.params.batch_size),
           text::format_double(r.params.delta), std::string(to_string(r.params.rule)),
           std::to_string(r.batches), std::to_string(r.selected_ids.size()),
           std::string(to_string(r.reason)), text::format_double(r.final_domain_coverage()),
           text::format_double(r.final_skill_coverage())});
  }
}

void write_sampling_trace_csv(std::ostream& out, std::span<const SamplingRun> runs) {
  csv::Writer w(out);
  w.row({"benchmark", "batch", "selected", "domain_coverage", "skill_coverage", "domain_gain_pp",
         "skill_gain_pp"});
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& t = r.trace[i];
      w.row({r.benchmark, std::to_string(i + 1), std::to_string(t.selected),
             text::format_double(t.domain_coverage), text::format_double(t.skill_coverage),
             text::format_double(t.domain_gain_pp), text::format_double(t.skill_gain_pp)});
    }
  }
}

void write_sensitivity_csv(std::ostream& out, std::span<const SensitivitySummary> summaries) {
  csv::Writer w(out);
  w.row({"benchmark", "total", "size_avg", "size_lo", "size_hi", "domain_avg", "domain_lo",
         "domain_hi", "skill_avg", "skill_lo", "skill_hi"});
  auto pct = [](double v) { return text::format_fixed(100.0 * v, 1); };
  auto one = [](double v) { return text::format_fixed(v, 1); };
  for (const auto& s : summaries) {
    w.row({s.benchmark, std::to_string(s.pool_size), one(s.stop_size.mean), one(s.stop_size.lo),
           one(s.stop_size.hi), pct(s.domain_completeness.mean), pct(s.domain_completeness.lo),
           pct(s.domain_completeness.hi), pct(s.skill_completeness.mean),
           pct(s.skill_completeness.lo), pct(s.skill_completeness.hi)});
  }
}

void write_sensitivity_detail_csv(std::ostream& out, std::span<const SensitivitySummary> summaries) {
  csv::Writer w(out);
  w.row({"benchmark", "measure", "permutations", "seed", "mean", "median", "p2_5", "p97_5",
         "mean_ci_lo", "mean_ci_hi"});
  for (const auto& s : summaries) {
    const std::pair<const char*, const Distribution*> measures[] = {
        {"stop_size", &s.stop_size},
        {"domain_coverage", &s.domain_coverage},
        {"skill_coverage", &s.skill_coverage},
        {"domain_chao1", &s.domain_chao1},
        {"skill_chao1", &s.skill_chao1},
        {"domain_completeness", &s.domain_completeness},
        {"skill_completeness", &s.skill_completeness},
    };
    for (const auto& [name, d] : measures) {
      w.row({s.benchmark, name, std::to_string(s.permutations), std::to_string(s.seed),
             text::format_double(d->mean), text::format_double(d->median),
             text::format_double(d->lo), text::format_double(d->hi),
             text::format_double(d->mean_ci_lo), text::format_double(d->mean_ci_hi)});
    }
  }
}

}  // namespace atlas
