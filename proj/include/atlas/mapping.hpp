#pragma once

#include <compare>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/annotator.hpp"
#include "atlas/taxonomy.hpp"

namespace atlas {

struct ExampleRef {
  std::string benchmark;
  std::string example_id;

  std::string str() const { return benchmark + "/" + example_id; }
  friend bool operator==(const ExampleRef&, const ExampleRef&) = default;
  friend auto operator<=>(const ExampleRef&, const ExampleRef&) = default;
};

struct TaskExample {
  std::string benchmark;
  std::string example_id;
  std::string instruction;
  std::map<std::string, std::string> metadata;

  ExampleRef ref() const { return {benchmark, example_id}; }
};

enum class MappingStatus { kMapped, kEmpty, kInvalid };

std::string_view to_string(MappingStatus s);
MappingStatus parse_mapping_status(std::string_view s);

// Validated outcome of mapping one example onto one taxonomy.
//   mapped  <=> paths non-empty (every path resolves in the taxonomy)
//   empty   <=> the annotator returned no candidates
//   invalid <=> candidates were returned but none resolved (or the output
//               did not parse)
struct MappingResult {
  ExampleRef example;
  TaxonomyKind taxonomy_kind = TaxonomyKind::kDomain;
  std::vector<TaxonomyPath> paths;
  MappingStatus status = MappingStatus::kEmpty;
  std::string raw_annotator_output;
  std::string annotator_id;
};

// Annotator output grammar. Either
//   * a JSON array of label arrays (optionally wrapped as {"paths": [...]}), or
//   * one candidate per non-blank line, labels separated by '>'.
// Blank output, "NONE" and "[]" mean zero candidates. JSON that does not have
// the expected shape, or a non-blank line without any '>', is a parse failure.
struct CandidateList {
  std::vector<std::vector<std::string>> candidates;
  bool parse_failed = false;
  std::string error;
};

CandidateList parse_candidates(std::string_view raw);

std::string mapping_key(const ExampleRef& ref, TaxonomyKind kind);
std::string_view mapping_purpose(TaxonomyKind kind);
AnnotationRequest build_mapping_request(const TaskExample& example, const Taxonomy& taxonomy);

// Turns raw annotator output into a MappingResult: resolves each candidate
// independently, keeps the resolvable ones (deduplicated, first occurrence
// order) and assigns the status.
MappingResult interpret_annotator_output(const ExampleRef& ref, const Taxonomy& taxonomy,
                                         std::string raw, std::string annotator_id);

MappingResult map_example(const TaskExample& example, const Taxonomy& taxonomy,
                          Annotator& annotator, const RetryPolicy& retry = {});

struct IngestRejection {
  std::size_t index = 0;  // 0-based record position (line number - 1 for files)
  ExampleRef example;
  std::string reason;
};

struct IngestResult {
  std::vector<TaskExample> accepted;
  std::vector<IngestRejection> rejected;
};

// Drops examples with an empty instruction, empty ids, or a repeated
// (benchmark, example_id); keeps the first occurrence.
IngestResult ingest_examples(std::span<const TaskExample> examples);

// JSON lines of {benchmark, example_id, instruction, metadata?}. Unparseable
// lines are rejected, not fatal.
IngestResult read_examples_file(const std::filesystem::path& path);

struct OutcomeCounts {
  std::size_t mapped = 0;
  std::size_t empty = 0;
  std::size_t invalid = 0;

  std::size_t total() const { return mapped + empty + invalid; }
  void add(MappingStatus s);
};

struct MapCorpusOptions {
  std::size_t parallelism = 1;
  RetryPolicy retry;
  // Invoked once per completed result, serialized (never concurrently).
  std::function<void(const MappingResult&)> on_result;
};

struct CorpusMapping {
  // Input order. After an abort, only the examples that completed.
  std::vector<MappingResult> results;
  std::vector<IngestRejection> rejected;
  OutcomeCounts counts;
  bool aborted = false;
  std::string abort_reason;
};

CorpusMapping map_corpus(std::span<const TaskExample> corpus, const Taxonomy& taxonomy,
                         Annotator& annotator, const MapCorpusOptions& options = {});

// Results of one taxonomy kind, in input order.
std::vector<MappingResult> select_kind(std::span<const MappingResult> results, TaxonomyKind kind);

inline constexpr std::string_view kAllBenchmarks = "ALL";

struct OutcomeRow {
  TaxonomyKind kind = TaxonomyKind::kDomain;
  std::string benchmark;  // kAllBenchmarks for the pooled row
  OutcomeCounts counts;
  double mapped = 0.0;
  double empty = 0.0;
  double invalid = 0.0;
};

// Pooled row first for each kind, then one row per benchmark (sorted).
std::vector<OutcomeRow> mapping_outcome_stats(std::span<const MappingResult> results);

// kind,benchmark,mapped,empty,invalid,total,mapped_share,empty_share,invalid_share
void write_outcomes_csv(std::ostream& out, std::span<const OutcomeRow> rows);

enum class Verdict { kAllCorrect, kAllWrong, kMissing, kExtra };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct RubricVerdict {
  Verdict verdict = Verdict::kAllCorrect;
  std::string notes;
};

// Set relation between predicted and reference paths:
//   equal -> all_correct, disjoint (predicted non-empty) -> all_wrong,
//   predicted strict subset -> missing, predicted strict superset -> extra.
// Partial overlap is reported as extra with the missing count in notes.
// Throws std::invalid_argument when both sets are empty.
RubricVerdict score_against_reference(std::span<const TaxonomyPath> predicted,
                                      std::span<const TaxonomyPath> reference);

// Fraction of aligned positions with the same verdict. Throws
// std::invalid_argument on a length mismatch; empty lists agree trivially.
double agreement_rate(std::span<const RubricVerdict> a, std::span<const RubricVerdict> b);

// --- Persistence -----------------------------------------------------------

nlohmann::json mapping_to_json(const MappingResult& result, const Taxonomy& taxonomy);

// One JSON object per line; `taxonomies` supplies labels for each kind.
void write_mapping_line(std::ostream& out, const MappingResult& result,
                        const Taxonomy& taxonomy);

// Schema-level view of a mappings file row, before taxonomy resolution.
struct MappingRecord {
  std::size_t line = 0;
  ExampleRef example;
  std::string taxonomy_kind;
  std::string status;
  std::vector<std::vector<std::string>> paths;
  std::string annotator_id;
  std::string raw;
};

std::vector<MappingRecord> read_mapping_records(const std::filesystem::path& path);

// Resolves records against the taxonomies; throws InputError naming the line
// and example for unknown kinds, unresolvable paths or status mismatches.
std::vector<MappingResult> resolve_mapping_records(std::span<const MappingRecord> records,
                                                   const Taxonomy& domain,
                                                   const Taxonomy& skill);

std::vector<MappingResult> read_mappings_file(const std::filesystem::path& path,
                                              const Taxonomy& domain, const Taxonomy& skill);

// Replay table keyed like build_mapping_request, built from recorded rows.
std::map<std::string, std::string> replay_outputs(std::span<const MappingRecord> records);

}  // namespace atlas
