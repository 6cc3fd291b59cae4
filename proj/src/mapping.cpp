#include "atlas/mapping.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

#include "atlas/csv.hpp"
#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

std::string_view to_string(MappingStatus s) {
  switch (s) {
    case MappingStatus::kMapped: return "mapped";
    case MappingStatus::kEmpty: return "empty";
    case MappingStatus::kInvalid: return "invalid";
  }
  return "invalid";
}

MappingStatus parse_mapping_status(std::string_view s) {
  if (s == "mapped") return MappingStatus::kMapped;
  if (s == "empty") return MappingStatus::kEmpty;
  if (s == "invalid") return MappingStatus::kInvalid;
  throw InputError("unknown mapping status '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kAllCorrect: return "all_correct";
    case Verdict::kAllWrong: return "all_wrong";
    case Verdict::kMissing: return "missing";
    case Verdict::kExtra: return "extra";
  }
  return "all_wrong";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "all_correct") return Verdict::kAllCorrect;
  if (s == "all_wrong") return Verdict::kAllWrong;
  if (s == "missing") return Verdict::kMissing;
  if (s == "extra") return Verdict::kExtra;
  throw InputError("unknown rubric verdict '" + std::string(s) + "'");
}

void OutcomeCounts::add(MappingStatus s) {
  switch (s) {
    case MappingStatus::kMapped: ++mapped; break;
    case MappingStatus::kEmpty: ++empty; break;
    case MappingStatus::kInvalid: ++invalid; break;
  }
}

CandidateList parse_candidates(std::string_view raw) {
  CandidateList out;
  const std::string_view body = text::trim(raw);
  if (body.empty() || text::iequals(body, "none")) return out;
  if (body.front() == '[' || body.front() == '{') {
    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
      out.parse_failed = true;
      out.error = "output is not valid JSON";
      return out;
    }
    const json* list = &doc;
    if (doc.is_object()) {
      auto it = doc.find("paths");
      if (it == doc.end()) {
        out.parse_failed = true;
        out.error = "JSON object without 'paths'";
        return out;
      }
      list = &*it;
    }
    if (!list->is_array()) {
      out.parse_failed = true;
      out.error = "'paths' is not an array";
      return out;
    }
    for (const auto& seq : *list) {
      if (!seq.is_array() || seq.empty() ||
          !std::all_of(seq.begin(), seq.end(), [](const json& l) { return l.is_string(); })) {
        out.parse_failed = true;
        out.error = "each candidate must be a non-empty array of strings";
        out.candidates.clear();
        return out;
      }
      std::vector<std::string> labels;
      for (const auto& l : seq) labels.push_back(l.get<std::string>());
      out.candidates.push_back(std::move(labels));
    }
    return out;
  }
  for (const auto& line : text::split(body, '\n')) {
    if (text::trim(line).empty()) continue;
    if (line.find('>') == std::string::npos) {
      out.parse_failed = true;
      out.error = "line without '>' separators: " + std::string(text::trim(line));
      out.candidates.clear();
      return out;
    }
    std::vector<std::string> labels;
    for (const auto& part : text::split(line, '>')) {
      labels.emplace_back(text::trim(part));
    }
    out.candidates.push_back(std::move(labels));
  }
  return out;
}

std::string mapping_key(const ExampleRef& ref, TaxonomyKind kind) {
  return ref.benchmark + "/" + ref.example_id + "/" + std::string(to_string(kind));
}

std::string_view mapping_purpose(TaxonomyKind kind) {
  return kind == TaxonomyKind::kDomain ? purpose::kMapDomain : purpose::kMapSkill;
}

AnnotationRequest build_mapping_request(const TaskExample& example, const Taxonomy& taxonomy) {
  AnnotationRequest req;
  req.key = mapping_key(example.ref(), taxonomy.kind());
  req.purpose = std::string(mapping_purpose(taxonomy.kind()));
  req.subject = example.instruction;
  req.prompt =
      "Identify every path of the " + std::string(to_string(taxonomy.kind())) +
      " taxonomy below that is relevant to the task.\n"
      "Answer with one path per line, written as labels from a top-level category "
      "down to a leaf separated by ' > '. Answer NONE if no path applies.\n\n"
      "Task: " + example.instruction + "\n\n" + taxonomy.flatten_for_prompt();
  return req;
}

MappingResult interpret_annotator_output(const ExampleRef& ref, const Taxonomy& taxonomy,
                                         std::string raw, std::string annotator_id) {
  MappingResult result;
  result.example = ref;
  result.taxonomy_kind = taxonomy.kind();
  result.annotator_id = std::move(annotator_id);
  const CandidateList parsed = parse_candidates(raw);
  result.raw_annotator_output = std::move(raw);
  if (parsed.parse_failed) {
    result.status = MappingStatus::kInvalid;
    return result;
  }
  if (parsed.candidates.empty()) {
    result.status = MappingStatus::kEmpty;
    return result;
  }
  std::set<std::string> seen;
  for (const auto& labels : parsed.candidates) {
    try {
      TaxonomyPath p = taxonomy.resolve(labels);
      if (seen.insert(p.key()).second) result.paths.push_back(std::move(p));
    } catch (const ResolveError&) {
      // Unresolvable candidates are dropped; the status reflects the rest.
    }
  }
  result.status = result.paths.empty() ? MappingStatus::kInvalid : MappingStatus::kMapped;
  return result;
}

MappingResult map_example(const TaskExample& example, const Taxonomy& taxonomy,
                          Annotator& annotator, const RetryPolicy& retry) {
  const AnnotationRequest req = build_mapping_request(example, taxonomy);
  std::string raw = annotate_with_retry(annotator, req, retry);
  return interpret_annotator_output(example.ref(), taxonomy, std::move(raw), annotator.id());
}

IngestResult ingest_examples(std::span<const TaskExample> examples) {
  IngestResult out;
  std::set<ExampleRef> seen;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const TaskExample& e = examples[i];
    std::string reason;
    if (text::trim(e.benchmark).empty()) {
      reason = "empty benchmark";
    } else if (text::trim(e.example_id).empty()) {
      reason = "empty example_id";
    } else if (text::trim(e.instruction).empty()) {
      reason = "empty instruction";
    } else if (!seen.insert(e.ref()).second) {
      reason = "duplicate (benchmark, example_id)";
    }
    if (reason.empty()) {
      out.accepted.push_back(e);
    } else {
      out.rejected.push_back({i, e.ref(), reason});
    }
  }
  return out;
}

IngestResult read_examples_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open examples file " + path.string());
  std::vector<TaskExample> examples;
  std::vector<std::size_t> positions;
  IngestResult out;
  std::string line;
  std::size_t index = 0;
  for (; std::getline(in, line); ++index) {
    if (text::trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      out.rejected.push_back({index, {}, "line is not a JSON object"});
      continue;
    }
    TaskExample e;
    auto str = [&](const char* k) {
      auto it = j.find(k);
      if (it == j.end()) return std::string();
      return it->is_string() ? it->get<std::string>() : it->dump();
    };
    e.benchmark = str("benchmark");
    e.example_id = str("example_id");
    e.instruction = str("instruction");
    if (auto m = j.find("metadata"); m != j.end() && m->is_object()) {
      for (const auto& [k, v] : m->items()) {
        e.metadata.emplace(k, v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    examples.push_back(std::move(e));
    positions.push_back(index);
  }
  IngestResult filtered = ingest_examples(examples);
  for (auto& r : filtered.rejected) r.index = positions[r.index];
  out.accepted = std::move(filtered.accepted);
  out.rejected.insert(out.rejected.end(), filtered.rejected.begin(), filtered.rejected.end());
  std::sort(out.rejected.begin(), out.rejected.end(),
            [](const IngestRejection& a, const IngestRejection& b) { return a.index < b.index; });
  return out;
}

CorpusMapping map_corpus(std::span<const TaskExample> corpus, const Taxonomy& taxonomy,
                         Annotator& annotator, const MapCorpusOptions& options) {
  if (options.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  CorpusMapping out;
  IngestResult ingest = ingest_examples(corpus);
  out.rejected = std::move(ingest.rejected);
  const std::vector<TaskExample>& examples = ingest.accepted;

  std::vector<std::optional<MappingResult>> slots(examples.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;  // guards abort_reason and on_result

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= examples.size()) return;
      try {
        MappingResult r = map_example(examples[i], taxonomy, annotator, options.retry);
        std::lock_guard<std::mutex> lock(mu);
        if (options.on_result) options.on_result(r);
        slots[i] = std::move(r);
      } catch (const AnnotatorError& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!stop.exchange(true)) {
          out.aborted = true;
          out.abort_reason = e.what();
        }
      }
    }
  };

  const std::size_t n_threads = std::min(options.parallelism, std::max<std::size_t>(1, examples.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  for (auto& slot : slots) {
    if (!slot) continue;
    out.counts.add(slot->status);
    out.results.push_back(std::move(*slot));
  }
  return out;
}

std::vector<MappingResult> select_kind(std::span<const MappingResult> results, TaxonomyKind kind) {
  std::vector<MappingResult> out;
  for (const auto& r : results) {
    if (r.taxonomy_kind == kind) out.push_back(r);
  }
  return out;
}

std::vector<OutcomeRow> mapping_outcome_stats(std::span<const MappingResult> results) {
  std::map<std::pair<TaxonomyKind, std::string>, OutcomeCounts> groups;
  for (const auto& r : results) {
    groups[{r.taxonomy_kind, std::string(kAllBenchmarks)}].add(r.status);
    groups[{r.taxonomy_kind, r.example.benchmark}].add(r.status);
  }
  std::vector<OutcomeRow> rows;
  auto emit = [&](TaxonomyKind kind, const std::string& bench, const OutcomeCounts& c) {
    OutcomeRow row;
    row.kind = kind;
    row.benchmark = bench;
    row.counts = c;
    const double n = static_cast<double>(c.total());
    row.mapped = static_cast<double>(c.mapped) / n;
    row.empty = static_cast<double>(c.empty) / n;
    row.invalid = static_cast<double>(c.invalid) / n;
    rows.push_back(std::move(row));
  };
  for (TaxonomyKind kind : {TaxonomyKind::kDomain, TaxonomyKind::kSkill}) {
    auto pooled = groups.find({kind, std::string(kAllBenchmarks)});
    if (pooled == groups.end()) continue;
    emit(kind, pooled->first.second, pooled->second);
    for (const auto& [key, counts] : groups) {
      if (key.first != kind || key.second == kAllBenchmarks) continue;
      emit(kind, key.second, counts);
    }
  }
  return rows;
}

void write_outcomes_csv(std::ostream& out, std::span<const OutcomeRow> rows) {
  csv::Writer w(out);
  w.row({"kind", "benchmark", "mapped", "empty", "invalid", "total", "mapped_share", "empty_share",
         "invalid_share"});
  for (const auto& r : rows) {
    w.row({std::string(to_string(r.kind)), r.benchmark, std::to_string(r.counts.mapped),
           std::to_string(r.counts.empty), std::to_string(r.counts.invalid),
           std::to_string(r.counts.total()), text::format_double(r.mapped),
           text::format_double(r.empty), text::format_double(r.invalid)});
  }
}

RubricVerdict score_against_reference(std::span<const TaxonomyPath> predicted,
                                      std::span<const TaxonomyPath> reference) {
  const std::set<TaxonomyPath> pred(predicted.begin(), predicted.end());
  const std::set<TaxonomyPath> ref(reference.begin(), reference.end());
  if (pred.empty() && ref.empty()) {
    throw std::invalid_argument("nothing to judge: predicted and reference are both empty");
  }
  std::size_t common = 0;
  for (const auto& p : pred) common += ref.count(p);
  if (pred == ref) return {Verdict::kAllCorrect, {}};
  if (common == pred.size()) return {Verdict::kMissing, {}};
  if (common == ref.size()) return {Verdict::kExtra, {}};
  if (common == 0 && !pred.empty()) return {Verdict::kAllWrong, {}};
  // Partial overlap: some predictions are extraneous and some references are
  // absent.
  return {Verdict::kExtra,
          "mixed overlap: " + std::to_string(pred.size() - common) + " extra, " +
              std::to_string(ref.size() - common) + " missing"};
}

double agreement_rate(std::span<const RubricVerdict> a, std::span<const RubricVerdict> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("verdict lists differ in length (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i].verdict == b[i].verdict ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

json mapping_to_json(const MappingResult& result, const Taxonomy& taxonomy) {
  json paths = json::array();
  for (const auto& p : result.paths) paths.push_back(taxonomy.labels(p));
  // json objects keep keys sorted, so dump() output is stable.
  return json{{"benchmark", result.example.benchmark},
              {"example_id", result.example.example_id},
              {"taxonomy_kind", std::string(to_string(result.taxonomy_kind))},
              {"status", std::string(to_string(result.status))},
              {"paths", std::move(paths)},
              {"annotator_id", result.annotator_id},
              {"raw", result.raw_annotator_output}};
}

void write_mapping_line(std::ostream& out, const MappingResult& result, const Taxonomy& taxonomy) {
  out << mapping_to_json(result, taxonomy).dump() << '\n';
}

std::vector<MappingRecord> read_mapping_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mappings file " + path.string());
  std::vector<MappingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InputError(where + ": not a JSON object");
    try {
      MappingRecord rec;
      rec.line = lineno;
      rec.example = {j.at("benchmark").get<std::string>(), j.at("example_id").get<std::string>()};
      rec.taxonomy_kind = j.at("taxonomy_kind").get<std::string>();
      rec.status = j.at("status").get<std::string>();
      rec.paths = j.at("paths").get<std::vector<std::vector<std::string>>>();
      rec.annotator_id = j.value("annotator_id", std::string());
      rec.raw = j.value("raw", std::string());
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<MappingResult> resolve_mapping_records(std::span<const MappingRecord> records,
                                                   const Taxonomy& domain,
                                                   const Taxonomy& skill) {
  std::vector<MappingResult> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const std::string where = "mapping line " + std::to_string(rec.line) + " (" + rec.example.str() + ")";
    MappingResult r;
    r.example = rec.example;
    try {
      r.taxonomy_kind = parse_taxonomy_kind(rec.taxonomy_kind);
      r.status = parse_mapping_status(rec.status);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    const Taxonomy& t = r.taxonomy_kind == TaxonomyKind::kDomain ? domain : skill;
    std::set<std::string> seen;
    for (const auto& labels : rec.paths) {
      try {
        TaxonomyPath p = t.resolve(labels);
        if (seen.insert(p.key()).second) r.paths.push_back(std::move(p));
      } catch (const ResolveError& e) {
        throw InputError(where + ": " + e.what());
      }
    }
    if ((r.status == MappingStatus::kMapped) != !r.paths.empty()) {
      throw InputError(where + ": status '" + rec.status + "' inconsistent with " +
                       std::to_string(r.paths.size()) + " paths");
    }
    r.annotator_id = rec.annotator_id;
    r.raw_annotator_output = rec.raw;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MappingResult> read_mappings_file(const std::filesystem::path& path,
                                              const Taxonomy& domain, const Taxonomy& skill) {
  const auto records = read_mapping_records(path);
  return resolve_mapping_records(records, domain, skill);
}

std::map<std::string, std::string> replay_outputs(std::span<const MappingRecord> records) {
  std::map<std::string, std::string> out;
  for (const auto& rec : records) {
    out[rec.example.benchmark + "/" + rec.example.example_id + "/" + rec.taxonomy_kind] = rec.raw;
  }
  return out;
}

}  // namespace atlas
