#include "atlas/annotator.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

std::string annotate_with_retry(Annotator& annotator, const AnnotationRequest& request,
                                const RetryPolicy& policy) {
  const int attempts = std::max(1, policy.max_attempts);
  auto backoff = policy.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      return annotator.annotate(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      if (attempt == attempts) break;
      if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) *
                                 policy.backoff_multiplier));
    }
  }
  throw AnnotatorFailure("annotator '" + annotator.id() + "' failed after " +
                             std::to_string(attempts) + " attempts for '" +
                             request.key + "': " + last_error,
                         attempts);
}

KeywordAnnotator::KeywordAnnotator(std::string id, std::vector<Rule> rules,
                                   std::map<std::string, std::string> fallback)
    : id_(std::move(id)), rules_(std::move(rules)), fallback_(std::move(fallback)) {
  for (auto& r : rules_) r.keyword = text::canonicalize(r.keyword);
}

KeywordAnnotator KeywordAnnotator::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open keyword rules " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  std::vector<Rule> rules;
  std::map<std::string, std::string> fallback;
  try {
    for (const auto& r : doc.at("rules")) {
      rules.push_back(Rule{r.at("purpose").get<std::string>(),
                           r.at("keyword").get<std::string>(),
                           r.at("output").get<std::string>()});
    }
    if (doc.contains("fallback")) {
      fallback = doc.at("fallback").get<std::map<std::string, std::string>>();
    }
    return KeywordAnnotator(doc.value("id", "keyword:" + path.filename().string()),
                            std::move(rules), std::move(fallback));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string KeywordAnnotator::annotate(const AnnotationRequest& request) {
  const std::string subject = text::canonicalize(request.subject);
  std::vector<std::string> lines;
  std::set<std::string> seen;
  for (const auto& rule : rules_) {
    if (rule.purpose != request.purpose) continue;
    const std::string keyword = text::canonicalize(rule.keyword);
    if (keyword.empty() || subject.find(keyword) == std::string::npos) continue;
    if (seen.insert(rule.output).second) lines.push_back(rule.output);
  }
  if (lines.empty()) {
    auto it = fallback_.find(request.purpose);
    return it == fallback_.end() ? std::string() : it->second;
  }
  return text::join(lines, "\n");
}

ReplayAnnotator::ReplayAnnotator(std::string id, std::map<std::string, std::string> outputs)
    : id_(std::move(id)), outputs_(std::move(outputs)) {}

ReplayAnnotator ReplayAnnotator::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open replay file " + path.string());
  std::map<std::string, std::string> outputs;
  std::string line;
  std::size_t lineno = 0;
  std::string id = "replay:" + path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("annotator_id") && outputs.empty()) {
        id = "replay:" + j.at("annotator_id").get<std::string>();
      }
      outputs[j.at("key").get<std::string>()] = j.at("output").get<std::string>();
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ReplayAnnotator(std::move(id), std::move(outputs));
}

std::string ReplayAnnotator::annotate(const AnnotationRequest& request) {
  auto it = outputs_.find(request.key);
  if (it == outputs_.end()) {
    throw AnnotatorError("replay annotator has no recorded output for '" + request.key + "'");
  }
  return it->second;
}

}  // namespace atlas
