#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "atlas/error.hpp"

namespace atlas {

// What a request is for; remote endpoints and keyword rules dispatch on it.
namespace purpose {
inline constexpr std::string_view kMapDomain = "map-domain";
inline constexpr std::string_view kMapSkill = "map-skill";
inline constexpr std::string_view kDigitalLabel = "digital-label";
inline constexpr std::string_view kOrderingJudge = "ordering-judge";
}  // namespace purpose

struct AnnotationRequest {
  // Stable identity of the request, e.g. "WebShop/17/domain". Replay
  // annotators look answers up by this key.
  std::string key;
  std::string purpose;
  // Fully rendered prompt text.
  std::string prompt;
  // Primary text the prompt is about (instruction, task description).
  std::string subject;
};

// Text-in/text-out annotator. Implementations must be safe to call from
// several threads at once. Transient failures throw TransportError; anything
// else that prevents an answer throws AnnotatorError.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::string id() const = 0;
  virtual std::string annotate(const AnnotationRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
};

// Raised once the retry budget for transport failures is spent.
class AnnotatorFailure : public AnnotatorError {
 public:
  AnnotatorFailure(const std::string& what, int attempts)
      : AnnotatorError(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Calls the annotator, retrying TransportError with exponential backoff.
std::string annotate_with_retry(Annotator& annotator, const AnnotationRequest& request,
                                const RetryPolicy& policy);

// Returns the concatenated outputs of every rule whose keyword occurs
// (case-insensitively) in the request subject and whose purpose matches.
// Outputs are joined by newlines in rule order, duplicates dropped.
class KeywordAnnotator : public Annotator {
 public:
  struct Rule {
    std::string purpose;
    std::string keyword;
    std::string output;
  };

  KeywordAnnotator(std::string id, std::vector<Rule> rules,
                   std::map<std::string, std::string> fallback = {});

  // JSON: {"id": "...", "rules": [{purpose, keyword, output}], "fallback": {purpose: output}}
  static KeywordAnnotator from_file(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  std::string annotate(const AnnotationRequest& request) override;

 private:
  std::string id_;
  std::vector<Rule> rules_;
  std::map<std::string, std::string> fallback_;
};

// Answers from a fixed table of recorded outputs keyed by request key. A key
// that was never recorded is an AnnotatorError (never retried).
class ReplayAnnotator : public Annotator {
 public:
  ReplayAnnotator(std::string id, std::map<std::string, std::string> outputs);

  // JSON lines of {"key": ..., "output": ...}.
  static ReplayAnnotator from_file(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  std::string annotate(const AnnotationRequest& request) override;
  std::size_t size() const { return outputs_.size(); }

 private:
  std::string id_;
  std::map<std::string, std::string> outputs_;
};

// Adapts a callable; used for scripted judges and test doubles.
class CallbackAnnotator : public Annotator {
 public:
  using Fn = std::function<std::string(const AnnotationRequest&)>;
  CallbackAnnotator(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  std::string id() const override { return id_; }
  std::string annotate(const AnnotationRequest& request) override {
    std::lock_guard<std::mutex> lock(mu_);
    return fn_(request);
  }

 private:
  std::string id_;
  Fn fn_;
  std::mutex mu_;
};

// POSTs {"purpose", "key", "prompt", "subject"} as JSON to an HTTP(S)
// endpoint. The response body is either {"output": "..."} or plain text.
// Connection errors, timeouts, 429 and 5xx are TransportError; other non-2xx
// statuses are AnnotatorError.
class RemoteAnnotator : public Annotator {
 public:
  static constexpr const char* kUrlEnv = "ATLAS_ANNOTATOR_URL";
  static constexpr const char* kKeyEnv = "ATLAS_ANNOTATOR_KEY";

  RemoteAnnotator(std::string url, std::string api_key,
                  std::chrono::seconds timeout = std::chrono::seconds(60));

  // Reads the endpoint and credential from the environment; throws
  // ConfigError if the URL is unset.
  static RemoteAnnotator from_environment();

  std::string id() const override { return "remote:" + url_; }
  std::string annotate(const AnnotationRequest& request) override;

 private:
  std::string url_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace atlas
