#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsketch/similarity.hpp"

namespace sqlsketch {

using ojson = nlohmann::ordered_json;

struct EndpointConfig {
  std::string base_url;
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_in_flight = 8;
  std::optional<std::string> auth_token;
  int retries = 2;
  std::chrono::milliseconds backoff{250};  // doubled after every failed attempt

  /// Throws InvalidArgumentError.
  void validate() const;
};

/// Moves one JSON request to a route and returns the JSON response.
/// Failures to reach the service throw TransportError.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ojson post(const std::string& route, const ojson& body) = 0;
};

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(EndpointConfig config);
  ojson post(const std::string& route, const ojson& body) override;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// Scripted responses keyed by request fingerprint.
///
/// File layout: one object per route section ("generate", "score",
/// "complete", "encode"), each mapping a key to a list of responses that
/// are handed out in order, the last one repeating. Keys are matched
/// exactly first, then `~substring` keys in file order, then `*`. A
/// response `{"error": "..."}` simulates a transport failure.
class StubScript {
 public:
  explicit StubScript(ojson script);
  static std::shared_ptr<StubScript> load(const std::filesystem::path& path);

  /// Next scripted response for `fingerprint` in `section`; nullopt if no
  /// key matches. Thread-safe; consumption is serialized.
  std::optional<ojson> next(const std::string& section, const std::string& fingerprint);

  bool has_section(const std::string& section) const { return script_.contains(section); }

 private:
  ojson script_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::size_t> consumed_;
};

/// Answers every wire route from a StubScript, in the same JSON shapes the
/// real services use. Also records how many requests were in flight at once.
class StubTransport final : public Transport {
 public:
  explicit StubTransport(std::shared_ptr<StubScript> script, std::chrono::milliseconds delay = {});
  ojson post(const std::string& route, const ojson& body) override;

  std::size_t max_observed_in_flight() const noexcept { return max_in_flight_.load(); }
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  std::shared_ptr<StubScript> script_;
  std::chrono::milliseconds delay_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  std::atomic<std::size_t> requests_{0};
};

enum class Role { SketchProvider, Aligner, Completer, Encoder };

std::string_view to_string(Role role);

struct CallRecord {
  Role role = Role::Completer;
  std::string route;
  ojson request;
  ojson response;  // null when the attempt failed
  std::string error;
  int attempt = 1;
  double latency_ms = 0.0;
};

ojson to_json(const CallRecord& record, bool with_timing = true);

/// Collects the calls made on this thread while it is alive. Nested scopes
/// each see the calls made inside them.
class ScopedCallCapture {
 public:
  ScopedCallCapture();
  ~ScopedCallCapture();
  ScopedCallCapture(const ScopedCallCapture&) = delete;
  ScopedCallCapture& operator=(const ScopedCallCapture&) = delete;

  const std::vector<CallRecord>& records() const noexcept { return records_; }

 private:
  friend class Endpoint;
  std::vector<CallRecord> records_;
  ScopedCallCapture* parent_;
};

/// One service: retries with backoff, a bound on concurrent requests, and
/// an optional shared call log. Safe to share between threads.
class Endpoint {
 public:
  Endpoint(Role role, std::shared_ptr<Transport> transport, EndpointConfig config);

  /// Throws the role's unavailability error once retries are spent, and
  /// ProtocolError (not retried) for malformed exchanges.
  ojson call(const std::string& route, const ojson& body);

  Role role() const noexcept { return role_; }
  const EndpointConfig& config() const noexcept { return config_; }

  void enable_log(bool on) { log_enabled_ = on; }
  std::vector<CallRecord> log() const;

 private:
  Role role_;
  std::shared_ptr<Transport> transport_;
  EndpointConfig config_;
  std::counting_semaphore<> slots_;
  std::atomic<bool> log_enabled_{false};
  mutable std::mutex log_mutex_;
  std::vector<CallRecord> log_;
};

/// POST /generate.
class SketchClient {
 public:
  explicit SketchClient(std::shared_ptr<Endpoint> endpoint);
  /// At most k hypotheses, best first.
  std::vector<std::string> request_candidates(std::string_view task_input, std::size_t k);

 private:
  std::shared_ptr<Endpoint> endpoint_;
};

/// POST /score.
class AlignerClient {
 public:
  explicit AlignerClient(std::shared_ptr<Endpoint> endpoint);
  std::vector<double> request_alignment_scores(std::span<const std::string> sequences);

 private:
  std::shared_ptr<Endpoint> endpoint_;
};

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
};

enum class CompleterMode { Native, Chat };

/// POST /complete, or a chat-style messages API in Chat mode.
class CompleterClient {
 public:
  CompleterClient(std::shared_ptr<Endpoint> endpoint, CompleterMode mode = CompleterMode::Native,
                  std::string chat_model = {}, std::string chat_route = "/v1/chat/completions");

  std::string request_completion(std::string_view prompt, const SamplingParams& params = {});

  /// The request body sent for a prompt (exposed for inspection).
  ojson request_body(std::string_view prompt, const SamplingParams& params) const;

  CompleterMode mode() const noexcept { return mode_; }

 private:
  std::shared_ptr<Endpoint> endpoint_;
  CompleterMode mode_;
  std::string chat_model_;
  std::string chat_route_;
};

/// POST /encode.
class EncoderClient final : public TextEncoder {
 public:
  explicit EncoderClient(std::shared_ptr<Endpoint> endpoint);
  std::vector<std::vector<double>> encode(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<Endpoint> endpoint_;
};

}  // namespace sqlsketch
