#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "sqlsketch/gateway.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

void EndpointConfig::validate() const {
  if (timeout.count() <= 0) throw InvalidArgumentError("endpoint timeout must be positive");
  if (max_in_flight == 0) throw InvalidArgumentError("max_in_flight must be at least 1");
  if (retries < 0) throw InvalidArgumentError("retries must be non-negative");
}

// --- HTTP ---

HttpTransport::HttpTransport(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgumentError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

ojson HttpTransport::post(const std::string& route, const ojson& body) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (config_.auth_token && !config_.auth_token->empty())
    headers.emplace("Authorization", "Bearer " + *config_.auth_token);

  auto res = client.Post(path_prefix_ + route, headers, body.dump(), "application/json");
  if (!res) throw TransportError(route + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError(route + ": HTTP " + std::to_string(res->status));
  if (res->status != 200) throw ProtocolError(route + ": HTTP " + std::to_string(res->status) + " " + res->body);
  try {
    return ojson::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(route + ": response is not JSON: " + e.what());
  }
}

// --- stubs ---

StubScript::StubScript(ojson script) : script_(std::move(script)) {
  if (!script_.is_object()) throw InvalidArgumentError("stub script must be a JSON object");
  for (auto& [section, entries] : script_.items()) {
    if (!entries.is_object()) throw InvalidArgumentError("stub script section '" + section + "' must be an object");
    for (auto& [key, responses] : entries.items())
      if (!responses.is_array() || responses.empty())
        throw InvalidArgumentError("stub script entry '" + key + "' must be a non-empty list");
  }
}

std::shared_ptr<StubScript> StubScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot read stub script " + path.string());
  try {
    return std::make_shared<StubScript>(ojson::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError("stub script " + path.string() + ": " + e.what());
  }
}

std::optional<ojson> StubScript::next(const std::string& section, const std::string& fingerprint) {
  if (!script_.contains(section)) return std::nullopt;
  const auto& entries = script_[section];
  std::string key;
  if (entries.contains(fingerprint)) {
    key = fingerprint;
  } else {
    for (const auto& [k, _] : entries.items()) {
      if (k.size() > 1 && k[0] == '~' && fingerprint.find(k.substr(1)) != std::string::npos) {
        key = k;
        break;
      }
    }
    if (key.empty() && entries.contains("*")) key = "*";
  }
  if (key.empty()) return std::nullopt;
  const auto& responses = entries[key];
  std::lock_guard lock(mutex_);
  auto& used = consumed_[{section, key}];
  const auto idx = std::min(used, responses.size() - 1);
  ++used;
  return responses[idx];
}

StubTransport::StubTransport(std::shared_ptr<StubScript> script, std::chrono::milliseconds delay)
    : script_(std::move(script)), delay_(delay) {
  if (!script_) throw InvalidArgumentError("stub transport needs a script");
}

namespace {

ojson scripted(StubScript& script, const std::string& section, const std::string& fingerprint) {
  auto r = script.next(section, fingerprint);
  if (!r) throw ProtocolError("stub script has no '" + section + "' response for: " + fingerprint);
  if (r->is_object() && r->contains("error")) throw TransportError("stub: " + (*r)["error"].get<std::string>());
  return *r;
}

std::string string_field(const ojson& body, const char* name) {
  if (!body.contains(name) || !body[name].is_string()) throw ProtocolError(std::string("request lacks '") + name + "'");
  return body[name].get<std::string>();
}

std::vector<std::string> string_list(const ojson& body, const char* name) {
  if (!body.contains(name) || !body[name].is_array()) throw ProtocolError(std::string("request lacks '") + name + "'");
  return body[name].get<std::vector<std::string>>();
}

}  // namespace

ojson StubTransport::post(const std::string& route, const ojson& body) {
  ++requests_;
  const auto now = ++in_flight_;
  auto seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  if (route == "/generate") {
    auto hyps = scripted(*script_, "generate", string_field(body, "input"));
    return {{"hypotheses", hyps}};
  }
  if (route == "/score") {
    auto scores = ojson::array();
    for (const auto& seq : string_list(body, "sequences")) scores.push_back(scripted(*script_, "score", seq));
    return {{"scores", scores}};
  }
  if (route == "/encode") {
    auto vectors = ojson::array();
    for (const auto& t : string_list(body, "texts")) vectors.push_back(scripted(*script_, "encode", t));
    return {{"vectors", vectors}};
  }
  if (route == "/complete") return {{"text", scripted(*script_, "complete", string_field(body, "prompt"))}};
  if (body.contains("messages") && body["messages"].is_array() && !body["messages"].empty()) {
    const auto prompt = string_field(body["messages"].back(), "content");
    return {{"choices",
             ojson::array({{{"index", 0},
                            {"message", {{"role", "assistant"}, {"content", scripted(*script_, "complete", prompt)}}}}})}};
  }
  throw ProtocolError("stub transport does not serve route " + route);
}

// --- call log ---

std::string_view to_string(Role role) {
  switch (role) {
    case Role::SketchProvider:
      return "sketch_provider";
    case Role::Aligner:
      return "aligner";
    case Role::Completer:
      return "completer";
    case Role::Encoder:
      break;
  }
  return "encoder";
}

ojson to_json(const CallRecord& r, bool with_timing) {
  ojson out = {{"role", std::string(to_string(r.role))},
               {"route", r.route},
               {"attempt", r.attempt},
               {"request", r.request},
               {"response", r.response}};
  if (!r.error.empty()) out["error"] = r.error;
  if (with_timing) out["latency_ms"] = r.latency_ms;
  return out;
}

namespace {
thread_local ScopedCallCapture* current_capture = nullptr;
}

ScopedCallCapture::ScopedCallCapture() : parent_(current_capture) { current_capture = this; }
ScopedCallCapture::~ScopedCallCapture() { current_capture = parent_; }

// --- endpoint ---

Endpoint::Endpoint(Role role, std::shared_ptr<Transport> transport, EndpointConfig config)
    : role_(role),
      transport_(std::move(transport)),
      config_(std::move(config)),
      slots_(static_cast<std::ptrdiff_t>(config_.max_in_flight == 0 ? 1 : config_.max_in_flight)) {
  config_.validate();
  if (!transport_) throw InvalidArgumentError("endpoint needs a transport");
}

ojson Endpoint::call(const std::string& route, const ojson& body) {
  using Clock = std::chrono::steady_clock;
  auto record = [&](CallRecord rec) {
    for (auto* c = current_capture; c; c = c->parent_) c->records_.push_back(rec);
    if (log_enabled_) {
      std::lock_guard lock(log_mutex_);
      log_.push_back(std::move(rec));
    }
  };
  std::string last_error;
  auto wait = config_.backoff;
  for (int attempt = 1; attempt <= config_.retries + 1; ++attempt) {
    const auto t0 = Clock::now();
    auto ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
    slots_.acquire();
    try {
      auto response = transport_->post(route, body);
      slots_.release();
      record({role_, route, body, response, {}, attempt, ms()});
      return response;
    } catch (const TransportError& e) {
      slots_.release();
      last_error = e.what();
      record({role_, route, body, nullptr, last_error, attempt, ms()});
    } catch (const std::exception& e) {
      slots_.release();
      record({role_, route, body, nullptr, e.what(), attempt, ms()});
      throw;
    }
    if (attempt <= config_.retries && wait.count() > 0) {
      std::this_thread::sleep_for(wait);
      wait *= 2;
    }
  }
  const std::string msg = std::string(to_string(role_)) + " unavailable after " +
                          std::to_string(config_.retries + 1) + " attempts: " + last_error;
  switch (role_) {
    case Role::Completer:
      throw CompleterUnavailableError(msg);
    case Role::Encoder:
      throw EncoderUnavailableError(msg);
    default:
      throw ProviderUnavailableError(msg);
  }
}

std::vector<CallRecord> Endpoint::log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

// --- role clients ---

namespace {

const ojson& field(const ojson& response, const char* name, const char* route) {
  if (!response.is_object() || !response.contains(name))
    throw ProtocolError(std::string(route) + " response lacks '" + name + "'");
  return response[name];
}

std::shared_ptr<Endpoint> require(std::shared_ptr<Endpoint> e) {
  if (!e) throw InvalidArgumentError("client needs an endpoint");
  return e;
}

}  // namespace

SketchClient::SketchClient(std::shared_ptr<Endpoint> endpoint) : endpoint_(require(std::move(endpoint))) {}

std::vector<std::string> SketchClient::request_candidates(std::string_view task_input, std::size_t k) {
  if (k == 0) throw InvalidArgumentError("number of hypotheses must be at least 1");
  const auto resp = endpoint_->call("/generate", {{"input", task_input}, {"num_hypotheses", k}});
  const auto& hyps = field(resp, "hypotheses", "/generate");
  if (!hyps.is_array()) throw ProtocolError("/generate hypotheses is not a list");
  std::vector<std::string> out;
  for (const auto& h : hyps) {
    if (!h.is_string()) throw ProtocolError("/generate hypothesis is not text");
    if (out.size() < k) out.push_back(h.get<std::string>());
  }
  return out;
}

AlignerClient::AlignerClient(std::shared_ptr<Endpoint> endpoint) : endpoint_(require(std::move(endpoint))) {}

std::vector<double> AlignerClient::request_alignment_scores(std::span<const std::string> sequences) {
  if (sequences.empty()) throw InvalidArgumentError("no sequences to score");
  ojson seqs = ojson::array();
  for (const auto& s : sequences) seqs.push_back(s);
  const auto resp = endpoint_->call("/score", {{"sequences", seqs}});
  const auto& scores = field(resp, "scores", "/score");
  if (!scores.is_array() || scores.size() != sequences.size()) {
    throw ProtocolError("/score returned " + std::to_string(scores.is_array() ? scores.size() : 0) +
                        " scores for " + std::to_string(sequences.size()) + " sequences");
  }
  std::vector<double> out;
  for (const auto& s : scores) {
    if (!s.is_number()) throw ProtocolError("/score returned a non-numeric score");
    const double v = s.get<double>();
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ProtocolError("/score returned a score outside [0, 1]");
    out.push_back(v);
  }
  return out;
}

CompleterClient::CompleterClient(std::shared_ptr<Endpoint> endpoint, CompleterMode mode, std::string chat_model,
                                 std::string chat_route)
    : endpoint_(require(std::move(endpoint))),
      mode_(mode),
      chat_model_(std::move(chat_model)),
      chat_route_(std::move(chat_route)) {}

ojson CompleterClient::request_body(std::string_view prompt, const SamplingParams& p) const {
  if (mode_ == CompleterMode::Native) {
    return {{"prompt", prompt}, {"temperature", p.temperature}, {"top_p", p.top_p},
            {"frequency_penalty", p.frequency_penalty}};
  }
  ojson body;
  if (!chat_model_.empty()) body["model"] = chat_model_;
  body["messages"] = ojson::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = p.temperature;
  body["top_p"] = p.top_p;
  body["frequency_penalty"] = p.frequency_penalty;
  return body;
}

std::string CompleterClient::request_completion(std::string_view prompt, const SamplingParams& params) {
  if (text::trim(prompt).empty()) throw InvalidArgumentError("empty completion prompt");
  if (mode_ == CompleterMode::Native) {
    const auto resp = endpoint_->call("/complete", request_body(prompt, params));
    const auto& t = field(resp, "text", "/complete");
    if (!t.is_string()) throw ProtocolError("/complete text is not a string");
    return t.get<std::string>();
  }
  const auto resp = endpoint_->call(chat_route_, request_body(prompt, params));
  const auto& choices = field(resp, "choices", chat_route_.c_str());
  if (!choices.is_array() || choices.empty() || !choices[0].contains("message") ||
      !choices[0]["message"].contains("content") || !choices[0]["message"]["content"].is_string())
    throw ProtocolError(chat_route_ + " response lacks choices[0].message.content");
  return choices[0]["message"]["content"].get<std::string>();
}

EncoderClient::EncoderClient(std::shared_ptr<Endpoint> endpoint) : endpoint_(require(std::move(endpoint))) {}

std::vector<std::vector<double>> EncoderClient::encode(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  ojson arr = ojson::array();
  for (const auto& t : texts) arr.push_back(t);
  const auto resp = endpoint_->call("/encode", {{"texts", arr}});
  const auto& vectors = field(resp, "vectors", "/encode");
  if (!vectors.is_array() || vectors.size() != texts.size())
    throw ProtocolError("/encode returned the wrong number of vectors");
  std::vector<std::vector<double>> out;
  for (const auto& v : vectors) {
    if (!v.is_array() || v.empty()) throw ProtocolError("/encode vector is not a non-empty list");
    std::vector<double> row;
    for (const auto& x : v) {
      if (!x.is_number()) throw ProtocolError("/encode vector has a non-numeric entry");
      row.push_back(x.get<double>());
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace sqlsketch
