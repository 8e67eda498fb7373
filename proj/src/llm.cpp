#include "prolink/llm.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <thread>

#include "prolink/errors.hpp"

namespace prolink {

MockBackend::MockBackend(std::map<std::string, SideTypes> oracle,
                         std::vector<std::string> relation_names)
    : oracle_(std::move(oracle)), relation_names_(std::move(relation_names)) {}

namespace {

std::string json_list(const std::set<std::string>& items) {
  return nlohmann::json(std::vector<std::string>(items.begin(), items.end())).dump();
}

}  // namespace

std::string MockBackend::complete(const std::string& instruction) {
  static const std::regex key_re("\"rel([0-9]+)\"\\s*:");
  auto dict = instruction.find("rel_dict = {");
  if (dict == std::string::npos) throw BackendError("mock backend: instruction has no rel_dict");

  std::string body;
  std::set<RelationId> seen;
  for (std::sregex_iterator it(instruction.begin() + static_cast<std::ptrdiff_t>(dict),
                               instruction.end(), key_re),
       end;
       it != end; ++it) {
    const auto id = static_cast<RelationId>(std::stoul((*it)[1].str()));
    if (!seen.insert(id).second) continue;
    SideTypes st;
    if (id < relation_names_.size()) {
      auto o = oracle_.find(relation_names_[id]);
      if (o != oracle_.end()) st = o->second;
    }
    if (!body.empty()) body += ",\n";
    body += "rel" + std::to_string(id) + ": {\"head\": " + json_list(st.head) +
            ", \"tail\": " + json_list(st.tail) + "}";
  }
  return "Here are the results: \n{\n" + body + "\n}";
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ContractError("HTTP backend needs a base URL");
  if (config_.max_retries < 0) throw ContractError("max_retries must be >= 0");
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpBackend::complete(const std::string& instruction) {
  nlohmann::json body = {
      {"model", config_.model},
      {"temperature", 0},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", instruction}}})},
  };
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("LLM request failed ({}), retry {}/{} in {} ms", last_error, attempt,
                   config_.max_retries, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    {
      std::lock_guard lock(mu_);
      ++attempts_;
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status), res->status);
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat-completions response: ") + e.what(),
                         res->status);
    }
  }
  throw BackendError("LLM endpoint unreachable after " + std::to_string(config_.max_retries) +
                     " retries: " + last_error);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

CachedBackend::CachedBackend(LlmBackend& inner, std::string path)
    : inner_(inner), path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  try {
    auto j = nlohmann::json::parse(in);
    entries_ = j.get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("LLM cache " + path_ + " is not a JSON object of strings: " + e.what());
  }
}

std::string CachedBackend::complete(const std::string& instruction) {
  const std::string key = sha256_hex(instruction);
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  std::string response = inner_.complete(instruction);
  std::lock_guard lock(mu_);
  ++misses_;
  entries_[key] = response;
  flush();
  return response;
}

void CachedBackend::flush() const {
  const std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write LLM cache " + tmp);
    out << nlohmann::json(entries_).dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path_);
}

std::vector<std::string> complete_all(LlmBackend& backend, const std::vector<std::string>& prompts,
                                      std::size_t concurrency) {
  std::vector<std::string> out(prompts.size());
  if (prompts.empty()) return out;
  const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, prompts.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(prompts.size());
  auto work = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        out[i] = backend.complete(prompts[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace prolink
