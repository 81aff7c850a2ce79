#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "eventcast/digest.hpp"
#include "eventcast/io.hpp"
#include "eventcast/reasoner.hpp"
#include "eventcast/summary_parser.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <optional>
#include <semaphore>
#include <thread>

namespace eventcast {

/// Settings for a chat-completion style endpoint.
struct RemoteConfig {
    std::string url; // e.g. https://host/v1/chat/completions
    std::string api_key;
    std::string model;
    double timeout_seconds = 60.0;
    int max_retries = 3; // extra attempts after the first
    int concurrency = 4; // max in-flight requests per client
    std::optional<double> temperature; // forwarded as-is when set
    int backoff_initial_ms = 500;
    int backoff_max_ms = 8000;
    std::optional<std::filesystem::path> cache_dir;

    /// Reads EVENTCAST_LLM_{URL,API_KEY,MODEL,TIMEOUT,MAX_RETRIES,CONCURRENCY,TEMPERATURE,CACHE_DIR}.
    static RemoteConfig from_env() {
        RemoteConfig c;
        auto env = [](const char* name) -> std::optional<std::string> {
            const char* v = std::getenv(name);
            if (!v || !*v) return std::nullopt;
            return std::string(v);
        };
        if (auto v = env("EVENTCAST_LLM_URL")) c.url = *v;
        if (auto v = env("EVENTCAST_LLM_API_KEY")) c.api_key = *v;
        if (auto v = env("EVENTCAST_LLM_MODEL")) c.model = *v;
        if (auto v = env("EVENTCAST_LLM_TIMEOUT")) c.timeout_seconds = std::stod(*v);
        if (auto v = env("EVENTCAST_LLM_MAX_RETRIES")) c.max_retries = std::stoi(*v);
        if (auto v = env("EVENTCAST_LLM_CONCURRENCY")) c.concurrency = std::stoi(*v);
        if (auto v = env("EVENTCAST_LLM_TEMPERATURE")) c.temperature = std::stod(*v);
        if (auto v = env("EVENTCAST_LLM_CACHE_DIR")) c.cache_dir = *v;
        return c;
    }
};

/// Identifies the (country, date) a prompt was built for, for the audit trail.
struct AuditTag {
    AuditLog* log = nullptr;
    std::string country;
    Date date;
};

class RemoteReasoner {
public:
    using Logger = std::function<void(const std::string&)>;

    explicit RemoteReasoner(RemoteConfig cfg, Logger logger = {})
        : cfg_(std::move(cfg)), logger_(std::move(logger)), slots_(std::max(1, cfg_.concurrency)) {
        if (cfg_.url.empty()) throw DataError("remote reasoner needs an endpoint URL");
        auto scheme = cfg_.url.find("://");
        if (scheme == std::string::npos) throw DataError("endpoint URL needs a scheme: " + cfg_.url);
        auto slash = cfg_.url.find('/', scheme + 3);
        base_ = cfg_.url.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : cfg_.url.substr(slash);
    }

    /// Sends the prompt as a single user message and returns the first
    /// choice's content verbatim. Throws MissingResultBlock (with the raw
    /// text attached) when the reply has no result block.
    RawReasoning reason(const PromptText& prompt, const AuditTag& tag = {}) {
        const std::string digest = sha256_hex(prompt.rendered);
        std::optional<std::string> text = cache_get(digest);
        if (!text) {
            text = send(prompt.rendered);
            cache_put(digest, *text);
        }
        if (tag.log) tag.log->append(tag.country, tag.date, ReasoningSource::Remote, digest, *text);
        if (!find_result_block(*text)) throw MissingResultBlock(*text);
        return {std::move(*text), ReasoningSource::Remote};
    }

    /// Attempts used by the most recent uncached request.
    int last_attempts() const { return last_attempts_.load(); }

    const RemoteConfig& config() const { return cfg_; }

    std::string request_body(const std::string& prompt) const {
        nlohmann::json body = {{"model", cfg_.model},
                               {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
        if (cfg_.temperature) body["temperature"] = *cfg_.temperature;
        return body.dump();
    }

private:
    std::string send(const std::string& prompt) {
        struct SlotGuard {
            std::counting_semaphore<1024>& s;
            explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
            ~SlotGuard() { s.release(); }
        } guard(slots_);

        const std::string body = request_body(prompt);
        const int attempts_allowed = 1 + std::max(0, cfg_.max_retries);
        int delay_ms = cfg_.backoff_initial_ms;
        bool timed_out = false;
        int last_status = 0;
        std::string last_reason;
        for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
            last_attempts_ = attempt;
            httplib::Client cli(base_);
            auto secs = static_cast<time_t>(cfg_.timeout_seconds);
            auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
            cli.set_connection_timeout(secs, usecs);
            cli.set_read_timeout(secs, usecs);
            cli.set_write_timeout(secs, usecs);
            httplib::Headers headers;
            if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
            auto res = cli.Post(path_, headers, body, "application/json");

            bool retryable = true;
            if (!res) {
                auto err = res.error();
                timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
                last_status = 0;
                last_reason = httplib::to_string(err);
            } else if (res->status == 200) {
                return parse_reply(res->body);
            } else {
                timed_out = false;
                last_status = res->status;
                last_reason = res->body.substr(0, 200);
                retryable = res->status == 429 || res->status >= 500;
            }
            if (!retryable || attempt == attempts_allowed) break;
            log("attempt " + std::to_string(attempt) + "/" + std::to_string(attempts_allowed) +
                " failed (" + (last_status ? "status " + std::to_string(last_status) : last_reason) +
                "), retrying in " + std::to_string(delay_ms) + " ms");
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms = std::min(cfg_.backoff_max_ms, delay_ms * 2);
        }
        log("giving up after " + std::to_string(last_attempts_.load()) + " attempts");
        if (timed_out) throw TimeoutError(last_attempts_.load());
        throw TransportError(last_status, last_reason, last_attempts_.load());
    }

    static std::string parse_reply(const std::string& body) {
        try {
            auto j = nlohmann::json::parse(body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(200, std::string("malformed completion response: ") + e.what(), 1);
        }
    }

    std::optional<std::string> cache_get(const std::string& digest) const {
        if (!cfg_.cache_dir) return std::nullopt;
        auto p = *cfg_.cache_dir / (sha256_hex(cfg_.model + "\n" + digest) + ".txt");
        if (!std::filesystem::exists(p)) return std::nullopt;
        return io::read_file(p);
    }

    void cache_put(const std::string& digest, const std::string& text) const {
        if (!cfg_.cache_dir) return;
        io::write_file_atomic(*cfg_.cache_dir / (sha256_hex(cfg_.model + "\n" + digest) + ".txt"), text);
    }

    void log(const std::string& msg) const {
        if (logger_) logger_(msg);
    }

    RemoteConfig cfg_;
    Logger logger_;
    std::counting_semaphore<1024> slots_;
    std::string base_;
    std::string path_;
    std::atomic<int> last_attempts_{0};
};

} // namespace eventcast
