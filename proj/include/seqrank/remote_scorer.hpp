#pragma once

// Client for the inference service wire protocol.
//
//   POST <endpoint>/score
//     {"target": {"positive": "...", "negative": "..."},
//      "pairs":  [{"query": "...", "document": "..."}, ...]}
//   200 {"scores": [{"logit_pos": <number>, "logit_neg": <number>}, ...]}   index-aligned
//   4xx/5xx {"error": {"code": "multi_token_target" | "bad_request" | "internal", "message": "..."}}

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "seqrank/error.hpp"
#include "seqrank/reranking.hpp"

namespace seqrank {

struct RemoteOptions {
    std::string endpoint = "http://127.0.0.1:8080";
    std::size_t batch_size = 32;
    double timeout_seconds = 60.0;
    unsigned retries = 2;

    void validate() const
    {
        if (batch_size < 1) {
            throw ConfigError("remote batch_size must be >= 1");
        }
        if (!(timeout_seconds > 0.0)) {
            throw ConfigError("remote timeout must be > 0");
        }
        if (endpoint.rfind("http://", 0) != 0) {
            throw ConfigError("remote endpoint must start with http://, got '" + endpoint + "'");
        }
    }
};

namespace detail {

struct Endpoint {
    std::string host_port; // scheme://host[:port]
    std::string path;      // full request path, e.g. /score
};

inline Endpoint split_endpoint(const std::string& url)
{
    auto scheme = url.find("://");
    auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    Endpoint ep;
    if (slash == std::string::npos) {
        ep.host_port = url;
        ep.path = "/score";
    } else {
        ep.host_port = url.substr(0, slash);
        std::string prefix = url.substr(slash);
        while (!prefix.empty() && prefix.back() == '/') {
            prefix.pop_back();
        }
        ep.path = prefix + "/score";
    }
    return ep;
}

inline nlohmann::json score_request(std::span<const QueryPassage> pairs, const TargetWordConfig& target)
{
    nlohmann::json req;
    req["target"] = {{"positive", target.positive}, {"negative", target.negative}};
    auto& arr = req["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) {
        arr.push_back({{"query", p.query}, {"document", p.passage}});
    }
    return req;
}

/// Decodes a 200 response body; throws ScorerError on schema or length problems.
inline std::vector<LogitPair> parse_score_response(const std::string& body, std::size_t expected)
{
    nlohmann::json res;
    try {
        res = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScorerError(std::string("invalid JSON from scorer: ") + e.what());
    }
    if (!res.is_object() || !res.contains("scores") || !res["scores"].is_array()) {
        throw ScorerError("scorer response lacks a \"scores\" array");
    }
    const auto& scores = res["scores"];
    if (scores.size() != expected) {
        throw ScorerError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(expected) + " pairs (length mismatch)");
    }
    std::vector<LogitPair> out;
    out.reserve(expected);
    for (const auto& s : scores) {
        if (!s.is_object() || !s.contains("logit_pos") || !s.contains("logit_neg") || !s["logit_pos"].is_number() ||
            !s["logit_neg"].is_number()) {
            throw ScorerError("scorer returned a record without numeric logit_pos/logit_neg");
        }
        LogitPair lp{s["logit_pos"].get<double>(), s["logit_neg"].get<double>()};
        if (!std::isfinite(lp.pos) || !std::isfinite(lp.neg)) {
            throw ScorerError("scorer returned non-finite logits");
        }
        out.push_back(lp);
    }
    return out;
}

inline std::optional<RemoteError> parse_error_body(const std::string& body)
{
    try {
        auto j = nlohmann::json::parse(body);
        if (j.is_object() && j.contains("error") && j["error"].is_object()) {
            const auto& e = j["error"];
            return RemoteError(e.value("code", std::string("internal")), e.value("message", std::string()));
        }
    } catch (const nlohmann::json::exception&) {
    }
    return std::nullopt;
}

} // namespace detail

/// Scores `pairs` through the service in batches of at most `batch_size`, preserving order.
/// Transport failures and 5xx replies are retried up to `retries` times; protocol errors are not.
inline std::vector<LogitPair> remote_score_batch(const RemoteOptions& opt, std::span<const QueryPassage> pairs,
                                                 const TargetWordConfig& target)
{
    opt.validate();
    std::vector<LogitPair> out;
    out.reserve(pairs.size());
    if (pairs.empty()) {
        return out;
    }
    const auto ep = detail::split_endpoint(opt.endpoint);
    httplib::Client client(ep.host_port);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(opt.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    for (std::size_t begin = 0; begin < pairs.size(); begin += opt.batch_size) {
        auto chunk = pairs.subspan(begin, std::min(opt.batch_size, pairs.size() - begin));
        const std::string body = detail::score_request(chunk, target).dump();
        std::string last_failure;
        bool done = false;
        for (unsigned attempt = 0; attempt <= opt.retries && !done; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50u << std::min(attempt, 5u)));
            }
            auto res = client.Post(ep.path, body, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) {
                auto logits = detail::parse_score_response(res->body, chunk.size());
                out.insert(out.end(), logits.begin(), logits.end());
                done = true;
                break;
            }
            auto err = detail::parse_error_body(res->body);
            if (res->status >= 500 && (!err || err->code() == "internal")) {
                last_failure = err ? std::string(err->what()) : "HTTP " + std::to_string(res->status);
                continue;
            }
            if (err) {
                throw *err;
            }
            throw ScorerError("scorer replied HTTP " + std::to_string(res->status));
        }
        if (!done) {
            throw ScorerError("scorer at " + opt.endpoint + " failed after " + std::to_string(opt.retries + 1) +
                              " attempts: " + last_failure);
        }
    }
    return out;
}

class RemoteScorer final : public Scorer {
  public:
    explicit RemoteScorer(RemoteOptions opt) : m_opt(std::move(opt)) { m_opt.validate(); }

    std::vector<LogitPair> score_batch(std::span<const QueryPassage> pairs, const TargetWordConfig& target) override
    {
        return remote_score_batch(m_opt, pairs, target);
    }

    // Each call opens its own connection.
    bool concurrent_safe() const noexcept override { return true; }

    const RemoteOptions& options() const noexcept { return m_opt; }

  private:
    RemoteOptions m_opt;
};

} // namespace seqrank
