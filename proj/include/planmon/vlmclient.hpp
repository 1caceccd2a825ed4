#pragma once

// Remote VLM adapter: builds the exact query-round prompt (system text +
// semicolon-separated questions + optional image), sends it to a
// chat-completion-style HTTP endpoint, and parses semicolon-separated
// yes/no/skip answers.  The monitor can plug this in instead of the
// simulated oracle.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "planmon/monitor.hpp"
#include "planmon/util.hpp"

namespace planmon::vlmclient {

using perception::AnswerValue;

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed remote response; carries the raw text for diagnosis.
class MalformedResponse : public std::runtime_error {
public:
    MalformedResponse(const std::string& message, std::string raw)
        : std::runtime_error(message + "; raw response: \"" + raw + "\""),
          raw_(std::move(raw)) {}

    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ImageAttachment {
    std::vector<std::uint8_t> bytes;
    std::string media_type = "image/png"; // nominal 256x256 robot view
};

struct PromptPayload {
    std::string system_text;
    std::vector<std::string> questions;
    std::optional<ImageAttachment> image;
    // Smoke-test stand-in when no camera exists: a textual scene digest sent
    // in place of the image.  Clearly labelled non-faithful mode.
    std::optional<std::string> scene_digest;

    std::string user_text() const {
        std::string s;
        for (std::size_t i = 0; i < questions.size(); ++i) {
            if (i) s += ";";
            s += questions[i];
        }
        return s;
    }
};

struct ClientConfig {
    std::string endpoint;       // e.g. http://localhost:8080/v1/chat/completions
    std::string model;          // e.g. gpt-4-turbo
    std::string credential_env; // environment variable holding the API key
    int timeout_seconds = 30;
    int max_retries = 2;        // retries after the first attempt
};

// ---------------------------------------------------------------------------
// build_prompt / parse_answers

inline PromptPayload build_prompt(std::string system_text,
                                  std::vector<std::string> questions,
                                  std::optional<ImageAttachment> image = std::nullopt) {
    if (questions.empty()) throw PromptError("build_prompt requires at least one question");
    PromptPayload p;
    p.system_text = std::move(system_text);
    p.questions = std::move(questions);
    p.image = std::move(image);
    return p;
}

inline std::vector<AnswerValue> parse_answers(const std::string& text,
                                              std::size_t expected_count) {
    if (expected_count == 0) throw PromptError("expected_count must be >= 1");
    auto tokens = split(text, ';');
    std::vector<AnswerValue> out;
    out.reserve(tokens.size());
    for (const auto& raw : tokens) {
        std::string tok = trim(raw);
        for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (tok == "yes")
            out.push_back(AnswerValue::Yes);
        else if (tok == "no")
            out.push_back(AnswerValue::No);
        else if (tok == "skip")
            out.push_back(AnswerValue::Skip);
        else
            throw MalformedResponse("unrecognized answer token '" + tok + "'", text);
    }
    if (out.size() != expected_count)
        throw MalformedResponse("expected " + std::to_string(expected_count) +
                                    " answers, got " + std::to_string(out.size()),
                                text);
    return out;
}

inline std::string render_answers(const std::vector<AnswerValue>& answers) {
    std::string s;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (i) s += ";";
        s += perception::to_string(answers[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Transport

namespace detail {

inline std::string base64(const std::vector<std::uint8_t>& data) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t n = data[i] << 16;
        if (i + 1 < data.size()) n |= data[i + 1] << 8;
        if (i + 2 < data.size()) n |= data[i + 2];
        out.push_back(alphabet[(n >> 18) & 63]);
        out.push_back(alphabet[(n >> 12) & 63]);
        out.push_back(i + 1 < data.size() ? alphabet[(n >> 6) & 63] : '=');
        out.push_back(i + 2 < data.size() ? alphabet[n & 63] : '=');
    }
    return out;
}

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json request_body(const ClientConfig& cfg, const PromptPayload& p) {
    nlohmann::json user_content;
    if (p.image) {
        user_content = nlohmann::json::array();
        user_content.push_back({{"type", "text"}, {"text", p.user_text()}});
        user_content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:" + p.image->media_type + ";base64," + base64(p.image->bytes)}}}});
    } else if (p.scene_digest) {
        user_content = p.user_text() +
                       "\n[non-faithful smoke mode: textual scene digest instead of an "
                       "image]\n" +
                       *p.scene_digest;
    } else {
        user_content = p.user_text();
    }
    return nlohmann::json{
        {"model", cfg.model},
        {"messages",
         nlohmann::json::array({nlohmann::json{{"role", "system"}, {"content", p.system_text}},
                                nlohmann::json{{"role", "user"}, {"content", user_content}}})}};
}

} // namespace detail

// One request per query round, with retries and exponential backoff on
// transient failures (connection errors and 5xx).  Credentials come from the
// configured environment variable and are never logged or serialized.
inline std::vector<AnswerValue> query(const ClientConfig& cfg, const PromptPayload& payload) {
    auto url = detail::split_url(cfg.endpoint);
    std::string body = detail::request_body(cfg, payload).dump();

    httplib::Headers headers;
    if (!cfg.credential_env.empty()) {
        if (const char* secret = std::getenv(cfg.credential_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + secret);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
        httplib::Client cli(url.base);
        cli.set_connection_timeout(cfg.timeout_seconds, 0);
        cli.set_read_timeout(cfg.timeout_seconds, 0);
        auto res = cli.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status == 401 || res->status == 403)
            throw TransportError("authentication failed (" + std::to_string(res->status) +
                                 ") for " + cfg.endpoint);
        if (res->status != 200)
            throw TransportError("unexpected HTTP status " + std::to_string(res->status) +
                                 " from " + cfg.endpoint);

        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw MalformedResponse("response is not JSON", res->body);
        std::string content;
        try {
            content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw MalformedResponse("response JSON lacks choices[0].message.content",
                                    res->body);
        }
        return parse_answers(content, payload.questions.size());
    }
    throw TransportError("request failed after " + std::to_string(cfg.max_retries + 1) +
                         " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Monitor adapter

// Answers monitor query rounds via the remote endpoint.  Without a camera the
// adapter ships a textual scene digest (vision-class truth atoms) in place of
// the image.  Transport or format failures after retries degrade the whole
// batch to skip, which leaves the belief unchanged.
struct VlmAnswerSource final : monitor::AnswerSource {
    ClientConfig config;
    std::string system_text;
    const pddl::Grounding* grounding = nullptr;
    const perception::Perception* perception = nullptr;
    bool send_scene_digest = true;

    std::vector<AnswerValue> answer_round(const world::WorldState& truth,
                                          const std::vector<monitor::Query>& queries,
                                          Rng&) override {
        std::vector<std::string> questions;
        questions.reserve(queries.size());
        for (const auto& q : queries) questions.push_back(q.text);
        try {
            PromptPayload payload = build_prompt(system_text, std::move(questions));
            if (send_scene_digest && grounding) payload.scene_digest = digest(truth);
            // Remote answers address the question text; update_belief already
            // interprets them through the query's polarity flag.
            return query(config, payload);
        } catch (const std::exception&) {
            return std::vector<AnswerValue>(queries.size(), AnswerValue::Skip);
        }
    }

private:
    std::string digest(const world::WorldState& truth) const {
        std::string out;
        for (std::uint32_t a : truth.truth.atom_ids()) {
            if (perception &&
                perception->classify(grounding->atoms[a].predicate) !=
                    perception::VisibilityClass::PerceptibleVision)
                continue;
            out += grounding->atom_name(a) + "\n";
        }
        return out;
    }
};

} // namespace planmon::vlmclient
