#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>
#include <unordered_map>

#include "guessarena/agents.hpp"

namespace guessarena::agents {

using nlohmann::json;

void AgentEndpoint::validate() const {
    if (base_url.empty()) throw Error(ErrorCode::InvalidArgument, "endpoint base_url is empty");
    if (model_id.empty()) throw Error(ErrorCode::InvalidArgument, "endpoint model_id is empty");
    if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
    if (max_output_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be >= 1");
    if (timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "timeout_ms must be >= 1");
    if (max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
    if (requests_per_minute < 0) throw Error(ErrorCode::InvalidArgument, "requests_per_minute must be >= 0");
}

AgentEndpoint endpoint_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedInput, "endpoint must be a JSON object");
    AgentEndpoint e;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "base_url") e.base_url = value.get<std::string>();
            else if (key == "model_id" || key == "model") e.model_id = value.get<std::string>();
            else if (key == "api_key_env") e.api_key_env = value.get<std::string>();
            else if (key == "temperature") e.temperature = value.get<double>();
            else if (key == "max_output_tokens") e.max_output_tokens = value.get<int>();
            else if (key == "timeout_ms") e.timeout_ms = value.get<int>();
            else if (key == "max_retries") e.max_retries = value.get<int>();
            else if (key == "requests_per_minute") e.requests_per_minute = value.get<double>();
            else throw Error(ErrorCode::MalformedInput, "unknown endpoint field: " + key);
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, "endpoint field '" + key + "': " + ex.what());
        }
    }
    e.validate();
    return e;
}

json endpoint_to_json(const AgentEndpoint& e) {
    return json{{"base_url", e.base_url},
                {"model_id", e.model_id},
                {"api_key_env", e.api_key_env},
                {"temperature", e.temperature},
                {"max_output_tokens", e.max_output_tokens},
                {"timeout_ms", e.timeout_ms},
                {"max_retries", e.max_retries},
                {"requests_per_minute", e.requests_per_minute}};
}

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

// ---- rate limiting ----

RateLimiter::RateLimiter(double requests_per_minute, Clock clock)
    : rate_per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      clock_(std::move(clock)),
      last_(clock_()) {}

std::chrono::milliseconds RateLimiter::reserve() {
    if (rate_per_ms_ <= 0) return std::chrono::milliseconds{0};
    std::lock_guard lock(mu_);
    auto now = clock_();
    double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
    tokens_ -= 1.0;
    if (tokens_ >= 0) return std::chrono::milliseconds{0};
    return std::chrono::milliseconds{static_cast<long long>(std::ceil(-tokens_ / rate_per_ms_))};
}

void RateLimiter::acquire() {
    auto wait = reserve();
    if (wait.count() > 0) std::this_thread::sleep_for(wait);
}

std::shared_ptr<RateLimiter> RateLimiter::for_endpoint(const AgentEndpoint& e) {
    static std::mutex mu;
    static std::unordered_map<std::string, std::shared_ptr<RateLimiter>> registry;
    std::lock_guard lock(mu);
    auto& slot = registry[e.base_url + "|" + e.model_id];
    if (!slot) slot = std::make_shared<RateLimiter>(e.requests_per_minute);
    return slot;
}

// ---- HTTP plumbing shared by chat and embeddings ----

namespace {

std::string join_url(const std::string& base, std::string_view suffix) {
    if (base.ends_with(suffix)) return base;
    std::string out = base;
    while (!out.empty() && out.back() == '/') out.pop_back();
    return out + std::string(suffix);
}

HttpHeaders auth_headers(const AgentEndpoint& e) {
    HttpHeaders headers{{"Content-Type", "application/json"}};
    if (e.api_key_env.empty()) return headers;
    const char* key = std::getenv(e.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw ProviderError(ProviderErrorKind::Auth, "environment variable " + e.api_key_env + " is not set");
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
    return headers;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

std::chrono::milliseconds backoff_delay(const RetryPolicy& p, int attempt) {
    static thread_local std::minstd_rand jitter_rng{std::random_device{}()};
    double nominal = static_cast<double>(p.base.count()) * std::pow(p.factor, attempt);
    std::uniform_real_distribution<double> dist(1.0 - p.jitter, 1.0 + p.jitter);
    return std::chrono::milliseconds{static_cast<long long>(nominal * dist(jitter_rng))};
}

// Posts with retry on 429/5xx/transport failures. Returns the body of a 2xx reply.
std::string post_with_retry(HttpTransport& transport, RateLimiter& limiter, const AgentEndpoint& e,
                            const RetryPolicy& retry, const std::string& url, const std::string& body) {
    HttpHeaders headers = auth_headers(e);  // fails fast before any network traffic
    const int attempts = e.max_retries + 1;
    bool last_rate_limited = false;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = backoff_delay(retry, attempt - 1);
            if (retry.sleep) retry.sleep(delay);
            else std::this_thread::sleep_for(delay);
        }
        limiter.acquire();
        HttpResponse res;
        try {
            res = transport.post(url, headers, body, std::chrono::milliseconds{e.timeout_ms});
        } catch (const TransportFailure& ex) {
            last_rate_limited = false;
            last_error = ex.what();
            continue;
        }
        if (res.status >= 200 && res.status < 300) return res.body;
        if (res.status == 401 || res.status == 403)
            throw ProviderError(ProviderErrorKind::Auth, "HTTP " + std::to_string(res.status) + " from " + url);
        if (!transient_status(res.status))
            throw ProviderError(ProviderErrorKind::Transport,
                                "HTTP " + std::to_string(res.status) + " from " + url + ": " + res.body.substr(0, 200));
        last_rate_limited = res.status == 429;
        last_error = "HTTP " + std::to_string(res.status);
    }
    throw ProviderError(last_rate_limited ? ProviderErrorKind::RateLimitedExhausted : ProviderErrorKind::Transport,
                        "giving up after " + std::to_string(attempts) + " attempts to " + url + " (last: " +
                            last_error + ")");
}

}  // namespace

HttpChatClient::HttpChatClient(AgentEndpoint endpoint, std::shared_ptr<HttpTransport> transport, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      retry_(std::move(retry)),
      limiter_(RateLimiter::for_endpoint(endpoint_)) {
    endpoint_.validate();
}

std::string HttpChatClient::chat(std::span<const Message> messages) {
    if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat needs at least one message");
    json body{{"model", endpoint_.model_id},
              {"messages", json::array()},
              {"temperature", endpoint_.temperature},
              {"max_tokens", endpoint_.max_output_tokens}};
    for (const auto& m : messages) body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});

    const std::string url = join_url(endpoint_.base_url, "/chat/completions");
    std::string reply = post_with_retry(*transport_, *limiter_, endpoint_, retry_, url, body.dump());
    try {
        auto j = json::parse(reply);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw ProviderError(ProviderErrorKind::MalformedReply, "content is not a string");
        return content.get<std::string>();
    } catch (const json::exception& ex) {
        throw ProviderError(ProviderErrorKind::MalformedReply, std::string("chat reply: ") + ex.what());
    }
}

HttpEmbedder::HttpEmbedder(AgentEndpoint endpoint, std::shared_ptr<HttpTransport> transport, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      retry_(std::move(retry)),
      limiter_(RateLimiter::for_endpoint(endpoint_)) {
    endpoint_.validate();
}

std::vector<std::vector<double>> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
    json body{{"model", endpoint_.model_id}, {"input", json::array()}};
    for (const auto& t : texts) body["input"].push_back(t);
    const std::string url = join_url(endpoint_.base_url, "/embeddings");
    std::string reply = post_with_retry(*transport_, *limiter_, endpoint_, retry_, url, body.dump());
    std::vector<std::vector<double>> out;
    try {
        auto j = json::parse(reply);
        if (j.contains("data")) {
            // {"data": [{"index": i, "embedding": [...]}, ...]}
            std::vector<std::pair<std::size_t, std::vector<double>>> rows;
            std::size_t pos = 0;
            for (const auto& item : j.at("data")) {
                std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : pos;
                rows.emplace_back(idx, item.at("embedding").get<std::vector<double>>());
                ++pos;
            }
            std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            for (auto& r : rows) out.push_back(std::move(r.second));
        } else {
            out = j.at("embeddings").get<std::vector<std::vector<double>>>();
        }
    } catch (const json::exception& ex) {
        throw ProviderError(ProviderErrorKind::MalformedReply, std::string("embedding reply: ") + ex.what());
    }
    if (out.size() != texts.size())
        throw ProviderError(ProviderErrorKind::MalformedReply,
                            "expected " + std::to_string(texts.size()) + " vectors, got " + std::to_string(out.size()));
    return out;
}

std::vector<std::vector<double>> HashingEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        // Work on code points so multi-byte characters count as one.
        std::string norm = "\x02" + normalize_card(text) + "\x03";
        std::vector<std::string> chars;
        for (std::size_t i = 0; i < norm.size();) {
            auto b = static_cast<unsigned char>(norm[i]);
            std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 1;
            len = std::min(len, norm.size() - i);
            chars.push_back(norm.substr(i, len));
            i += len;
        }
        std::vector<double> v(kDimension, 0.0);
        for (std::size_t i = 0; i + 3 <= chars.size(); ++i) {
            std::string gram = chars[i] + chars[i + 1] + chars[i + 2];
            v[fnv1a(gram) % kDimension] += 1.0;
        }
        double norm2 = 0;
        for (double x : v) norm2 += x * x;
        double len = std::sqrt(norm2);
        if (len > 0)
            for (double& x : v) x /= len;
        out.push_back(std::move(v));
    }
    return out;
}

std::string ReplayChatClient::chat(std::span<const Message> messages) {
    std::lock_guard lock(mu_);
    requests_.emplace_back(messages.begin(), messages.end());
    if (requests_.size() > replies_.size())
        throw ProviderError(ProviderErrorKind::Transport, "replay script exhausted");
    return replies_[requests_.size() - 1];
}

std::size_t ReplayChatClient::calls() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

std::string MatchingChatClient::chat(std::span<const Message> messages) {
    auto last_user = std::find_if(messages.rbegin(), messages.rend(), [](const Message& m) { return m.role == Role::User; });
    if (last_user != messages.rend()) {
        for (const auto& rule : rules_)
            if (last_user->content.find(rule.match) != std::string::npos) return rule.reply;
    }
    if (fallback_.empty()) throw ProviderError(ProviderErrorKind::Transport, "no replay rule matched the request");
    return fallback_;
}

}  // namespace guessarena::agents
