#include "guessarena/http.hpp"

#include <httplib.h>

namespace guessarena {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportFailure("not a URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                      std::chrono::milliseconds timeout) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        configure(client, timeout);
        httplib::Headers hs;
        for (const auto& [k, v] : headers) hs.emplace(k, v);
        auto res = client.Post(path, hs, body, "application/json");
        if (!res) throw TransportFailure(httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    HttpResponse get(const std::string& url, std::chrono::milliseconds timeout) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        configure(client, timeout);
        auto res = client.Get(path);
        if (!res) throw TransportFailure(httplib::to_string(res.error()));
        return {res->status, res->body};
    }

private:
    static void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        client.set_follow_location(true);
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

bool is_url(std::string_view s) noexcept { return s.starts_with("http://") || s.starts_with("https://"); }

}  // namespace guessarena
