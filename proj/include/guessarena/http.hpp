#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace guessarena {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Raised by transports when no HTTP response was obtained (DNS, connect, timeout).
class TransportFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                              std::chrono::milliseconds timeout) = 0;
    virtual HttpResponse get(const std::string& url, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport; https needs the OpenSSL build.
std::shared_ptr<HttpTransport> make_default_transport();

bool is_url(std::string_view s) noexcept;

}  // namespace guessarena
