#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace brqual::net {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;
};

using Headers = std::vector<std::pair<std::string, std::string>>;
using QueryParams = std::vector<std::pair<std::string, std::string>>;

/// Thin synchronous client bound to one base URL ("https://host[:port][/prefix]").
/// Request paths are appended to the prefix. Connection failures raise
/// TransportError; HTTP status codes are returned to the caller.
class HttpClient {
public:
    explicit HttpClient(const std::string& base_url, std::chrono::seconds timeout = std::chrono::seconds{60});
    ~HttpClient();
    HttpClient(HttpClient&&) noexcept;
    HttpClient& operator=(HttpClient&&) noexcept;

    HttpResponse get(const std::string& path, const QueryParams& params = {}, const Headers& headers = {});
    HttpResponse post(const std::string& path, const std::string& body, const std::string& content_type,
                      const Headers& headers = {});

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "https://host:port/a/b" into {"https://host:port", "/a/b"}.
std::pair<std::string, std::string> split_base_url(const std::string& url);

}  // namespace brqual::net
