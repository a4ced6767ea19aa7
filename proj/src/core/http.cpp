#include <httplib.h>

#include "brqual/core/http.hpp"

#include "brqual/core/error.hpp"

namespace brqual::net {

std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

struct HttpClient::Impl {
    httplib::Client client;
    std::string prefix;

    Impl(const std::string& origin, std::string p) : client(origin), prefix(std::move(p)) {}
};

namespace {

httplib::Headers to_headers(const Headers& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
}

HttpResponse convert(const httplib::Result& result, const std::string& what) {
    if (!result) {
        throw TransportError(what + ": " + httplib::to_string(result.error()));
    }
    HttpResponse response;
    response.status = result->status;
    response.body = result->body;
    for (const auto& [k, v] : result->headers) response.headers[k] = v;
    return response;
}

}  // namespace

HttpClient::HttpClient(const std::string& base_url, std::chrono::seconds timeout) {
    auto [origin, prefix] = split_base_url(base_url);
    impl_ = std::make_unique<Impl>(origin, prefix);
    impl_->client.set_connection_timeout(timeout);
    impl_->client.set_read_timeout(timeout);
    impl_->client.set_write_timeout(timeout);
}

HttpClient::~HttpClient() = default;
HttpClient::HttpClient(HttpClient&&) noexcept = default;
HttpClient& HttpClient::operator=(HttpClient&&) noexcept = default;

HttpResponse HttpClient::get(const std::string& path, const QueryParams& params, const Headers& headers) {
    httplib::Params p;
    for (const auto& [k, v] : params) p.emplace(k, v);
    auto full = impl_->prefix + path;
    return convert(impl_->client.Get(full, p, to_headers(headers)), "GET " + full);
}

HttpResponse HttpClient::post(const std::string& path, const std::string& body, const std::string& content_type,
                              const Headers& headers) {
    auto full = impl_->prefix + path;
    return convert(impl_->client.Post(full, to_headers(headers), body, content_type), "POST " + full);
}

}  // namespace brqual::net
