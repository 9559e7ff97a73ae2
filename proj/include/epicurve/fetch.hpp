#pragma once

// Optional network layer: a source that looks like an http(s) URL is
// downloaded and handed to the same parser used for local files. Define
// CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) for https.

#include <string>
#include <string_view>

#include <fmt/format.h>

// Before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include <Eigen/Dense>

#include "epicurve/ingestion.hpp"

#include <httplib.h>

namespace epicurve {

inline bool is_url(std::string_view source) {
    return source.starts_with("http://") || source.starts_with("https://");
}

inline std::string fetch_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(15);
    client.set_read_timeout(60);
    auto res = client.Get(path);
    if (!res)
        throw SourceUnreachable(fmt::format("{}: {}", url, httplib::to_string(res.error())));
    if (res->status != 200)
        throw SourceUnreachable(fmt::format("{}: HTTP status {}", url, res->status));
    return res->body;
}

/// Reads a dataset from a local path or an http(s) URL.
inline Dataset load_dataset(const std::string& source, Level level, const Schema& schema) {
    if (!is_url(source)) return read_dataset(source, level, schema);
    const auto body = fetch_url(source);
    if (csv::trim(body).empty()) throw EmptyFile(fmt::format("{} returned an empty body", source));
    return parse_dataset(body, level, schema);
}

}  // namespace epicurve
