#pragma once

#include <string>

namespace responsivity::detail {

// "http://host:port/prefix" -> {"http://host:port", "/prefix"}.
struct Endpoint {
    std::string origin;
    std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
    const auto scheme = url.find("://");
    const auto start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', start);
    if (slash == std::string::npos) return {url, ""};
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, slash), path};
}

} // namespace responsivity::detail
