#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "hwdock/http.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>

#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"

namespace hwdock {

std::string Url::origin() const
{
    return scheme + "://" + host + ":" + std::to_string(port);
}

Url parse_url(const std::string& url)
{
    Url  u;
    auto sep = url.find("://");
    if (sep == std::string::npos)
        throw Error(ErrorKind::Parse, "not an absolute URL: " + url);
    u.scheme = lowercase(url.substr(0, sep));
    if (u.scheme != "http" && u.scheme != "https")
        throw Error(ErrorKind::Parse, "unsupported URL scheme: " + url);
    auto rest        = url.substr(sep + 3);
    auto slash       = rest.find('/');
    std::string auth = rest.substr(0, slash);
    u.target         = slash == std::string::npos ? "/" : rest.substr(slash);
    if (auth.empty())
        throw Error(ErrorKind::Parse, "URL without host: " + url);
    auto colon = auth.rfind(':');
    if (colon != std::string::npos && auth.find(']') == std::string::npos) {
        u.host = auth.substr(0, colon);
        try {
            u.port = std::stoi(auth.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Parse, "bad port in URL: " + url);
        }
    } else {
        u.host = auth;
        u.port = u.scheme == "https" ? 443 : 80;
    }
    return u;
}

std::string url_encode(const std::string& s)
{
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string           out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 15]);
        }
    }
    return out;
}

HttpResponse HttplibTransport::get(const std::string& url, const HttpHeaders& headers)
{
    Url             u = parse_url(url);
    httplib::Client client(u.origin());
    client.set_follow_location(true);
    auto secs  = std::chrono::duration_cast<std::chrono::seconds>(mTimeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(mTimeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    for (const auto& [k, v] : headers)
        h.emplace(k, v);
    auto res = client.Get(u.target, h);
    if (!res)
        throw Error(ErrorKind::Network, "GET " + url + " failed: " + httplib::to_string(res.error()));

    HttpResponse out;
    out.status = res->status;
    out.body   = std::move(res->body);
    for (const auto& [k, v] : res->headers)
        out.headers[lowercase(k)] = v;
    return out;
}

} // namespace hwdock
