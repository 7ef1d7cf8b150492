#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hwdock {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    /// Header names lowercased.
    std::map<std::string, std::string> headers;
    std::string                        body;

    std::string header(const std::string& lowerName) const
    {
        auto it = headers.find(lowerName);
        return it == headers.end() ? std::string{} : it->second;
    }
};

struct Url {
    std::string scheme;
    std::string host;
    int         port = 0;
    std::string target; // path + query

    std::string origin() const;
};

/// Throws Error(Parse) for anything but http(s)://host[:port][/path].
Url parse_url(const std::string& url);

std::string url_encode(const std::string& s);

/// GET-only transport; throws Error(Network) when no response arrives.
class HttpTransport {
public:
    virtual ~HttpTransport()                                                     = default;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::seconds(30))
        : mTimeout(timeout)
    {
    }

    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;

private:
    std::chrono::milliseconds mTimeout;
};

} // namespace hwdock
