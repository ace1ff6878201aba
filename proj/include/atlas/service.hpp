#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/inequality.hpp"
#include "atlas/json_io.hpp"

namespace httplib {
class Server;
}

namespace atlas::service {

struct Response {
    int status = 200;
    std::string body;
};

using Params = std::map<std::string, std::string, std::less<>>;

/// Read-only view of a persisted snapshot directory. All methods are const and
/// safe to call from many threads.
class Service {
public:
    static Service open(const std::filesystem::path& directory);

    /// GET /periods, /rankings, /pgi, /productspace, /country/{id}.
    Response get(std::string_view path, const Params& params) const;

    /// POST /whatif with `{country, period, add[], remove[], add_weights?}`.
    Response whatif(std::string_view body) const;

    Response handle(std::string_view method, std::string_view path, const Params& params,
                    std::string_view body) const;

    const std::string& digest() const { return digest_; }

private:
    struct Period {
        std::string id;
        io::json scores;
        io::json pgi;
        io::json space;
        io::json portfolios;
        inequality::ProductGiniTable table;
        Registry products;
    };

    const Period* find(std::string_view id) const;

    std::vector<Period> periods_;
    io::json manifest_;
    std::string digest_;
};

/// HTTP front end for a Service (JSON bodies, CORS enabled). The Service must
/// outlive the server.
class HttpServer {
public:
    explicit HttpServer(const Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to `port`, or to a free port when `port` is 0. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void listen();
    void stop();

private:
    std::unique_ptr<httplib::Server> server_;
};

/// bind + listen; blocks.
void serve(const Service& service, const std::string& host, int port);

}  // namespace atlas::service
