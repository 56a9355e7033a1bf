#pragma once

#include <memory>
#include <thread>

#include "token_service.hpp"

namespace httplib {
class Server;
}

namespace smacs::service {

/// HTTP/JSON front end:
///   POST  /v1/token   {type,cAddr,sAddr,methodId?,args?} -> token or denial
///   PUT   /v1/rules   full rule document (owner bearer auth)
///   PATCH /v1/rules   {op,scope,entry}   (owner bearer auth)
///   GET   /v1/pubkey, GET /v1/health
class HttpFrontEnd {
public:
    explicit HttpFrontEnd(TokenService& service);
    ~HttpFrontEnd();

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// the bound port is returned and kept in port().
    int start(const std::string& host, int port);
    void stop();
    int port() const { return port_; }
    std::string base_url() const;

    /// Serve on the calling thread until stopped (CLI `ts serve`).
    void run(const std::string& host, int port);

private:
    void install_routes();

    TokenService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_ = "127.0.0.1";
    int port_ = 0;
};

}  // namespace smacs::service
