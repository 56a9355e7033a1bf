#include "http_api.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

namespace smacs::service {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

bool owner_authorized(const TokenService& service, const httplib::Request& req) {
    std::string header = req.get_header_value("Authorization");
    constexpr std::string_view scheme = "Bearer ";
    if (header.rfind(scheme, 0) != 0) return false;
    return service.authorize_owner(std::string_view(header).substr(scheme.size()));
}

}  // namespace

HttpFrontEnd::HttpFrontEnd(TokenService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    server_->set_tcp_nodelay(true);
    install_routes();
}

HttpFrontEnd::~HttpFrontEnd() { stop(); }

void HttpFrontEnd::install_routes() {
    server_->Post("/v1/token", [this](const httplib::Request& req, httplib::Response& res) {
        TokenRequest parsed;
        try {
            parsed = parse_request_json(req.body);
        } catch (const Error& e) {
            reply_json(res, 400, {{"error", "ShapeMismatch"}, {"reason", e.what()}});
            return;
        }
        IssueResult out = service_.handle_token_request(parsed);
        if (!out.issued) {
            reply_json(res, out.http_status,
                       {{"error", out.http_status == 400 ? "ShapeMismatch" : "Denied"},
                        {"reason", out.reason}});
            return;
        }
        reply_json(res, 200,
                   {{"token", to_hex(encode_token(out.token))},
                    {"expiresAt", out.expires_at},
                    {"oneTime", out.one_time}});
    });

    server_->Put("/v1/rules", [this](const httplib::Request& req, httplib::Response& res) {
        if (!owner_authorized(service_, req)) {
            reply_json(res, 401, {{"error", "Unauthorized"}, {"reason", "owner secret"}});
            return;
        }
        try {
            std::uint64_t version = service_.put_rules(req.body);
            reply_json(res, 200, {{"version", version}});
        } catch (const Error& e) {
            reply_json(res, 400, {{"error", e.code()}, {"reason", e.what()}});
        }
    });

    server_->Patch("/v1/rules", [this](const httplib::Request& req, httplib::Response& res) {
        if (!owner_authorized(service_, req)) {
            reply_json(res, 401, {{"error", "Unauthorized"}, {"reason", "owner secret"}});
            return;
        }
        try {
            json body = json::parse(req.body);
            std::string op = body.at("op").get<std::string>();
            if (op != "add" && op != "remove")
                throw Error("ParseError", "op must be add or remove");
            std::uint64_t version = service_.patch_rules(
                op == "add" ? rules::UpdateOp::Add : rules::UpdateOp::Remove,
                body.at("scope").get<std::string>(), body.at("entry").get<std::string>());
            reply_json(res, 200, {{"version", version}});
        } catch (const json::exception& e) {
            reply_json(res, 400, {{"error", "ParseError"}, {"reason", e.what()}});
        } catch (const Error& e) {
            reply_json(res, 400, {{"error", e.code()}, {"reason", e.what()}});
        }
    });

    server_->Get("/v1/pubkey", [this](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, {{"pk", to_hex(service_.public_key())}});
    });

    server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, {{"status", "ok"}});
    });
}

int HttpFrontEnd::start(const std::string& host, int port) {
    host_ = host;
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else {
        if (!server_->bind_to_port(host, port))
            throw Error("BindFailure", host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void HttpFrontEnd::run(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port))
        throw Error("BindFailure", host + ":" + std::to_string(port));
}

void HttpFrontEnd::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string HttpFrontEnd::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace smacs::service
