#include "client.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

namespace smacs::client {

using nlohmann::json;

namespace {

httplib::Client make_client(const std::string& url) {
    httplib::Client cli(url);
    cli.set_tcp_nodelay(true);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(30, 0);
    return cli;
}

}  // namespace

TokenReply request_token(const std::string& ts_url, const TokenRequest& req) {
    httplib::Client cli = make_client(ts_url);
    auto res = cli.Post("/v1/token", service::request_to_json(req), "application/json");
    TokenReply out;
    if (!res) {
        out.status = 0;
        out.reason = "token service unreachable at " + ts_url;
        return out;
    }
    out.status = res->status;
    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded()) {
        out.reason = "malformed response";
        return out;
    }
    if (res->status == 200) {
        out.issued = true;
        out.token = decode_token(from_hex(body.at("token").get<std::string>()));
        out.one_time = body.value("oneTime", false);
        out.reason = "ok";
    } else {
        out.reason = body.value("reason", "denied");
    }
    return out;
}

bytes fetch_service_pubkey(const std::string& ts_url) {
    httplib::Client cli = make_client(ts_url);
    auto res = cli.Get("/v1/pubkey");
    if (!res || res->status != 200)
        throw Error("Unreachable", "cannot fetch pubkey from " + ts_url);
    json body = json::parse(res->body);
    return from_hex(body.at("pk").get<std::string>());
}

RulesReply put_rules(const std::string& ts_url, const std::string& secret,
                     const std::string& document) {
    httplib::Client cli = make_client(ts_url);
    httplib::Headers headers = {{"Authorization", "Bearer " + secret}};
    auto res = cli.Put("/v1/rules", headers, document, "application/json");
    RulesReply out;
    if (!res) {
        out.reason = "token service unreachable";
        return out;
    }
    out.status = res->status;
    json body = json::parse(res->body, nullptr, false);
    if (res->status == 200) {
        out.ok = true;
        out.version = body.at("version").get<std::uint64_t>();
    } else if (!body.is_discarded()) {
        out.reason = body.value("reason", "rejected");
    }
    return out;
}

RulesReply patch_rules(const std::string& ts_url, const std::string& secret,
                       const std::string& op, const std::string& scope,
                       const std::string& entry) {
    httplib::Client cli = make_client(ts_url);
    httplib::Headers headers = {{"Authorization", "Bearer " + secret}};
    json body = {{"op", op}, {"scope", scope}, {"entry", entry}};
    auto res = cli.Patch("/v1/rules", headers, body.dump(), "application/json");
    RulesReply out;
    if (!res) {
        out.reason = "token service unreachable";
        return out;
    }
    out.status = res->status;
    json reply = json::parse(res->body, nullptr, false);
    if (res->status == 200) {
        out.ok = true;
        out.version = reply.at("version").get<std::uint64_t>();
    } else if (!reply.is_discarded()) {
        out.reason = reply.value("reason", "rejected");
    }
    return out;
}

SendOutcome request_and_send(const std::string& ts_url, sim::Simulator& sim,
                             const SendPlan& plan) {
    SendOutcome out;

    std::vector<std::pair<Address, Token>> entries;
    for (const ChainTarget& hop : plan.chain) {
        TokenRequest req;
        req.type = hop.type;
        req.contract = hop.contract;
        req.sender = plan.origin;
        if (hop.type != TokenType::Super) req.method = MethodId::of(hop.method);
        if (hop.type == TokenType::Argument) req.args = hop.args;
        TokenReply reply = request_token(ts_url, req);
        if (!reply.issued) {
            out.token_denied = true;
            out.denial_reason = reply.reason;
            return out;
        }
        entries.emplace_back(hop.contract, reply.token);
    }

    sim::Transaction tx = sim::make_signed_transaction(
        plan.origin_key, plan.origin, sim.nonce(plan.origin), plan.target, plan.method,
        plan.args, plan.value, encode_token_array(entries));
    out.receipt = sim.submit_transaction(tx);
    return out;
}

}  // namespace smacs::client
