#pragma once

#include <string>
#include <vector>

#include "chain_sim.hpp"
#include "token_service.hpp"

namespace smacs::client {

struct TokenReply {
    bool issued = false;
    int status = 0;
    std::string reason;
    Token token;
    bool one_time = false;
};

/// POST /v1/token against a running service.
TokenReply request_token(const std::string& ts_url, const TokenRequest& req);

bytes fetch_service_pubkey(const std::string& ts_url);

struct RulesReply {
    bool ok = false;
    int status = 0;
    std::uint64_t version = 0;
    std::string reason;
};
RulesReply put_rules(const std::string& ts_url, const std::string& secret,
                     const std::string& document);
RulesReply patch_rules(const std::string& ts_url, const std::string& secret,
                       const std::string& op, const std::string& scope,
                       const std::string& entry);

/// One hop of an intended call chain: the guarded contract, the token type
/// to request for it, and the method/args the guard will see at that hop.
struct ChainTarget {
    Address contract;
    TokenType type = TokenType::Method;
    std::string method;
    std::vector<ArgPair> args;
};

struct SendPlan {
    crypto::KeyPair origin_key;
    Address origin;
    Address target;          // top-level call target
    std::string method;
    std::vector<ArgPair> args;
    std::uint64_t value = 0;
    std::vector<ChainTarget> chain;  // contracts needing tokens, in order
};

struct SendOutcome {
    bool token_denied = false;
    std::string denial_reason;
    sim::Receipt receipt;
};

/// Fetches one token per guarded contract in the plan, assembles the token
/// array, signs the transaction with the origin key and submits it.
SendOutcome request_and_send(const std::string& ts_url, sim::Simulator& sim,
                             const SendPlan& plan);

}  // namespace smacs::client
