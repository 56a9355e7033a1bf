#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "rules.hpp"
#include "validators.hpp"

namespace smacs::service {

struct MethodPolicy {
    bool one_time = false;
};

/// Owner-side knowledge of one guarded contract: its method table (names
/// resolve rule scopes and selectors), token lifetimes, one-time policy, and
/// the contract's stand-ins on the service's private simulator.
struct ContractPolicy {
    std::map<std::string, MethodPolicy> methods;  // keyed by method name
    std::uint32_t expiry_s = 3600;
    bool super_one_time = false;
    std::optional<Address> sim_twin;       // behavioral twin targeted by ecf runs
    std::vector<Address> nversion_heads;   // head set for uniformity runs
};

struct ServiceConfig {
    crypto::KeyPair key;
    std::string rules_path;    // optional; rewritten atomically on update
    std::string counter_path;  // optional; counter persisted before release
    std::string owner_secret;
    std::string listen_host = "127.0.0.1";
    int listen_port = 8099;
    std::uint32_t default_expiry_s = 3600;
    std::map<Address, ContractPolicy> contracts;
    std::function<std::uint32_t()> clock;  // defaults to system time
};

struct IssueResult {
    bool issued = false;
    int http_status = 403;
    std::string reason;  // scope or validator path on denial
    Token token;
    std::uint32_t expires_at = 0;
    bool one_time = false;
};

struct IssueRecord {
    TokenRequest request;
    std::uint64_t rules_version = 0;
    bool issued = false;
    std::string reason;
    i128 index = kNoIndex;
};

/// The off-chain TS: shape check, rule evaluation, validator runs, one-time
/// counter, signing. Thread-safe: rule snapshots swap atomically and the
/// counter is persisted under a lock before any token leaves.
class TokenService {
public:
    TokenService(ServiceConfig config, std::shared_ptr<sim::Simulator> private_sim = nullptr);

    IssueResult handle_token_request(const TokenRequest& req);

    std::uint64_t put_rules(const std::string& document);
    std::uint64_t patch_rules(rules::UpdateOp op, const std::string& scope_path,
                              const std::string& entry);
    std::shared_ptr<const rules::RuleSet> rules_snapshot() const;

    const bytes& public_key() const { return signer_.public_key(); }
    u128 counter() const;
    const ServiceConfig& config() const { return config_; }
    bool authorize_owner(std::string_view secret) const;

    std::uint32_t now() const { return config_.clock(); }

    /// Issuance journal for offline re-checks; bounded, newest last.
    std::vector<IssueRecord> issuance_log() const;

    /// Test hook that fires after the counter is persisted and before the
    /// token is released.
    void set_post_persist_hook(std::function<void(u128)> hook);

    /// Validator latencies observed on the most recent issuance, by name.
    std::map<std::string, std::uint64_t> last_validator_latency_us() const;

private:
    u128 next_counter();
    void persist_counter_locked(u128 value);
    void persist_rules(const rules::RuleSet& rs);
    std::optional<std::string> run_validators(const TokenRequest& req,
                                              const ContractPolicy& policy,
                                              const std::vector<std::string>& names);

    ServiceConfig config_;
    crypto::Signer signer_;
    std::shared_ptr<sim::Simulator> private_sim_;

    mutable std::mutex rules_mutex_;
    std::shared_ptr<const rules::RuleSet> rules_;

    mutable std::mutex counter_mutex_;
    u128 counter_ = 0;
    std::function<void(u128)> post_persist_hook_;

    mutable std::mutex log_mutex_;
    std::vector<IssueRecord> log_;

    mutable std::mutex latency_mutex_;
    std::map<std::string, std::uint64_t> validator_latency_us_;
};

/// JSON <-> TokenRequest for the wire API:
/// {"type","cAddr","sAddr","methodId"?,"args"?}. Throws ShapeMismatch.
TokenRequest parse_request_json(const std::string& text);
std::string request_to_json(const TokenRequest& req);

}  // namespace smacs::service
