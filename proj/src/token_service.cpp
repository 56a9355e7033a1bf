#include "token_service.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

namespace smacs::service {

using nlohmann::json;

namespace {

std::uint32_t system_clock_seconds() {
    return static_cast<std::uint32_t>(std::time(nullptr));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("PersistenceFailure", "cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("PersistenceFailure", "cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw Error("PersistenceFailure", "short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("PersistenceFailure",
                    "rename " + tmp + " -> " + path + ": " + std::strerror(errno));
}

std::string counter_hex(u128 v) {
    bytes b(16);
    for (int i = 15; i >= 0; --i) {
        b[static_cast<std::size_t>(i)] = static_cast<byte>(v & 0xff);
        v >>= 8;
    }
    return to_hex(b);
}

u128 counter_from_hex(const std::string& s) {
    bytes b = from_hex(s);
    if (b.size() != 16) throw Error("PersistenceFailure", "counter file is corrupt");
    u128 v = 0;
    for (byte x : b) v = (v << 8) | x;
    return v;
}

}  // namespace

TokenService::TokenService(ServiceConfig config, std::shared_ptr<sim::Simulator> private_sim)
    : config_(std::move(config)), signer_(config_.key), private_sim_(std::move(private_sim)) {
    if (!config_.clock) config_.clock = system_clock_seconds;

    rules::RuleSet initial;
    if (!config_.rules_path.empty()) {
        std::ifstream probe(config_.rules_path);
        if (probe.good()) initial = rules::load_rules(read_file(config_.rules_path));
    }
    rules_ = std::make_shared<const rules::RuleSet>(std::move(initial));

    if (!config_.counter_path.empty()) {
        std::ifstream probe(config_.counter_path);
        if (probe.good()) {
            std::string text = read_file(config_.counter_path);
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
                text.pop_back();
            counter_ = counter_from_hex(text);
        }
    }
}

std::shared_ptr<const rules::RuleSet> TokenService::rules_snapshot() const {
    std::lock_guard lock(rules_mutex_);
    return rules_;
}

bool TokenService::authorize_owner(std::string_view secret) const {
    return !config_.owner_secret.empty() && secret == config_.owner_secret;
}

std::uint64_t TokenService::put_rules(const std::string& document) {
    rules::RuleSet parsed = rules::load_rules(document);
    std::lock_guard lock(rules_mutex_);
    parsed.version = rules_->version + 1;
    auto next = std::make_shared<const rules::RuleSet>(std::move(parsed));
    persist_rules(*next);
    rules_ = next;
    return rules_->version;
}

std::uint64_t TokenService::patch_rules(rules::UpdateOp op, const std::string& scope_path,
                                        const std::string& entry) {
    std::lock_guard lock(rules_mutex_);
    auto next = std::make_shared<const rules::RuleSet>(
        rules::update_rules(*rules_, op, scope_path, entry));
    persist_rules(*next);
    rules_ = next;
    return rules_->version;
}

void TokenService::persist_rules(const rules::RuleSet& rs) {
    if (config_.rules_path.empty()) return;
    write_file_atomic(config_.rules_path, rules::dump_rules(rs));
}

u128 TokenService::counter() const {
    std::lock_guard lock(counter_mutex_);
    return counter_;
}

void TokenService::set_post_persist_hook(std::function<void(u128)> hook) {
    post_persist_hook_ = std::move(hook);
}

void TokenService::persist_counter_locked(u128 value) {
    if (config_.counter_path.empty()) return;
    std::string tmp = config_.counter_path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Error("PersistenceFailure", "cannot open " + tmp);
    std::string line = counter_hex(value) + "\n";
    bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
              std::fflush(f) == 0;
    ok = ok && std::rename(tmp.c_str(), config_.counter_path.c_str()) == 0;
    std::fclose(f);
    if (!ok) throw Error("PersistenceFailure", "counter write failed");
}

u128 TokenService::next_counter() {
    std::lock_guard lock(counter_mutex_);
    u128 next = counter_ + 1;
    persist_counter_locked(next);  // persisted before the token is released
    counter_ = next;
    if (post_persist_hook_) post_persist_hook_(next);
    return next;
}

std::map<std::string, std::uint64_t> TokenService::last_validator_latency_us() const {
    std::lock_guard lock(latency_mutex_);
    return validator_latency_us_;
}

std::optional<std::string> TokenService::run_validators(
    const TokenRequest& req, const ContractPolicy& policy,
    const std::vector<std::string>& names) {
    if (names.empty()) return std::nullopt;
    if (!private_sim_) return "validator.unavailable";

    validators::SimulatedCall call;
    call.contract = policy.sim_twin.value_or(req.contract);
    call.method = *req.method;
    call.args = req.args;
    call.caller = req.sender;
    call.value = 0;

    for (const std::string& name : names) {
        validators::ValidatorVerdict verdict;
        if (name == "nversion") {
            verdict = validators::nversion_uniform(call, policy.nversion_heads, *private_sim_);
        } else if (name == "ecf") {
            verdict = validators::ecf_check(call, *private_sim_);
        } else {
            return "validator." + name;  // unknown names never pass
        }
        {
            std::lock_guard lock(latency_mutex_);
            validator_latency_us_[name] = verdict.elapsed_us;
        }
        if (!verdict.pass) return "validator." + name;
    }
    return std::nullopt;
}

IssueResult TokenService::handle_token_request(const TokenRequest& req) {
    IssueResult res;
    auto record = [&](std::uint64_t version, i128 index) {
        std::lock_guard lock(log_mutex_);
        if (log_.size() >= 100000) log_.erase(log_.begin(), log_.begin() + 1000);
        log_.push_back({req, version, res.issued, res.reason, index});
    };

    try {
        check_request_shape(req);
    } catch (const Error& e) {
        res.http_status = 400;
        res.reason = e.what();
        record(0, kNoIndex);
        return res;
    }

    std::shared_ptr<const rules::RuleSet> rs = rules_snapshot();

    auto cit = config_.contracts.find(req.contract);
    if (cit == config_.contracts.end()) {
        res.reason = "registry.contract";
        record(rs->version, kNoIndex);
        return res;
    }
    const ContractPolicy& policy = cit->second;

    std::string method_name;
    const MethodPolicy* method_policy = nullptr;
    if (req.method) {
        for (const auto& [name, mp] : policy.methods) {
            if (MethodId::of(name) == *req.method) {
                method_name = name;
                method_policy = &mp;
                break;
            }
        }
        if (!method_policy) {
            res.reason = "registry.method";
            record(rs->version, kNoIndex);
            return res;
        }
    }

    rules::Decision decision = rules::evaluate(req, method_name, *rs);
    if (!decision.allow) {
        res.reason = decision.reason;
        record(rs->version, kNoIndex);
        return res;
    }

    if (req.type == TokenType::Argument) {
        if (std::optional<std::string> denial = run_validators(req, policy, rs->validators)) {
            res.reason = *denial;
            record(rs->version, kNoIndex);
            return res;
        }
    }

    bool one_time = req.type == TokenType::Super
                        ? policy.super_one_time
                        : (method_policy && method_policy->one_time);
    std::uint32_t expiry = policy.expiry_s ? policy.expiry_s : config_.default_expiry_s;

    Token token;
    token.type = req.type;
    token.expire = config_.clock() + expiry;
    try {
        token.index = one_time ? static_cast<i128>(next_counter()) : kNoIndex;
        bytes payload =
            signing_payload(token.type, token.expire, token.index, encode_req_payload(req));
        token.signature = signer_.sign(payload);
    } catch (const Error& e) {
        res.http_status = 500;
        res.reason = e.code();
        record(rs->version, kNoIndex);
        return res;
    }

    res.issued = true;
    res.http_status = 200;
    res.reason = "ok";
    res.token = token;
    res.expires_at = token.expire;
    res.one_time = one_time;
    record(rs->version, token.index);
    return res;
}

std::vector<IssueRecord> TokenService::issuance_log() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

TokenRequest parse_request_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error("ShapeMismatch", std::string("bad request json: ") + e.what());
    }
    try {
        TokenRequest req;
        req.type = token_type_from_name(doc.at("type").get<std::string>());
        req.contract = Address::from_hex(doc.at("cAddr").get<std::string>());
        req.sender = Address::from_hex(doc.at("sAddr").get<std::string>());
        if (doc.contains("methodId") && !doc.at("methodId").is_null())
            req.method = MethodId::from_hex(doc.at("methodId").get<std::string>());
        if (doc.contains("args")) {
            for (const json& a : doc.at("args"))
                req.args.push_back({a.at("name").get<std::string>(),
                                    a.at("value").get<std::string>()});
        }
        check_request_shape(req);
        return req;
    } catch (const json::exception& e) {
        throw Error("ShapeMismatch", std::string("bad request fields: ") + e.what());
    } catch (const Error& e) {
        throw Error("ShapeMismatch", e.what());
    }
}

std::string request_to_json(const TokenRequest& req) {
    json doc;
    doc["type"] = token_type_name(req.type);
    doc["cAddr"] = req.contract.hex();
    doc["sAddr"] = req.sender.hex();
    if (req.method) doc["methodId"] = req.method->hex();
    if (!req.args.empty()) {
        json args = json::array();
        for (const ArgPair& a : req.args) args.push_back({{"name", a.name}, {"value", a.value}});
        doc["args"] = args;
    }
    return doc.dump();
}

}  // namespace smacs::service
