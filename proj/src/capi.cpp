#include "smacs/smacs.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bench.hpp"
#include "client.hpp"
#include "http_api.hpp"
#include "scenario.hpp"
#include "token_service.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

smacs_status fail(smacs_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return static_cast<int>(fn());
    } catch (const smacs::Error& e) {
        return static_cast<int>(fail(SMACS_ERR, e.what()));
    } catch (const std::exception& e) {
        return static_cast<int>(fail(SMACS_ERR, e.what()));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw smacs::Error("Unreadable", "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

}  // namespace

struct smacs_ts {
    std::shared_ptr<smacs::sim::Simulator> private_sim;
    std::unique_ptr<smacs::service::TokenService> service;
    std::unique_ptr<smacs::service::HttpFrontEnd> front;
    std::string host = "127.0.0.1";
    int config_port = 8099;
};

struct smacs_sim {
    smacs::sim::Simulator sim;
};

extern "C" {

const char* smacs_version(void) { return "smacs 1.0.0"; }

const char* smacs_last_error(void) { return g_last_error.c_str(); }

void smacs_free(char* p) { std::free(p); }

int smacs_keygen(const char* seed, char** sk_hex, char** pk_hex) {
    if (!sk_hex || !pk_hex) return fail(SMACS_ERR_USAGE, "output pointers required");
    return guarded([&] {
        smacs::crypto::KeyPair kp =
            seed ? smacs::crypto::keypair_from_seed(seed) : smacs::crypto::keygen();
        *sk_hex = dup_string(kp.sk_hex());
        *pk_hex = dup_string(kp.pk_hex());
        return SMACS_OK;
    });
}

int smacs_selector(const char* method_name, char** selector_hex) {
    if (!method_name || !selector_hex)
        return fail(SMACS_ERR_USAGE, "method name and output required");
    return guarded([&] {
        *selector_hex = dup_string(smacs::MethodId::of(method_name).hex());
        return SMACS_OK;
    });
}

smacs_ts* smacs_ts_open(const char* config_path) {
    if (!config_path) {
        g_last_error = "config path required";
        return nullptr;
    }
    try {
        json doc = json::parse(read_file(config_path));
        auto out = std::make_unique<smacs_ts>();

        smacs::service::ServiceConfig cfg;
        const json& key = doc.at("key");
        if (key.contains("sk"))
            cfg.key = smacs::crypto::keypair_from_sk_hex(key.at("sk").get<std::string>());
        else
            cfg.key = smacs::crypto::keypair_from_seed(key.at("seed").get<std::string>());

        std::filesystem::path base = std::filesystem::path(config_path).parent_path();
        auto resolve = [&](const std::string& p) {
            if (p.empty() || p.front() == '/') return p;
            return (base / p).string();
        };
        cfg.rules_path = resolve(doc.value("rules_path", ""));
        cfg.counter_path = resolve(doc.value("counter_path", ""));
        cfg.owner_secret = doc.value("owner_secret", "");
        cfg.default_expiry_s = doc.value("default_expiry_s", 3600U);
        if (doc.contains("listen")) {
            out->host = doc.at("listen").value("host", "127.0.0.1");
            out->config_port = doc.at("listen").value("port", 8099);
        }

        out->private_sim = std::make_shared<smacs::sim::Simulator>();
        std::map<std::string, smacs::Address> private_labels;
        for (const json& entry : doc.value("private_contracts", json::array())) {
            std::map<std::string, std::string> init;
            if (entry.contains("init"))
                for (const auto& [k, v] : entry.at("init").items()) {
                    std::string value = v.get<std::string>();
                    if (!value.empty() && value[0] == '@')
                        value = private_labels.at(value.substr(1)).hex();
                    init[k] = value;
                }
            std::string label = entry.at("label").get<std::string>();
            smacs::Address addr = out->private_sim->register_contract(
                entry.at("fixture").get<std::string>(), std::move(init), std::nullopt,
                label);
            private_labels[label] = addr;
        }

        json contracts = doc.value("contracts", json::object());
        for (const auto& [caddr_hex, pol] : contracts.items()) {
            smacs::service::ContractPolicy policy;
            policy.expiry_s = pol.value("expiry_s", cfg.default_expiry_s);
            policy.super_one_time = pol.value("super_one_time", false);
            json methods = pol.value("methods", json::object());
            for (const auto& [mname, mpol] : methods.items())
                policy.methods[mname] =
                    smacs::service::MethodPolicy{mpol.value("one_time", false)};
            if (pol.contains("ecf_twin"))
                policy.sim_twin = private_labels.at(pol.at("ecf_twin").get<std::string>());
            if (pol.contains("heads"))
                for (const json& h : pol.at("heads"))
                    policy.nversion_heads.push_back(
                        private_labels.at(h.get<std::string>()));
            cfg.contracts[smacs::Address::from_hex(caddr_hex)] = std::move(policy);
        }

        out->service = std::make_unique<smacs::service::TokenService>(std::move(cfg),
                                                                      out->private_sim);
        if (doc.contains("rules")) out->service->put_rules(doc.at("rules").dump());
        out->front = std::make_unique<smacs::service::HttpFrontEnd>(*out->service);
        return out.release();
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return static_cast<smacs_ts*>(nullptr);
    }
}

int smacs_ts_start(smacs_ts* ts, int port, int* bound_port) {
    if (!ts) return fail(SMACS_ERR_USAGE, "null service");
    return guarded([&] {
        int p = ts->front->start(ts->host, port == 0 ? 0 : port);
        if (bound_port) *bound_port = p;
        return SMACS_OK;
    });
}

int smacs_ts_run(smacs_ts* ts, int port) {
    if (!ts) return fail(SMACS_ERR_USAGE, "null service");
    return guarded([&] {
        ts->front->run(ts->host, port == 0 ? ts->config_port : port);
        return SMACS_OK;
    });
}

void smacs_ts_stop(smacs_ts* ts) {
    if (ts && ts->front) ts->front->stop();
}

void smacs_ts_close(smacs_ts* ts) { delete ts; }

int smacs_token_request(const char* ts_url, const char* request_json,
                        char** response_json) {
    if (!ts_url || !request_json || !response_json)
        return fail(SMACS_ERR_USAGE, "url, request and output required");
    return guarded([&] {
        smacs::TokenRequest req = smacs::service::parse_request_json(request_json);
        smacs::client::TokenReply reply = smacs::client::request_token(ts_url, req);
        json out;
        if (reply.issued) {
            out["token"] = smacs::to_hex(smacs::encode_token(reply.token));
            out["expiresAt"] = reply.token.expire;
            out["oneTime"] = reply.one_time;
        } else {
            out["error"] = reply.status == 400 ? "ShapeMismatch" : "Denied";
            out["reason"] = reply.reason;
        }
        *response_json = dup_string(out.dump(2));
        if (reply.issued) return SMACS_OK;
        return fail(SMACS_ERR_DENIED, reply.reason);
    });
}

int smacs_rules_put(const char* ts_url, const char* secret, const char* rules_json,
                    char** response_json) {
    if (!ts_url || !secret || !rules_json || !response_json)
        return fail(SMACS_ERR_USAGE, "url, secret, rules and output required");
    return guarded([&] {
        smacs::client::RulesReply reply =
            smacs::client::put_rules(ts_url, secret, rules_json);
        json out = {{"ok", reply.ok}, {"status", reply.status}};
        if (reply.ok)
            out["version"] = reply.version;
        else
            out["reason"] = reply.reason;
        *response_json = dup_string(out.dump(2));
        return reply.ok ? SMACS_OK : fail(SMACS_ERR_DENIED, reply.reason);
    });
}

int smacs_rules_patch(const char* ts_url, const char* secret, const char* op,
                      const char* scope, const char* entry, char** response_json) {
    if (!ts_url || !secret || !op || !scope || !entry || !response_json)
        return fail(SMACS_ERR_USAGE, "url, secret, op, scope, entry and output required");
    return guarded([&] {
        smacs::client::RulesReply reply =
            smacs::client::patch_rules(ts_url, secret, op, scope, entry);
        json out = {{"ok", reply.ok}, {"status", reply.status}};
        if (reply.ok)
            out["version"] = reply.version;
        else
            out["reason"] = reply.reason;
        *response_json = dup_string(out.dump(2));
        return reply.ok ? SMACS_OK : fail(SMACS_ERR_DENIED, reply.reason);
    });
}

int smacs_pubkey(const char* ts_url, char** pk_hex) {
    if (!ts_url || !pk_hex) return fail(SMACS_ERR_USAGE, "url and output required");
    return guarded([&] {
        *pk_hex = dup_string(smacs::to_hex(smacs::client::fetch_service_pubkey(ts_url)));
        return SMACS_OK;
    });
}

smacs_sim* smacs_sim_new(const char* genesis_json) {
    if (!genesis_json) {
        g_last_error = "genesis document required";
        return nullptr;
    }
    try {
        json doc = json::parse(genesis_json);
        auto out = std::make_unique<smacs_sim>();
        if (doc.contains("clock")) out->sim.set_time(doc.at("clock").get<std::uint32_t>());

        std::map<std::string, std::string> labels;
        auto resolve = [&](std::string value) {
            if (!value.empty() && value[0] == '@') {
                auto it = labels.find(value.substr(1));
                if (it == labels.end())
                    throw smacs::Error("ParseError", "unknown label " + value);
                return it->second;
            }
            return value;
        };

        for (const json& acct : doc.value("accounts", json::array())) {
            smacs::bytes pk;
            if (acct.contains("pk"))
                pk = smacs::from_hex(acct.at("pk").get<std::string>());
            else
                pk = smacs::crypto::keypair_from_seed(acct.at("seed").get<std::string>()).pk;
            smacs::Address addr = out->sim.create_account(pk, acct.value("balance", 0ULL));
            if (acct.contains("name")) labels[acct.at("name").get<std::string>()] = addr.hex();
        }
        for (const json& entry : doc.value("contracts", json::array())) {
            std::map<std::string, std::string> init;
            if (entry.contains("init"))
                for (const auto& [k, v] : entry.at("init").items())
                    init[k] = resolve(v.get<std::string>());
            std::optional<smacs::sim::GuardSpec> guard;
            if (entry.contains("guard_pk"))
                guard = smacs::sim::GuardSpec{
                    smacs::from_hex(entry.at("guard_pk").get<std::string>()),
                    entry.value("bitmap_bits", std::size_t{64})};
            std::string label = entry.value("label", entry.at("fixture").get<std::string>());
            smacs::Address addr = out->sim.register_contract(
                entry.at("fixture").get<std::string>(), std::move(init), guard, label);
            labels[label] = addr.hex();
        }
        return out.release();
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return static_cast<smacs_sim*>(nullptr);
    }
}

smacs_sim* smacs_sim_load(const char* path) {
    if (!path) {
        g_last_error = "state path required";
        return nullptr;
    }
    try {
        auto out = std::make_unique<smacs_sim>();
        out->sim = smacs::sim::Simulator::from_json(read_file(path));
        return out.release();
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return static_cast<smacs_sim*>(nullptr);
    }
}

int smacs_sim_save(smacs_sim* sim, const char* path) {
    if (!sim || !path) return fail(SMACS_ERR_USAGE, "sim and path required");
    return guarded([&] {
        std::ofstream outf(path, std::ios::binary | std::ios::trunc);
        if (!outf) throw smacs::Error("Unwritable", std::string("cannot write ") + path);
        outf << sim->sim.dump_json();
        return SMACS_OK;
    });
}

int smacs_sim_dump(smacs_sim* sim, char** json_out) {
    if (!sim || !json_out) return fail(SMACS_ERR_USAGE, "sim and output required");
    return guarded([&] {
        *json_out = dup_string(sim->sim.dump_json());
        return SMACS_OK;
    });
}

void smacs_sim_close(smacs_sim* sim) { delete sim; }

int smacs_client_send(smacs_sim* sim, const char* ts_url, const char* plan_json,
                      char** receipt_json) {
    if (!sim || !ts_url || !plan_json || !receipt_json)
        return fail(SMACS_ERR_USAGE, "sim, url, plan and output required");
    return guarded([&] {
        json doc = json::parse(plan_json);
        smacs::client::SendPlan plan;
        plan.origin_key =
            smacs::crypto::keypair_from_sk_hex(doc.at("origin_sk").get<std::string>());
        smacs::bytes material;
        const char* tag = "account:";
        material.insert(material.end(), tag, tag + 8);
        material.insert(material.end(), plan.origin_key.pk.begin(),
                        plan.origin_key.pk.end());
        smacs::bytes digest = smacs::crypto::sha256(material);
        plan.origin = smacs::Address::from_bytes(std::span(digest).first(20));

        auto parse_args = [](const json& node) {
            std::vector<smacs::ArgPair> args;
            if (node.is_null()) return args;
            for (const json& a : node)
                args.push_back({a.at("name").get<std::string>(),
                                a.at("value").get<std::string>()});
            return args;
        };
        plan.target = smacs::Address::from_hex(doc.at("target").get<std::string>());
        plan.method = doc.at("method").get<std::string>();
        plan.args = parse_args(doc.value("args", json()));
        plan.value = doc.value("value", 0ULL);
        for (const json& hop : doc.value("chain", json::array())) {
            smacs::client::ChainTarget t;
            t.contract = smacs::Address::from_hex(hop.at("contract").get<std::string>());
            t.type = smacs::token_type_from_name(hop.value("type", "method"));
            t.method = hop.value("method", plan.method);
            t.args = hop.contains("args") ? parse_args(hop.at("args")) : plan.args;
            plan.chain.push_back(std::move(t));
        }

        smacs::client::SendOutcome out =
            smacs::client::request_and_send(ts_url, sim->sim, plan);

        json receipt;
        receipt["token_denied"] = out.token_denied;
        if (out.token_denied) {
            receipt["reason"] = out.denial_reason;
        } else {
            receipt["status"] = smacs::sim::receipt_status_name(out.receipt.status);
            receipt["reason"] = out.receipt.revert_reason;
            receipt["return"] = smacs::to_hex(out.receipt.return_value);
            json trace = json::array();
            for (const auto& frame : out.receipt.trace)
                trace.push_back({{"depth", frame.depth},
                                 {"contract", frame.contract.hex()},
                                 {"method", frame.method},
                                 {"msgSender", frame.msg_sender.hex()},
                                 {"display", frame.display}});
            receipt["trace"] = trace;
            receipt["cost"] = {{"sig_verifies", out.receipt.cost.sig_verifies},
                               {"storage_writes", out.receipt.cost.storage_writes},
                               {"bytes_parsed", out.receipt.cost.bytes_parsed},
                               {"guard_ops", out.receipt.cost.guard_ops}};
        }
        *receipt_json = dup_string(receipt.dump(2));
        if (out.token_denied) return fail(SMACS_ERR_DENIED, out.denial_reason);
        if (out.receipt.status != smacs::sim::Receipt::Status::Ok)
            return fail(SMACS_ERR_DENIED, smacs::sim::receipt_status_name(out.receipt.status) +
                                              (out.receipt.revert_reason.empty()
                                                   ? std::string()
                                                   : ": " + out.receipt.revert_reason));
        return SMACS_OK;
    });
}

int smacs_scenario_run(const char* path, char** report_json) {
    if (!path) return fail(SMACS_ERR_USAGE, "scenario path required");
    return guarded([&] {
        smacs::scenario::Report report = smacs::scenario::run_scenario_file(path);
        if (report_json) *report_json = dup_string(report.to_json());
        if (!report.parsed) return fail(SMACS_ERR_USAGE, "scenario does not parse");
        if (!report.passed)
            return fail(SMACS_ERR_DENIED,
                        std::to_string(report.failures.size()) + " assertion(s) failed");
        return SMACS_OK;
    });
}

int smacs_bench_run(const char* options_json, char** csv_out) {
    return guarded([&] {
        smacs::bench::Options opts;
        if (options_json && *options_json) {
            json doc = json::parse(options_json);
            if (doc.contains("batches"))
                opts.batch_sizes = doc.at("batches").get<std::vector<std::uint64_t>>();
            opts.concurrency = doc.value("concurrency", opts.concurrency);
            opts.csv_path = doc.value("csv_path", "");
            opts.data_path = doc.value("data_path", "");
            opts.measure_validators = doc.value("measure_validators", true);
        }
        smacs::bench::Report report = smacs::bench::run(opts);
        if (csv_out) *csv_out = dup_string(report.to_csv());
        return SMACS_OK;
    });
}

}  // extern "C"
