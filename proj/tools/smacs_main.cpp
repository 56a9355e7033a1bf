// smacs CLI: owner administration, client token requests and transaction
// sending, simulator state files, scenarios and the issuance benchmark.
// Links the C API only.
#include <smacs/smacs.h>

#include <CLI11.hpp>

#include <cstdio>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int map_status(int status) {
    switch (status) {
        case SMACS_OK: return kExitOk;
        case SMACS_ERR_USAGE: return kExitUsage;
        default: return kExitFailure;
    }
}

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << path << "\n";
        std::exit(kExitUsage);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_and_free(char* s) {
    if (!s) return;
    std::cout << s << "\n";
    smacs_free(s);
}

std::string args_to_json(const std::vector<std::string>& kvs) {
    std::string out = "[";
    bool first = true;
    for (const std::string& kv : kvs) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "--arg expects name=value, got " << kv << "\n";
            std::exit(kExitUsage);
        }
        if (!first) out += ",";
        first = false;
        out += "{\"name\":\"" + kv.substr(0, eq) + "\",\"value\":\"" + kv.substr(eq + 1) +
               "\"}";
    }
    return out + "]";
}

smacs_ts* g_serving = nullptr;

void handle_signal(int) {
    if (g_serving) smacs_ts_stop(g_serving);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMACS token-based access control toolkit"};
    app.require_subcommand(1);

    // --- keygen
    auto* keygen = app.add_subcommand("keygen", "Generate a secp256k1 keypair");
    std::string keygen_seed;
    keygen->add_option("--seed", keygen_seed, "derive the key from a seed string");
    keygen->callback([&] {
        char* sk = nullptr;
        char* pk = nullptr;
        int rc = smacs_keygen(keygen_seed.empty() ? nullptr : keygen_seed.c_str(), &sk, &pk);
        if (rc != SMACS_OK) {
            std::cerr << smacs_last_error() << "\n";
            std::exit(map_status(rc));
        }
        std::cout << "{\"sk\":\"" << sk << "\",\"pk\":\"" << pk << "\"}\n";
        smacs_free(sk);
        smacs_free(pk);
    });

    // --- ts serve
    auto* ts = app.add_subcommand("ts", "Token service");
    auto* serve = ts->add_subcommand("serve", "Serve the token service over HTTP");
    std::string serve_config;
    int serve_port = 0;
    serve->add_option("--config", serve_config, "service config file")->required();
    serve->add_option("--port", serve_port, "override the configured port");
    serve->callback([&] {
        smacs_ts* handle = smacs_ts_open(serve_config.c_str());
        if (!handle) {
            std::cerr << smacs_last_error() << "\n";
            std::exit(kExitUsage);
        }
        g_serving = handle;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        int rc = smacs_ts_run(handle, serve_port);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        smacs_ts_close(handle);
        std::exit(map_status(rc));
    });

    // --- owner rules
    auto* owner = app.add_subcommand("owner", "Owner administration");
    auto* rules = owner->add_subcommand("rules", "Manage access control rules");
    rules->require_subcommand(1);
    std::string o_url, o_secret, o_file, o_scope, o_entry;
    auto add_owner_opts = [&](CLI::App* cmd, bool with_scope) {
        cmd->add_option("--ts", o_url, "token service URL")->required();
        cmd->add_option("--secret", o_secret, "owner bearer secret")->required();
        if (with_scope) {
            cmd->add_option("--scope", o_scope,
                            "scope path, e.g. sender.whitelist or method.m.blacklist")
                ->required();
            cmd->add_option("--entry", o_entry, "list entry")->required();
        }
    };
    auto* rules_put = rules->add_subcommand("put", "Replace the full rule document");
    add_owner_opts(rules_put, false);
    rules_put->add_option("--file", o_file, "rule document path")->required();
    rules_put->callback([&] {
        char* out = nullptr;
        int rc = smacs_rules_put(o_url.c_str(), o_secret.c_str(),
                                 read_file_or_die(o_file).c_str(), &out);
        print_and_free(out);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        std::exit(map_status(rc));
    });
    for (const char* verb : {"add", "remove"}) {
        auto* cmd = rules->add_subcommand(verb, std::string(verb) + " one list entry");
        add_owner_opts(cmd, true);
        std::string op = verb;
        cmd->callback([&, op] {
            char* out = nullptr;
            int rc = smacs_rules_patch(o_url.c_str(), o_secret.c_str(), op.c_str(),
                                       o_scope.c_str(), o_entry.c_str(), &out);
            print_and_free(out);
            if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
            std::exit(map_status(rc));
        });
    }

    // --- client token
    auto* client = app.add_subcommand("client", "Client-side operations");
    auto* token = client->add_subcommand("token", "Request a token");
    std::string c_url, c_type = "super", c_contract, c_sender, c_method;
    std::vector<std::string> c_args;
    token->add_option("--ts", c_url, "token service URL")->required();
    token->add_option("--type", c_type, "super | method | argument");
    token->add_option("--contract", c_contract, "target contract address")->required();
    token->add_option("--sender", c_sender, "client account address")->required();
    token->add_option("--method", c_method, "method name (method/argument tokens)");
    token->add_option("--arg", c_args, "name=value (argument tokens, repeatable)");
    token->callback([&] {
        std::string body = "{\"type\":\"" + c_type + "\",\"cAddr\":\"" + c_contract +
                           "\",\"sAddr\":\"" + c_sender + "\"";
        if (!c_method.empty()) {
            char* sel = nullptr;
            if (smacs_selector(c_method.c_str(), &sel) != SMACS_OK) {
                std::cerr << smacs_last_error() << "\n";
                std::exit(kExitUsage);
            }
            body += std::string(",\"methodId\":\"") + sel + "\"";
            smacs_free(sel);
        }
        if (!c_args.empty()) body += ",\"args\":" + args_to_json(c_args);
        body += "}";
        char* out = nullptr;
        int rc = smacs_token_request(c_url.c_str(), body.c_str(), &out);
        print_and_free(out);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        std::exit(map_status(rc));
    });

    // --- client send
    auto* send = client->add_subcommand(
        "send", "Fetch tokens for a call chain, then sign and submit a transaction");
    std::string s_url, s_state, s_sk, s_target, s_method, s_token_type = "method";
    std::vector<std::string> s_args, s_chain;
    std::uint64_t s_value = 0;
    send->add_option("--ts", s_url, "token service URL")->required();
    send->add_option("--state", s_state, "simulator state file")->required();
    send->add_option("--sk", s_sk, "origin private key (hex)")->required();
    send->add_option("--target", s_target, "top-level call target address")->required();
    send->add_option("--method", s_method, "method name")->required();
    send->add_option("--arg", s_args, "name=value (repeatable)");
    send->add_option("--value", s_value, "value to transfer with the call");
    send->add_option("--chain", s_chain,
                     "guarded contract needing a token: ADDR[:TYPE[:METHOD]] (repeatable)");
    send->add_option("--token-type", s_token_type, "default token type for chain hops");
    send->callback([&] {
        smacs_sim* sim = smacs_sim_load(s_state.c_str());
        if (!sim) {
            std::cerr << smacs_last_error() << "\n";
            std::exit(kExitUsage);
        }
        std::string plan = "{\"origin_sk\":\"" + s_sk + "\",\"target\":\"" + s_target +
                           "\",\"method\":\"" + s_method + "\",\"value\":" +
                           std::to_string(s_value) + ",\"args\":" + args_to_json(s_args) +
                           ",\"chain\":[";
        bool first = true;
        for (const std::string& hop : s_chain) {
            std::string addr = hop, type = s_token_type, method = s_method;
            std::size_t c1 = hop.find(':');
            if (c1 != std::string::npos) {
                addr = hop.substr(0, c1);
                std::size_t c2 = hop.find(':', c1 + 1);
                type = hop.substr(c1 + 1, c2 == std::string::npos ? std::string::npos
                                                                  : c2 - c1 - 1);
                if (c2 != std::string::npos) method = hop.substr(c2 + 1);
            }
            if (!first) plan += ",";
            first = false;
            plan += "{\"contract\":\"" + addr + "\",\"type\":\"" + type +
                    "\",\"method\":\"" + method + "\"}";
        }
        plan += "]}";
        char* receipt = nullptr;
        int rc = smacs_client_send(sim, s_url.c_str(), plan.c_str(), &receipt);
        print_and_free(receipt);
        if (rc == SMACS_OK && smacs_sim_save(sim, s_state.c_str()) != SMACS_OK) {
            std::cerr << smacs_last_error() << "\n";
            rc = SMACS_ERR;
        }
        smacs_sim_close(sim);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        std::exit(map_status(rc));
    });

    // --- sim init / dump
    auto* simcmd = app.add_subcommand("sim", "Chain simulator state files");
    auto* init = simcmd->add_subcommand("init", "Create a simulator state file");
    std::string i_genesis, i_out;
    init->add_option("--genesis", i_genesis, "genesis document path")->required();
    init->add_option("--out", i_out, "state file to write")->required();
    init->callback([&] {
        smacs_sim* sim = smacs_sim_new(read_file_or_die(i_genesis).c_str());
        if (!sim) {
            std::cerr << smacs_last_error() << "\n";
            std::exit(kExitUsage);
        }
        int rc = smacs_sim_save(sim, i_out.c_str());
        if (rc == SMACS_OK) {
            char* dump = nullptr;
            smacs_sim_dump(sim, &dump);
            print_and_free(dump);
        } else {
            std::cerr << smacs_last_error() << "\n";
        }
        smacs_sim_close(sim);
        std::exit(map_status(rc));
    });
    auto* dump = simcmd->add_subcommand("dump", "Print a simulator state file");
    std::string d_state;
    dump->add_option("--state", d_state, "state file")->required();
    dump->callback([&] {
        smacs_sim* sim = smacs_sim_load(d_state.c_str());
        if (!sim) {
            std::cerr << smacs_last_error() << "\n";
            std::exit(kExitUsage);
        }
        char* out = nullptr;
        int rc = smacs_sim_dump(sim, &out);
        print_and_free(out);
        smacs_sim_close(sim);
        std::exit(map_status(rc));
    });

    // --- bench
    auto* bench = app.add_subcommand("bench", "Token issuance throughput benchmark");
    std::string b_csv, b_dat, b_batches;
    int b_concurrency = 4;
    bench->add_option("--out", b_csv, "CSV output path");
    bench->add_option("--data", b_dat, "plot-ready data output path");
    bench->add_option("--batches", b_batches, "comma-separated batch sizes");
    bench->add_option("--concurrency", b_concurrency, "concurrent requesters");
    bench->callback([&] {
        std::string opts = "{\"concurrency\":" + std::to_string(b_concurrency);
        if (!b_csv.empty()) opts += ",\"csv_path\":\"" + b_csv + "\"";
        if (!b_dat.empty()) opts += ",\"data_path\":\"" + b_dat + "\"";
        if (!b_batches.empty()) {
            opts += ",\"batches\":[";
            std::stringstream ss(b_batches);
            std::string item;
            bool first = true;
            while (std::getline(ss, item, ',')) {
                if (!first) opts += ",";
                first = false;
                opts += item;
            }
            opts += "]";
        }
        opts += "}";
        char* csv = nullptr;
        int rc = smacs_bench_run(opts.c_str(), &csv);
        print_and_free(csv);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        std::exit(map_status(rc));
    });

    // --- scenario run
    auto* scenario = app.add_subcommand("scenario", "Scripted end-to-end scenarios");
    auto* run = scenario->add_subcommand("run", "Run a scenario file");
    std::string r_file;
    run->add_option("file", r_file, "scenario JSON file")->required();
    run->callback([&] {
        char* report = nullptr;
        int rc = smacs_scenario_run(r_file.c_str(), &report);
        print_and_free(report);
        if (rc != SMACS_OK) std::cerr << smacs_last_error() << "\n";
        std::exit(map_status(rc));
    });

    CLI11_PARSE(app, argc, argv);
    return kExitOk;
}
