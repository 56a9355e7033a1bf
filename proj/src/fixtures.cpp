#include "fixtures.hpp"

#include <functional>
#include <map>

#include "chain_sim.hpp"

namespace smacs::sim {

namespace {

void add_method(ContractInstance& inst, const std::string& name, Visibility vis, bool payable,
                Handler handler) {
    inst.methods[MethodId::of(name)] = MethodDef{name, vis, payable, std::move(handler)};
}

std::string balance_key(const Address& a) { return "balance." + a.hex(); }

// Toy contract that mirrors its calldata back; no guard, no state.
void build_echo(ContractInstance& inst) {
    add_method(inst, "echo", Visibility::External, true,
               [](CallEnv& env) { return env.msg_data(); });
    add_method(inst, "ping", Visibility::Public, false, [](CallEnv& env) {
        (void)env;
        return bytes{'p', 'o', 'n', 'g'};
    });
}

// The vulnerable Bank: withdraw sends the recorded balance out before
// zeroing it, so a re-entrant fallback drains it.
void build_bank(ContractInstance& inst) {
    add_method(inst, "addBalance", Visibility::Public, true, [](CallEnv& env) {
        std::string key = balance_key(env.msg_sender());
        env.storage_set_u64(key, env.storage_u64(key) + env.msg_value());
        return bytes{};
    });
    add_method(inst, "withdraw", Visibility::Public, false, [](CallEnv& env) {
        std::string key = balance_key(env.msg_sender());
        std::uint64_t amount = env.storage_u64(key);
        if (!env.send(env.msg_sender(), amount).ok) env.trap("send failed");
        env.storage_set_u64(key, 0);
        return bytes{};
    });
}

// The Attacker re-enters Bank.withdraw once from its fallback, gated by the
// is_attack flag.
void build_attacker(ContractInstance& inst) {
    add_method(inst, "deposit", Visibility::Public, true, [](CallEnv& env) {
        Address bank = Address::from_hex(env.storage_get("bank"));
        CallResult r = env.call(bank, "addBalance", {}, 2);
        if (!r.ok) env.trap("deposit failed: " + r.revert_reason);
        return bytes{};
    });
    add_method(inst, "withdraw", Visibility::Public, false, [](CallEnv& env) {
        Address bank = Address::from_hex(env.storage_get("bank"));
        CallResult r = env.call(bank, "withdraw", {}, 0);
        if (!r.ok) env.trap("withdraw failed: " + r.revert_reason);
        return bytes{};
    });
    inst.fallback = MethodDef{"fallback", Visibility::External, true, [](CallEnv& env) {
        if (env.storage_get("is_attack") == "1") {
            env.storage_set("is_attack", "0");
            Address bank = Address::from_hex(env.storage_get("bank"));
            env.call(bank, "withdraw", {}, 0);  // outcome deliberately ignored
        }
        return bytes{};
    }};
}

void build_counter(ContractInstance& inst, std::uint64_t extra) {
    add_method(inst, "increment", Visibility::Public, false, [extra](CallEnv& env) {
        std::uint64_t next = env.storage_u64("count") + env.arg_u64("n") + extra;
        env.storage_set_u64("count", next);
        std::string s = std::to_string(next);
        return bytes(s.begin(), s.end());
    });
    add_method(inst, "get", Visibility::Public, false, [](CallEnv& env) {
        std::string s = std::to_string(env.storage_u64("count"));
        return bytes(s.begin(), s.end());
    });
}

void build_vault(ContractInstance& inst, std::uint64_t extra) {
    add_method(inst, "deposit", Visibility::Public, false, [extra](CallEnv& env) {
        std::string key = balance_key(env.msg_sender());
        std::uint64_t next = env.storage_u64(key) + env.arg_u64("amount") + extra;
        env.storage_set_u64(key, next);
        std::string s = std::to_string(next);
        return bytes(s.begin(), s.end());
    });
    add_method(inst, "balanceOf", Visibility::Public, false, [](CallEnv& env) {
        std::string s = std::to_string(env.storage_u64("balance." + env.arg("who")));
        return bytes(s.begin(), s.end());
    });
}

// Forwards its call to init["next"], building arbitrary-depth call chains.
void build_relay(ContractInstance& inst) {
    add_method(inst, "forward", Visibility::Public, false, [](CallEnv& env) {
        env.storage_set_u64("hits", env.storage_u64("hits") + 1);
        std::string next = env.storage_get("next");
        if (next.empty()) {
            std::string s = "end";
            return bytes(s.begin(), s.end());
        }
        CallResult r = env.call(Address::from_hex(next), "forward", env.args(), 0);
        if (!r.ok) env.trap(r.revert_reason);
        return r.ret;
    });
}

// Visibility fixture: a public entry that reaches an internal helper, plus
// a private method that must never be message-callable.
void build_gate(ContractInstance& inst) {
    add_method(inst, "outer", Visibility::Public, false, [](CallEnv& env) {
        return env.call_internal("inner", {{"v", env.arg("v")}});
    });
    add_method(inst, "inner", Visibility::Internal, false, [](CallEnv& env) {
        env.storage_set("last", env.arg("v"));
        std::string s = "inner:" + env.arg("v");
        return bytes(s.begin(), s.end());
    });
    add_method(inst, "secret", Visibility::Private, false, [](CallEnv& env) {
        (void)env;
        return bytes{};
    });
}

// Unbounded self-recursion, for the termination bounds.
void build_loop(ContractInstance& inst) {
    add_method(inst, "spin", Visibility::Public, false, [](CallEnv& env) {
        CallResult r = env.call(env.self(), "spin", {}, 0);
        if (!r.ok) env.trap(r.revert_reason);
        return bytes{};
    });
}

using Builder = std::function<void(ContractInstance&)>;

const std::map<std::string, Builder>& builders() {
    static const std::map<std::string, Builder> table = {
        {"echo", build_echo},
        {"bank", build_bank},
        {"attacker", build_attacker},
        {"counter", [](ContractInstance& i) { build_counter(i, 0); }},
        {"counter_buggy", [](ContractInstance& i) { build_counter(i, 1); }},
        {"vault", [](ContractInstance& i) { build_vault(i, 0); }},
        {"vault_buggy", [](ContractInstance& i) { build_vault(i, 1); }},
        {"relay", build_relay},
        {"gate", build_gate},
        {"loop", build_loop},
    };
    return table;
}

}  // namespace

void build_fixture(const std::string& name, ContractInstance& inst) {
    auto it = builders().find(name);
    if (it == builders().end()) throw Error("UnknownFixture", name);
    it->second(inst);
}

const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, b] : builders()) v.push_back(name);
        return v;
    }();
    return names;
}

bool is_known_fixture(const std::string& name) { return builders().count(name) > 0; }

}  // namespace smacs::sim
