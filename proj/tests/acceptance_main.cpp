// Acceptance suite: one timed pass/fail line per criterion, nonzero exit on
// any failure. Run through ctest or directly from the build tree.
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bench.hpp"
#include "bitmap.hpp"
#include "chain_sim.hpp"
#include "scenario.hpp"
#include "token_service.hpp"
#include "oracle_bitmap.hpp"

using namespace smacs;

namespace {

struct Check {
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }
    template <typename A, typename B>
    void expect_eq(const A& a, const B& b, const std::string& what) {
        if (!(a == static_cast<A>(b))) failures.push_back(what);
    }
};

struct Criterion {
    int id;
    std::string title;
    double budget_ms;
    std::function<void(Check&)> body;
};

Address addr_of(byte fill) {
    Address a;
    a.v.fill(fill);
    return a;
}

// Shared harness: one funded account, a signing service key, direct issuance.
struct Harness {
    sim::Simulator chain;
    crypto::KeyPair user_key = crypto::keypair_from_seed("acceptance:user");
    Address user;
    crypto::KeyPair ts_key = crypto::keypair_from_seed("acceptance:ts");
    crypto::Signer signer{ts_key};

    Harness() { user = chain.create_account(user_key.pk, 1000); }

    sim::Transaction tx(const Address& target, const std::string& method,
                        const std::vector<ArgPair>& args = {}, std::uint64_t value = 0,
                        bytes tokens = {}) {
        return sim::make_signed_transaction(user_key, user, chain.nonce(user), target, method,
                                            args, value, std::move(tokens));
    }

    Token issue(const TokenRequest& req, std::uint32_t expire, i128 index = kNoIndex) {
        Token t;
        t.type = req.type;
        t.expire = expire;
        t.index = index;
        t.signature =
            signer.sign(signing_payload(t.type, t.expire, t.index, encode_req_payload(req)));
        return t;
    }
};

// --- criterion 1: the worked bitmap example -------------------------------

void criterion_bitmap_example(Check& c) {
    Bitmap b(8);
    c.expect(b.start() == 0 && b.end() == 7 && b.start_ptr() == 0 && b.end_ptr() == 7,
             "fresh window is (0,7,0,7)");
    for (std::uint64_t i : {0, 1, 4, 5})
        c.expect(b.check_and_mark(i), "index " + std::to_string(i) + " accepted");
    c.expect(b.check_and_mark(9), "index 9 accepted");
    c.expect(b.start() == 2 && b.end() == 9 && b.start_ptr() == 2 && b.end_ptr() == 1,
             "after 9 the window is (2,9,2,1)");
    c.expect(b.check_and_mark(13), "index 13 accepted");
    c.expect(b.start() == 6 && b.end() == 13 && b.start_ptr() == 6 && b.end_ptr() == 5,
             "after 13 the window is (6,13,6,5)");
    c.expect(!b.check_and_mark(2), "index 2 is lost after the slide");
    c.expect(!b.check_and_mark(3), "index 3 is lost after the slide");
    c.expect(!b.check_and_mark(13), "replay of 13 rejected");
}

// --- criterion 2: oracle equivalence ---------------------------------------

std::string bitmap_key(const Bitmap& b) {
    return std::to_string(b.start()) + "|" + std::to_string(b.start_ptr()) + "|" +
           b.bits_hex();
}

void criterion_bitmap_oracle(Check& c) {
    // Joint-state closure over indexes {0..24}: every reachable
    // (implementation, oracle) pair agrees on every next index, which covers
    // all index sequences over that alphabet (in particular all of length
    // <= 6), for n in 1..8.
    for (std::size_t n = 1; n <= 8 && c.failures.size() < 5; ++n) {
        std::vector<std::pair<Bitmap, testing::NaiveWindow>> frontier;
        std::set<std::string> seen;
        frontier.emplace_back(Bitmap(n), testing::NaiveWindow(n));
        seen.insert(bitmap_key(frontier.back().first));
        while (!frontier.empty()) {
            auto [impl, oracle] = frontier.back();
            frontier.pop_back();
            for (std::uint64_t i = 0; i <= 24; ++i) {
                Bitmap b = impl;
                testing::NaiveWindow o = oracle;
                if (b.check_and_mark(i) != o.check_and_mark(i)) {
                    c.expect(false, "n=" + std::to_string(n) + " disagrees on index " +
                                        std::to_string(i));
                    return;
                }
                if (seen.insert(bitmap_key(b)).second) frontier.emplace_back(b, o);
            }
        }
    }

    // Belt and braces: literal enumeration of every sequence of length <= 4.
    for (std::size_t n = 1; n <= 8; ++n) {
        struct Node {
            Bitmap b;
            testing::NaiveWindow o;
            int depth;
        };
        std::vector<Node> stack;
        stack.push_back({Bitmap(n), testing::NaiveWindow(n), 0});
        while (!stack.empty()) {
            Node node = stack.back();
            stack.pop_back();
            if (node.depth == 4) continue;
            for (std::uint64_t i = 0; i <= 24; ++i) {
                Bitmap b = node.b;
                testing::NaiveWindow o = node.o;
                if (b.check_and_mark(i) != o.check_and_mark(i)) {
                    c.expect(false, "literal enumeration disagreement at n=" +
                                        std::to_string(n));
                    return;
                }
                stack.push_back({std::move(b), std::move(o), node.depth + 1});
            }
        }
    }

    // 1e5 random indexes at n=64.
    std::mt19937_64 rng(64);
    Bitmap b(64);
    testing::NaiveWindow o(64);
    std::uint64_t base = 0;
    for (int step = 0; step < 100000; ++step) {
        std::uint64_t i = base + rng() % 96;
        if (rng() % 8 == 0) base += rng() % 12;
        if (b.check_and_mark(i) != o.check_and_mark(i)) {
            c.expect(false, "fuzz disagreement at step " + std::to_string(step));
            return;
        }
    }
}

// --- criterion 3: contract-side verification, adversarial ------------------

void criterion_guard_adversarial(Check& c) {
    Harness h;
    h.chain.set_time(100);
    Address guarded =
        h.chain.register_contract("counter", {}, sim::GuardSpec{h.ts_key.pk, 64}, "C");
    Address decoy =
        h.chain.register_contract("counter", {}, sim::GuardSpec{h.ts_key.pk, 64}, "D");

    std::vector<ArgPair> args = {{"n", "7"}, {"note", "acceptance"}};
    TokenRequest req{TokenType::Argument, guarded, h.user, MethodId::of("increment"), args};
    Token token = h.issue(req, 200);
    sim::SmacsGuard& guard = *h.chain.contract_mutable(guarded).guard;

    bytes msg_data;
    MethodId selector = MethodId::of("increment");
    msg_data.insert(msg_data.end(), selector.v.begin(), selector.v.end());
    bytes arg_bytes = encode_args(args);
    msg_data.insert(msg_data.end(), arg_bytes.begin(), arg_bytes.end());
    bytes array = encode_token_array({{guarded, token}});

    sim::CostMeter cost;
    sim::GuardContext good{guarded, h.user, selector, msg_data, 100};
    c.expect(sim::verify_token_onchain(good, guard, array, cost), "valid token accepted");

    sim::GuardContext late = good;
    late.now = 201;  // expire = 200, rejection is strictly greater-than
    c.expect(!sim::verify_token_onchain(late, guard, array, cost), "expired token rejected");

    sim::GuardContext wrong_origin = good;
    wrong_origin.origin = addr_of(0x66);
    c.expect(!sim::verify_token_onchain(wrong_origin, guard, array, cost),
             "different origin rejected");

    sim::GuardContext wrong_contract = good;
    wrong_contract.self = decoy;
    bytes remapped = encode_token_array({{decoy, token}});
    c.expect(!sim::verify_token_onchain(wrong_contract, guard, remapped, cost),
             "different contract address rejected");

    // Method token presented for another method.
    TokenRequest method_req{TokenType::Method, guarded, h.user, MethodId::of("increment"), {}};
    Token method_token = h.issue(method_req, 200);
    bytes method_array = encode_token_array({{guarded, method_token}});
    bytes get_data;
    MethodId get_sel = MethodId::of("get");
    get_data.insert(get_data.end(), get_sel.v.begin(), get_sel.v.end());
    sim::GuardContext wrong_method{guarded, h.user, get_sel, get_data, 100};
    c.expect(!sim::verify_token_onchain(wrong_method, guard, method_array, cost),
             "method token rejected for another selector");

    // Every single mutated calldata byte must fail the argument binding.
    int calldata_accepts = 0;
    for (std::size_t i = 0; i < msg_data.size(); ++i) {
        bytes mutated = msg_data;
        mutated[i] ^= 0x01;
        sim::GuardContext ctx{guarded, h.user, MethodId::from_bytes({mutated.data(), 4}),
                              mutated, 100};
        if (sim::verify_token_onchain(ctx, guard, array, cost)) ++calldata_accepts;
    }
    c.expect_eq(calldata_accepts, 0, "all " + std::to_string(msg_data.size()) +
                                         " calldata mutations rejected");

    // Every single mutated signature byte must fail.
    int sig_accepts = 0;
    for (std::size_t i = 0; i < token.signature.size(); ++i) {
        Token bad = token;
        bad.signature[i] ^= 0x5a;
        bytes bad_array = encode_token_array({{guarded, bad}});
        if (sim::verify_token_onchain(good, guard, bad_array, cost)) ++sig_accepts;
    }
    c.expect_eq(sig_accepts, 0, "all 65 signature mutations rejected");
}

// --- criterion 4: replay and substitution ----------------------------------

void criterion_replay_substitution(Check& c) {
    Harness h;
    h.chain.set_time(10);
    Address guarded =
        h.chain.register_contract("counter", {}, sim::GuardSpec{h.ts_key.pk, 64}, "C");
    TokenRequest req{TokenType::Method, guarded, h.user, MethodId::of("increment"), {}};
    Token token = h.issue(req, 1000);
    bytes array = encode_token_array({{guarded, token}});

    sim::Transaction tx = h.tx(guarded, "increment", {{"n", "1"}}, 0, array);
    c.expect(h.chain.submit_transaction(tx).ok(), "original transaction lands");
    c.expect(h.chain.submit_transaction(tx).status == sim::Receipt::Status::NonceUsed,
             "byte-identical replay rejected with NonceUsed");

    // The token lifted into another origin's transaction fails the guard.
    crypto::KeyPair thief_key = crypto::keypair_from_seed("acceptance:thief");
    Address thief = h.chain.create_account(thief_key.pk, 100);
    sim::Transaction lifted = sim::make_signed_transaction(
        thief_key, thief, h.chain.nonce(thief), guarded, "increment", {{"n", "1"}}, 0, array);
    sim::Receipt r = h.chain.submit_transaction(lifted);
    c.expect(r.status == sim::Receipt::Status::Reverted && r.revert_reason == "token",
             "lifted token fails the guard");
}

// --- criterion 5: re-entrancy case study -----------------------------------

void criterion_reentrancy(Check& c) {
    // Unguarded: the attacker drains beyond its deposit.
    {
        Harness h;
        sim::BankAttackerAddrs ba = sim::bank_attacker_fixture(h.chain);
        c.expect(h.chain.submit_transaction(h.tx(ba.bank, "addBalance", {}, 10)).ok(),
                 "honest deposit lands");
        c.expect(h.chain.submit_transaction(h.tx(ba.attacker, "deposit", {}, 2)).ok(),
                 "attacker deposit lands");
        c.expect(h.chain.submit_transaction(h.tx(ba.attacker, "withdraw")).ok(),
                 "attack transaction executes");
        c.expect(h.chain.balance(ba.attacker) > 2,
                 "attacker ends with more than its deposit (got " +
                     std::to_string(h.chain.balance(ba.attacker)) + ")");
    }
    // Guarded + ecf validator: the shipped scenario denies the request,
    // keeps the bank state intact and lets honest withdrawals through.
    scenario::Report r = scenario::run_scenario_file(
        std::string(SMACS_SOURCE_DIR) + "/scenarios/reentrancy_blocked.json");
    c.expect(r.parsed, "scenario parses");
    for (const std::string& f : r.failures) c.expect(false, "scenario: " + f);
}

// --- criterion 6: n-version case study --------------------------------------

void criterion_nversion(Check& c) {
    auto build = [](bool divergent) {
        auto priv = std::make_shared<sim::Simulator>();
        Address h1 = priv->register_contract("vault", {}, std::nullopt, "H1");
        Address h2 = priv->register_contract("vault", {}, std::nullopt, "H2");
        Address h3 = priv->register_contract(divergent ? "vault_buggy" : "vault", {},
                                             std::nullopt, "H3");
        Address caddr = addr_of(0xc5);
        service::ServiceConfig cfg;
        cfg.key = crypto::keypair_from_seed("acceptance:nversion");
        cfg.clock = [] { return 1000U; };
        service::ContractPolicy policy;
        policy.methods["deposit"] = {false};
        policy.nversion_heads = {h1, h2, h3};
        policy.sim_twin = h1;
        cfg.contracts[caddr] = policy;
        auto ts = std::make_unique<service::TokenService>(std::move(cfg), priv);
        ts->put_rules(R"({
            "sender": {"blacklist": []},
            "method": {"deposit": {"blacklist": []}},
            "argument": {"amount": {"blacklist": []}},
            "validators": ["nversion"]
        })");
        return std::make_pair(std::move(ts), caddr);
    };

    auto [uniform_ts, caddr] = build(false);
    TokenRequest req{TokenType::Argument, caddr, addr_of(0x51), MethodId::of("deposit"),
                     {{"amount", "1"}}};
    service::IssueResult ok = uniform_ts->handle_token_request(req);
    c.expect(ok.issued, "identical heads: token issued (got " + ok.reason + ")");

    auto [divergent_ts, caddr2] = build(true);
    req.contract = caddr2;
    service::IssueResult denied = divergent_ts->handle_token_request(req);
    c.expect(!denied.issued, "divergent heads: token denied");
    c.expect_eq(denied.reason, std::string("validator.nversion"),
                "denial names the validator");
}

// --- criterion 7: throughput shape ------------------------------------------

void criterion_throughput(Check& c) {
    bench::Options opts;
    opts.csv_path = "bench.csv";
    opts.data_path = "bench.dat";
    bench::Report report = bench::run(opts);

    const std::uint64_t top = 100000;
    double super = report.rate("super", top);
    double method = report.rate("method", top);
    double argument = report.rate("argument", top);
    double onetime = report.rate("argument_onetime", top);
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return std::string(buf);
    };
    std::string rates = "rates at 1e5: super=" + fmt(super) + " method=" + fmt(method) +
                        " argument=" + fmt(argument) + " onetime=" + fmt(onetime);
    std::printf("    %s\n", rates.c_str());

    // Monotone type ordering with 10%% inversion slack between neighbours.
    c.expect(method <= super * 1.10, "method <= super within slack (" + rates + ")");
    c.expect(argument <= method * 1.10, "argument <= method within slack (" + rates + ")");
    c.expect(onetime <= argument * 1.10, "one-time <= argument within slack (" + rates + ")");

    for (const std::string& type : {"super", "method", "argument", "argument_onetime"}) {
        c.expect(report.rate(type, top) >= report.rate(type, 1),
                 type + ": batched throughput >= single-request throughput");
        for (const bench::Row& row : report.rows)
            if (row.type == type)
                c.expect(row.requests_per_second >= 48.0,
                         type + " sustains >= 48 req/s at batch " +
                             std::to_string(row.batch) + " (got " +
                             fmt(row.requests_per_second) + ")");
    }

    for (const bench::ValidatorLatency& v : report.validator_latency)
        std::printf("    validator %s: %.0f us/check\n", v.name.c_str(), v.micros);
}

// --- criterion 8: cost linearity --------------------------------------------

void criterion_cost_linearity(Check& c) {
    std::vector<std::uint64_t> guard_ops;
    for (int depth = 1; depth <= 4; ++depth) {
        Harness h;
        h.chain.set_time(5);
        std::vector<Address> hops;
        std::string next;
        for (int i = 0; i < depth; ++i) {
            Address a = h.chain.register_contract(
                "relay", {{"next", next}}, sim::GuardSpec{h.ts_key.pk, 32},
                "R" + std::to_string(i));
            next = a.hex();
            hops.push_back(a);
        }
        std::vector<ArgPair> args = {{"payload", "x"}};
        std::vector<std::pair<Address, Token>> entries;
        i128 index = 1;
        for (const Address& hop : hops) {
            TokenRequest req{TokenType::Argument, hop, h.user, MethodId::of("forward"), args};
            entries.emplace_back(hop, h.issue(req, 1000, index++));
        }
        sim::Receipt r = h.chain.submit_transaction(
            h.tx(hops.back(), "forward", args, 0, encode_token_array(entries)));
        c.expect(r.ok(), "depth-" + std::to_string(depth) + " chain lands");
        c.expect_eq(r.cost.sig_verifies, static_cast<std::uint64_t>(depth),
                    "sigVerifies == k at depth " + std::to_string(depth));
        guard_ops.push_back(r.cost.guard_ops);
    }
    for (int depth = 2; depth <= 4; ++depth) {
        double ratio = static_cast<double>(guard_ops[depth - 1]) /
                       (static_cast<double>(depth) * static_cast<double>(guard_ops[0]));
        c.expect(ratio >= 0.85 && ratio <= 1.15,
                 "guard ops at depth " + std::to_string(depth) + " within +/-15% of k x " +
                     "depth-1 (ratio " + std::to_string(ratio) + ")");
    }
}

// --- criterion 9: codec and binding properties ------------------------------

void criterion_codec_binding(Check& c) {
    std::mt19937_64 rng(909);
    int roundtrip_failures = 0;
    for (int i = 0; i < 10000; ++i) {
        Token t;
        t.type = static_cast<TokenType>(1 + rng() % 3);
        t.expire = static_cast<std::uint32_t>(rng());
        t.index = (rng() % 2) ? static_cast<i128>(rng()) : kNoIndex;
        for (byte& b : t.signature) b = static_cast<byte>(rng());
        bytes enc = encode_token(t);
        if (enc.size() != kTokenSize || !(decode_token(enc) == t)) ++roundtrip_failures;
    }
    c.expect_eq(roundtrip_failures, 0, "10^4 token round-trips bit-exact");

    // End-to-end issue -> on-chain verify across all three types.
    Address caddr = addr_of(0xe9);
    std::vector<std::string> methods = {"m0", "m1", "m2", "m3"};
    std::vector<std::string> arg_names = {"a0", "a1", "a2"};
    service::ServiceConfig cfg;
    cfg.key = crypto::keypair_from_seed("acceptance:codec");
    cfg.clock = [] { return 5000U; };
    service::ContractPolicy policy;
    for (const std::string& m : methods) policy.methods[m] = {false};
    policy.expiry_s = 900;
    cfg.contracts[caddr] = policy;
    bytes guard_pk = cfg.key.pk;
    service::TokenService ts(std::move(cfg));
    ts.put_rules(R"({
        "sender": {"blacklist": []},
        "method": {"m0": {"blacklist": []}, "m1": {"blacklist": []},
                   "m2": {"blacklist": []}, "m3": {"blacklist": []}},
        "argument": {"a0": {"blacklist": []}, "a1": {"blacklist": []},
                     "a2": {"blacklist": []}}
    })");

    sim::SmacsGuard guard{guard_pk, Bitmap(64)};
    int e2e_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        TokenRequest req;
        req.type = static_cast<TokenType>(1 + rng() % 3);
        req.contract = caddr;
        Address sender;
        for (byte& b : sender.v) b = static_cast<byte>(rng());
        req.sender = sender;
        std::string method = methods[rng() % methods.size()];
        if (req.type != TokenType::Super) req.method = MethodId::of(method);
        if (req.type == TokenType::Argument) {
            std::size_t nargs = 1 + rng() % 3;
            for (std::size_t k = 0; k < nargs; ++k) {
                std::string value;
                for (int len = rng() % 12; len > 0; --len)
                    value.push_back(static_cast<char>('a' + rng() % 26));
                req.args.push_back({arg_names[rng() % arg_names.size()], value});
            }
        }

        service::IssueResult out = ts.handle_token_request(req);
        if (!out.issued) {
            ++e2e_failures;
            continue;
        }
        bytes msg_data;
        if (req.method) {
            msg_data.insert(msg_data.end(), req.method->v.begin(), req.method->v.end());
            bytes enc = encode_args(req.args);
            msg_data.insert(msg_data.end(), enc.begin(), enc.end());
        }
        sim::GuardContext ctx{caddr, req.sender,
                              req.method ? *req.method : MethodId{}, msg_data, 5000};
        sim::CostMeter cost;
        if (!sim::verify_token_onchain(ctx, guard, encode_token_array({{caddr, out.token}}),
                                       cost))
            ++e2e_failures;
    }
    c.expect_eq(e2e_failures, 0, "10^3 random issue->verify round trips succeed");
}

// --- criterion 10: bitmap sizing --------------------------------------------

void criterion_bitmap_sizing(Check& c) {
    c.expect_eq(Bitmap::required_bits(3600, 35), 126000ULL,
                "required_bits(3600, 35) == 126000");
    c.expect_eq(Bitmap::required_bits(3600, 0.35), 1260ULL,
                "required_bits(3600, 0.35) == 1260");
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    std::vector<Criterion> criteria = {
        {1, "bitmap worked example (start/end/pointer states, misses, replay)", 1.0,
         criterion_bitmap_example},
        {2, "bitmap oracle equivalence (closure n=1..8 over 0..24, 1e5 fuzz at n=64)",
         60000.0, criterion_bitmap_oracle},
        {3, "contract-side verification adversarial suite (100% rejection)", 10000.0,
         criterion_guard_adversarial},
        {4, "transaction replay and token substitution rejected", 1000.0,
         criterion_replay_substitution},
        {5, "re-entrancy case study (drain unguarded, denied via ecf, honest ok)", 5000.0,
         criterion_reentrancy},
        {6, "n-version case study (divergent denied, identical issued)", 5000.0,
         criterion_nversion},
        {7, "issuance throughput shape (ordering, batching, >= 48 req/s)", 300000.0,
         criterion_throughput},
        {8, "guard cost linearity over chain depth 1..4", 10000.0,
         criterion_cost_linearity},
        {9, "token codec round-trips and end-to-end binding", 30000.0,
         criterion_codec_binding},
        {10, "bitmap sizing from lifetime x rate", 1.0, criterion_bitmap_sizing},
    };

    int failed = 0;
    for (Criterion& criterion : criteria) {
        Check check;
        auto t0 = std::chrono::steady_clock::now();
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (ms > criterion.budget_ms)
            check.expect(false, "over time budget: " + std::to_string(ms) + " ms > " +
                                    std::to_string(criterion.budget_ms) + " ms");
        bool pass = check.failures.empty();
        std::printf("%s criterion %2d: %s (%.1f ms)\n", pass ? "PASS" : "FAIL", criterion.id,
                    criterion.title.c_str(), ms);
        for (const std::string& f : check.failures) std::printf("      - %s\n", f.c_str());
        if (!pass) ++failed;
    }
    if (failed) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
