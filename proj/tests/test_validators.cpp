#include <doctest.h>

#include "validators.hpp"

using namespace smacs;
using namespace smacs::validators;

namespace {

struct Snapshot {
    std::shared_ptr<sim::Simulator> sim = std::make_shared<sim::Simulator>();
    Address caller;

    Snapshot() {
        crypto::KeyPair kp = crypto::keypair_from_seed("validators:caller");
        caller = sim->create_account(kp.pk, 100);
    }
};

}  // namespace

TEST_CASE("identical heads are uniform, an off-by-one head is caught") {
    Snapshot s;
    Address h1 = s.sim->register_contract("counter", {}, std::nullopt, "H1");
    Address h2 = s.sim->register_contract("counter", {}, std::nullopt, "H2");
    Address h3 = s.sim->register_contract("counter", {}, std::nullopt, "H3");

    SimulatedCall call{h1, MethodId::of("increment"), {{"n", "5"}}, s.caller, 0};
    ValidatorVerdict v = nversion_uniform(call, {h1, h2, h3}, *s.sim);
    CHECK(v.pass);

    // One head computes balance+amount, the buggy one balance+amount+1.
    Address good = s.sim->register_contract("vault", {}, std::nullopt, "V1");
    Address buggy = s.sim->register_contract("vault_buggy", {}, std::nullopt, "V2");

    // Confirm the divergence directly before asking the validator.
    sim::Simulator probe = *s.sim;
    auto good_out = probe.simulate_call(s.caller, good, MethodId::of("deposit"),
                                        {{"amount", "1"}}, 0);
    auto buggy_out = probe.simulate_call(s.caller, buggy, MethodId::of("deposit"),
                                         {{"amount", "1"}}, 0);
    REQUIRE(good_out.result.ok);
    REQUIRE(buggy_out.result.ok);
    CHECK(good_out.result.ret != buggy_out.result.ret);

    SimulatedCall dep{good, MethodId::of("deposit"), {{"amount", "1"}}, s.caller, 0};
    ValidatorVerdict divergent = nversion_uniform(dep, {good, buggy}, *s.sim);
    CHECK_FALSE(divergent.pass);
    CHECK(divergent.detail.find("head 1") != std::string::npos);
    CHECK(divergent.detail.find(buggy.hex()) != std::string::npos);

    CHECK_THROWS_AS(nversion_uniform(call, {h1}, *s.sim), std::invalid_argument);
    CHECK_THROWS_AS(nversion_uniform(call, {h1, h1}, *s.sim), std::invalid_argument);
    CHECK_THROWS_AS(nversion_uniform(dep, {good, h1}, *s.sim), std::invalid_argument);
}

TEST_CASE("heads that trap identically still count as uniform") {
    Snapshot s;
    Address h1 = s.sim->register_contract("counter", {}, std::nullopt, "H1");
    Address h2 = s.sim->register_contract("counter", {}, std::nullopt, "H2");
    SimulatedCall bad{h1, MethodId::of("increment"), {{"n", "oops"}}, s.caller, 0};
    ValidatorVerdict v = nversion_uniform(bad, {h1, h2}, *s.sim);
    CHECK(v.pass);  // both heads trap the same way

    // One head trapping while the other returns is a divergence.
    s.sim->contract_mutable(h2).storage["count"] = "99999999999999999999999999";
    SimulatedCall ok_call{h1, MethodId::of("increment"), {{"n", "1"}}, s.caller, 0};
    ValidatorVerdict split = nversion_uniform(ok_call, {h1, h2}, *s.sim);
    CHECK_FALSE(split.pass);
    CHECK(split.detail.find("trap") != std::string::npos);
}

TEST_CASE("the attack call shape is flagged as re-entrant, honest calls pass") {
    Snapshot s;
    sim::BankAttackerAddrs ba = sim::bank_attacker_fixture(*s.sim);

    // Attacker.withdraw() from any caller re-enters the bank.
    SimulatedCall attack{ba.attacker, MethodId::of("withdraw"), {}, s.caller, 0};
    ValidatorVerdict v = ecf_check(attack, *s.sim);
    CHECK_FALSE(v.pass);
    CHECK(v.detail ==
          "re-entrancy: Bank.withdraw -> Attacker.fallback -> Bank.withdraw");

    // Bank.withdraw called directly is straight-line.
    SimulatedCall honest{ba.bank, MethodId::of("withdraw"), {}, s.caller, 0};
    CHECK(ecf_check(honest, *s.sim).pass);

    // A deposit has no outgoing call at all.
    SimulatedCall deposit{ba.bank, MethodId::of("addBalance"), {}, s.caller, 0};
    CHECK(ecf_check(deposit, *s.sim).pass);

    // The simulated call through the attacker, caller set to the declared
    // sender, also fails when the declared sender is the attacker contract.
    SimulatedCall via_contract{ba.bank, MethodId::of("withdraw"), {}, ba.attacker, 0};
    ValidatorVerdict v2 = ecf_check(via_contract, *s.sim);
    CHECK_FALSE(v2.pass);
    CHECK(v2.detail.find("re-entrancy") == 0);

    CHECK_THROWS_AS(ecf_check(SimulatedCall{Address{}, MethodId::of("x"), {}, s.caller, 0},
                              *s.sim),
                    std::invalid_argument);
}

TEST_CASE("validator runs never touch the authoritative state") {
    Snapshot s;
    sim::BankAttackerAddrs ba = sim::bank_attacker_fixture(*s.sim);
    Address h1 = s.sim->register_contract("counter", {}, std::nullopt, "H1");
    Address h2 = s.sim->register_contract("counter", {}, std::nullopt, "H2");

    bytes before = s.sim->state_digest();
    (void)ecf_check({ba.attacker, MethodId::of("withdraw"), {}, s.caller, 0}, *s.sim);
    (void)nversion_uniform({h1, MethodId::of("increment"), {{"n", "3"}}, s.caller, 0},
                           {h1, h2}, *s.sim);
    CHECK(s.sim->state_digest() == before);
}

TEST_CASE("verdicts are deterministic, detail included") {
    Snapshot s;
    sim::BankAttackerAddrs ba = sim::bank_attacker_fixture(*s.sim);
    SimulatedCall attack{ba.attacker, MethodId::of("withdraw"), {}, s.caller, 0};
    ValidatorVerdict a = ecf_check(attack, *s.sim);
    ValidatorVerdict b = ecf_check(attack, *s.sim);
    CHECK(a.pass == b.pass);
    CHECK(a.detail == b.detail);
}

TEST_CASE("adversarial recursion terminates at the depth bound") {
    Snapshot s;
    Address loop = s.sim->register_contract("loop", {}, std::nullopt, "Loop");
    SimulatedCall spin{loop, MethodId::of("spin"), {}, s.caller, 0};
    ValidatorVerdict v = ecf_check(spin, *s.sim);
    CHECK_FALSE(v.pass);  // self-recursion is re-entrancy by definition here
    CHECK(v.detail.find("Loop.spin") != std::string::npos);

    // Even with re-entrancy reporting aside, execution stops at the bounds.
    sim::Simulator bounded = *s.sim;
    bounded.set_guard_enforcement(false);
    auto out = bounded.simulate_call(s.caller, loop, MethodId::of("spin"), {}, 0);
    CHECK_FALSE(out.result.ok);
    CHECK(out.result.revert_reason.find("depth") != std::string::npos);
}
