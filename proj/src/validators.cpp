#include "validators.hpp"

#include <set>

namespace smacs::validators {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_us(Clock::time_point t0) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

struct HeadOutcome {
    bool ok = false;
    std::string reason;
    bytes ret;
    std::string storage_digest;
    std::vector<sim::Transfer> transfers;

    bool operator==(const HeadOutcome&) const = default;
};

std::string describe(const HeadOutcome& o) {
    if (!o.ok) return "trap(" + o.reason + ")";
    return "ret=" + to_hex(o.ret) + " storage=" + o.storage_digest.substr(0, 16) +
           " transfers=" + std::to_string(o.transfers.size());
}

}  // namespace

ValidatorVerdict nversion_uniform(const SimulatedCall& call,
                                  const std::vector<Address>& heads,
                                  const sim::Simulator& snapshot) {
    auto t0 = Clock::now();
    if (heads.size() < 2)
        throw std::invalid_argument("nversion_uniform needs at least two heads");
    std::set<Address> distinct(heads.begin(), heads.end());
    if (distinct.size() != heads.size())
        throw std::invalid_argument("nversion heads must live at distinct addresses");

    std::set<MethodId> reference;
    for (const auto& [id, def] : snapshot.contract(heads.front()).methods)
        reference.insert(id);
    for (const Address& head : heads) {
        std::set<MethodId> table;
        for (const auto& [id, def] : snapshot.contract(head).methods) table.insert(id);
        if (table != reference)
            throw std::invalid_argument("nversion heads must share one method table");
    }

    std::vector<HeadOutcome> outcomes;
    outcomes.reserve(heads.size());
    for (const Address& head : heads) {
        sim::Simulator isolated = snapshot;  // per-head copy, discarded afterwards
        isolated.set_guard_enforcement(false);
        sim::Simulator::SimOutcome out =
            isolated.simulate_call(call.caller, head, call.method, call.args, call.value);
        HeadOutcome h;
        h.ok = out.result.ok;
        h.reason = out.result.revert_reason;
        h.ret = out.result.ret;
        h.storage_digest = isolated.storage_digest_hex(head);
        h.transfers = out.transfers;
        // Transfers name the head's own address; rewrite it so the
        // comparison is head-agnostic.
        for (sim::Transfer& t : h.transfers) {
            if (t.from == head) t.from = Address{};
            if (t.to == head) t.to = Address{};
        }
        outcomes.push_back(std::move(h));
    }

    for (std::size_t i = 1; i < outcomes.size(); ++i) {
        if (!(outcomes[i] == outcomes[0])) {
            ValidatorVerdict v;
            v.pass = false;
            v.detail = "head " + std::to_string(i) + " (" + heads[i].hex() +
                       ") diverged: " + describe(outcomes[i]) + " vs head 0: " +
                       describe(outcomes[0]);
            v.elapsed_us = elapsed_us(t0);
            return v;
        }
    }
    return {true, "uniform across " + std::to_string(heads.size()) + " heads",
            elapsed_us(t0)};
}

ValidatorVerdict ecf_check(const SimulatedCall& call, const sim::Simulator& snapshot) {
    auto t0 = Clock::now();
    if (!snapshot.has_contract(call.contract))
        throw std::invalid_argument("ecf_check target is not registered");

    sim::Simulator isolated = snapshot;
    isolated.set_guard_enforcement(false);
    sim::Simulator::SimOutcome out =
        isolated.simulate_call(call.caller, call.contract, call.method, call.args, call.value);

    if (out.reentrancy)
        return {false, "re-entrancy: " + *out.reentrancy, elapsed_us(t0)};
    if (!out.result.ok)
        return {false, "execution trap: " + out.result.revert_reason, elapsed_us(t0)};
    return {true, "callback-free", elapsed_us(t0)};
}

}  // namespace smacs::validators
