#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bitmap.hpp"
#include "crypto.hpp"
#include "token.hpp"

namespace smacs::sim {

enum class Visibility { External, Public, Internal, Private };

bool externally_callable(Visibility v);

/// Abstract per-transaction operation counts standing in for gas accounting.
/// guard_ops weights verification work so chain-depth scaling can be checked:
/// a signature verification dominates, a bitmap update and array parsing are
/// minor, mirroring the relative on-chain costs.
struct CostMeter {
    std::uint64_t sig_verifies = 0;
    std::uint64_t storage_writes = 0;
    std::uint64_t bytes_parsed = 0;
    std::uint64_t guard_ops = 0;

    static constexpr std::uint64_t kSigVerifyOps = 1000;
    static constexpr std::uint64_t kBitmapOps = 85;
    static constexpr std::uint64_t kParseBytesPerOp = 16;
};

struct Transfer {
    Address from;
    Address to;
    std::uint64_t value = 0;
    bool operator==(const Transfer&) const = default;
};

struct TraceFrame {
    int depth = 0;
    Address contract;
    std::string method;
    Address msg_sender;
    std::string display;  // "<Label>.<method>"
};

struct Transaction {
    Address origin;
    std::uint64_t nonce = 0;
    Address target;
    MethodId method;
    bytes calldata;  // encoded args; msg.data = method || calldata
    std::uint64_t value = 0;
    bytes token_array;
    crypto::Signature signature{};
};

/// Canonical byte string covered by the transaction signature.
bytes transaction_signing_bytes(const Transaction& tx);
Transaction make_signed_transaction(const crypto::KeyPair& origin_key, Address origin,
                                    std::uint64_t nonce, Address target,
                                    const std::string& method_name,
                                    const std::vector<ArgPair>& args, std::uint64_t value,
                                    bytes token_array);

struct Receipt {
    enum class Status { Ok, BadSignature, NonceUsed, UnknownContract, Reverted };
    Status status = Status::Ok;
    std::string revert_reason;
    bytes return_value;
    std::vector<TraceFrame> trace;
    std::vector<Transfer> transfers;
    CostMeter cost;

    bool ok() const { return status == Status::Ok; }
};

std::string receipt_status_name(Receipt::Status s);

class CallEnv;
using Handler = std::function<bytes(CallEnv&)>;

struct MethodDef {
    std::string name;
    Visibility vis = Visibility::Public;
    bool payable = false;
    Handler handler;
};

struct GuardSpec {
    bytes pk_ts;
    std::size_t bitmap_bits = 64;
};

struct SmacsGuard {
    bytes pk_ts;
    Bitmap bitmap;
};

struct ContractInstance {
    Address address;
    std::string fixture;
    std::string label;
    std::map<std::string, std::string> init;
    std::map<MethodId, MethodDef> methods;
    std::optional<MethodDef> fallback;
    std::map<std::string, std::string> storage;
    std::optional<SmacsGuard> guard;

    const MethodDef* method_by_name(const std::string& name) const;
};

struct Account {
    bytes pk;
    std::uint64_t balance = 0;
    std::uint64_t nonce = 0;
};

struct CallResult {
    bool ok = false;
    std::string revert_reason;
    bytes ret;
};

/// Everything the contract-side guard reads from the transaction context.
struct GuardContext {
    Address self;
    Address origin;
    MethodId msg_sig;
    bytes msg_data;
    std::uint32_t now = 0;
};

/// Contract-side token verification. Extracts this contract's token from the
/// array, rejects expired tokens and reused or missed one-time indexes (the
/// bitmap is marked here; transaction revert restores it), reconstructs the
/// request payload from the execution context, and checks the service
/// signature over it. All failures surface as false.
bool verify_token_onchain(const GuardContext& ctx, SmacsGuard& guard,
                          std::span<const byte> token_array, CostMeter& cost);

class Simulator;
struct ExecState;

/// Handler-facing view of one message-call frame.
class CallEnv {
public:
    const Address& self() const;
    const Address& origin() const;
    const Address& msg_sender() const;
    const MethodId& msg_sig() const;
    const bytes& msg_data() const;
    std::uint64_t msg_value() const;
    int depth() const;

    const std::vector<ArgPair>& args() const;
    std::string arg(const std::string& name) const;  // traps when absent
    std::uint64_t arg_u64(const std::string& name) const;

    std::string storage_get(const std::string& key) const;
    std::uint64_t storage_u64(const std::string& key) const;
    void storage_set(const std::string& key, const std::string& value);
    void storage_set_u64(const std::string& key, std::uint64_t value);

    std::uint64_t balance(const Address& a) const;

    /// Message call; failures are contained (state of the subcall is rolled
    /// back) and reported in the result, as with low-level calls.
    CallResult call(const Address& target, const std::string& method,
                    const std::vector<ArgPair>& args, std::uint64_t value);
    /// Plain value transfer; invokes the receiver's fallback when the
    /// receiver is a contract.
    CallResult send(const Address& to, std::uint64_t value);
    /// Same-contract call that bypasses dispatch, visibility and the guard.
    bytes call_internal(const std::string& method, const std::vector<ArgPair>& args);

    [[noreturn]] void trap(const std::string& reason);

    CallEnv(Simulator& sim, ExecState& exec, ContractInstance& contract, Address msg_sender,
            MethodId msg_sig, bytes msg_data, std::uint64_t msg_value, int depth);

private:
    Simulator& sim_;
    ExecState& exec_;
    ContractInstance& contract_;
    Address msg_sender_;
    MethodId msg_sig_;
    bytes msg_data_;
    std::uint64_t msg_value_;
    int depth_;
    std::vector<ArgPair> args_;
};

/// Deterministic single-chain simulator: one transaction per block, instant
/// finality, logical clock. Copying the object snapshots the whole chain.
class Simulator {
public:
    Simulator() = default;

    Address create_account(const bytes& pk, std::uint64_t balance);
    Address register_contract(const std::string& fixture,
                              std::map<std::string, std::string> init = {},
                              std::optional<GuardSpec> guard = std::nullopt,
                              std::string label = "");

    bool has_contract(const Address& a) const { return contracts_.count(a) > 0; }
    const ContractInstance& contract(const Address& a) const;
    ContractInstance& contract_mutable(const Address& a);
    std::optional<Address> contract_by_label(const std::string& label) const;

    std::uint32_t now() const { return clock_; }
    void set_time(std::uint32_t t);  // ClockRegression when moving backwards
    std::uint64_t height() const { return height_; }
    std::uint64_t balance(const Address& a) const;
    std::uint64_t nonce(const Address& a) const;
    std::uint64_t total_value() const;

    Receipt submit_transaction(const Transaction& tx);

    struct SimOutcome {
        CallResult result;
        std::vector<TraceFrame> trace;
        std::vector<Transfer> transfers;
        std::optional<std::string> reentrancy;  // re-entrant chain, when seen
        CostMeter cost;
    };
    /// Direct call entry used by validator runs and fixtures wiring; no
    /// signature, nonce or block. Failed calls leave the state untouched.
    SimOutcome simulate_call(const Address& caller, const Address& target,
                             const MethodId& method, const std::vector<ArgPair>& args,
                             std::uint64_t value);

    void set_guard_enforcement(bool on) { guards_enforced_ = on; }
    bool guards_enforced() const { return guards_enforced_; }
    void set_step_limit(std::uint64_t n) { step_limit_ = n; }
    void set_depth_limit(int n) { depth_limit_ = n; }

    std::string dump_json() const;
    static Simulator from_json(const std::string& text);
    bytes state_digest() const;
    /// Digest of one contract's storage, for output comparisons.
    std::string storage_digest_hex(const Address& a) const;

private:
    friend class CallEnv;

    struct MutableState {
        std::map<Address, Account> accounts;
        std::map<Address, std::map<std::string, std::string>> storages;
        std::map<Address, std::optional<SmacsGuard>> guards;
    };
    MutableState capture() const;
    void restore(const MutableState& s);

    bytes message_call(ExecState& exec, Address sender, Address target, MethodId selector,
                       const bytes& arg_bytes, std::uint64_t value, int depth,
                       bool fallback_entry);

    std::map<Address, Account> accounts_;
    std::map<Address, ContractInstance> contracts_;
    std::uint32_t clock_ = 0;
    std::uint64_t height_ = 0;
    std::uint64_t contract_seq_ = 0;
    bool guards_enforced_ = true;
    std::uint64_t step_limit_ = 1'000'000;
    int depth_limit_ = 64;
};

/// Registers the vulnerable Bank and its Attacker, wired together; the bank
/// optionally carries a guard.
struct BankAttackerAddrs {
    Address bank;
    Address attacker;
};
BankAttackerAddrs bank_attacker_fixture(Simulator& sim,
                                        std::optional<GuardSpec> bank_guard = std::nullopt);

/// Builders for the built-in contract fixtures, keyed by name.
const std::vector<std::string>& fixture_names();
bool is_known_fixture(const std::string& name);

}  // namespace smacs::sim
