#include "chain_sim.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"

namespace smacs::sim {

using nlohmann::json;

bool externally_callable(Visibility v) {
    return v == Visibility::External || v == Visibility::Public;
}

namespace {

struct TrapError {
    std::string reason;
};

constexpr MethodId kFallbackSelector{};  // all-zero: plain value transfer

}  // namespace

/// Per-transaction execution bookkeeping shared by all frames.
struct ExecState {
    Address origin;
    bytes token_array;
    std::vector<TraceFrame> trace;
    std::vector<Transfer> transfers;
    std::vector<Address> live_stack;  // message frames, for re-entry detection
    std::vector<std::string> live_display;
    std::optional<std::string> reentrancy;
    CostMeter cost;
    std::uint64_t steps = 0;
};

bytes transaction_signing_bytes(const Transaction& tx) {
    bytes out;
    const char* tag = "smacs-tx-v1";
    out.insert(out.end(), tag, tag + 11);
    out.insert(out.end(), tx.origin.v.begin(), tx.origin.v.end());
    put_be32(out, static_cast<std::uint32_t>(tx.nonce >> 32));
    put_be32(out, static_cast<std::uint32_t>(tx.nonce));
    out.insert(out.end(), tx.target.v.begin(), tx.target.v.end());
    out.insert(out.end(), tx.method.v.begin(), tx.method.v.end());
    put_be32(out, static_cast<std::uint32_t>(tx.calldata.size()));
    out.insert(out.end(), tx.calldata.begin(), tx.calldata.end());
    put_be32(out, static_cast<std::uint32_t>(tx.value >> 32));
    put_be32(out, static_cast<std::uint32_t>(tx.value));
    put_be32(out, static_cast<std::uint32_t>(tx.token_array.size()));
    out.insert(out.end(), tx.token_array.begin(), tx.token_array.end());
    return out;
}

Transaction make_signed_transaction(const crypto::KeyPair& origin_key, Address origin,
                                    std::uint64_t nonce, Address target,
                                    const std::string& method_name,
                                    const std::vector<ArgPair>& args, std::uint64_t value,
                                    bytes token_array) {
    Transaction tx;
    tx.origin = origin;
    tx.nonce = nonce;
    tx.target = target;
    tx.method = MethodId::of(method_name);
    tx.calldata = encode_args(args);
    tx.value = value;
    tx.token_array = std::move(token_array);
    tx.signature = crypto::Signer(origin_key).sign(transaction_signing_bytes(tx));
    return tx;
}

std::string receipt_status_name(Receipt::Status s) {
    switch (s) {
        case Receipt::Status::Ok: return "ok";
        case Receipt::Status::BadSignature: return "bad_signature";
        case Receipt::Status::NonceUsed: return "nonce_used";
        case Receipt::Status::UnknownContract: return "unknown_contract";
        case Receipt::Status::Reverted: return "reverted";
    }
    return "?";
}

const MethodDef* ContractInstance::method_by_name(const std::string& name) const {
    for (const auto& [id, def] : methods)
        if (def.name == name) return &def;
    return nullptr;
}

bool verify_token_onchain(const GuardContext& ctx, SmacsGuard& guard,
                          std::span<const byte> token_array, CostMeter& cost) {
    cost.bytes_parsed += token_array.size();
    cost.guard_ops += token_array.size() / CostMeter::kParseBytesPerOp;

    Token tk;
    try {
        tk = extract_token(token_array, ctx.self);
    } catch (const Error&) {
        return false;
    }

    if (ctx.now > tk.expire) return false;

    if (tk.index >= 0) {
        cost.guard_ops += CostMeter::kBitmapOps;
        if (static_cast<u128>(tk.index) > std::numeric_limits<std::uint64_t>::max())
            return false;
        cost.storage_writes += 1;
        if (!guard.bitmap.check_and_mark(static_cast<std::uint64_t>(tk.index))) return false;
    }

    TokenRequest req;
    req.type = tk.type;
    req.contract = ctx.self;
    req.sender = ctx.origin;
    if (tk.type != TokenType::Super) req.method = ctx.msg_sig;
    if (tk.type == TokenType::Argument) {
        if (ctx.msg_data.size() < 4) return false;
        try {
            req.args = decode_args(std::span(ctx.msg_data).subspan(4));
        } catch (const Error&) {
            return false;
        }
    }

    bytes payload;
    try {
        payload = signing_payload(tk.type, tk.expire, tk.index, encode_req_payload(req));
    } catch (const Error&) {
        return false;  // context does not form a well-shaped request
    }

    cost.sig_verifies += 1;
    cost.guard_ops += CostMeter::kSigVerifyOps;
    return crypto::verify(guard.pk_ts, payload, tk.signature);
}

// ---------------------------------------------------------------------------
// CallEnv

CallEnv::CallEnv(Simulator& sim, ExecState& exec, ContractInstance& contract,
                 Address msg_sender, MethodId msg_sig, bytes msg_data,
                 std::uint64_t msg_value, int depth)
    : sim_(sim),
      exec_(exec),
      contract_(contract),
      msg_sender_(msg_sender),
      msg_sig_(msg_sig),
      msg_data_(std::move(msg_data)),
      msg_value_(msg_value),
      depth_(depth) {
    if (msg_data_.size() > 4) args_ = decode_args(std::span(msg_data_).subspan(4));
}

const Address& CallEnv::self() const { return contract_.address; }
const Address& CallEnv::origin() const { return exec_.origin; }
const Address& CallEnv::msg_sender() const { return msg_sender_; }
const MethodId& CallEnv::msg_sig() const { return msg_sig_; }
const bytes& CallEnv::msg_data() const { return msg_data_; }
std::uint64_t CallEnv::msg_value() const { return msg_value_; }
int CallEnv::depth() const { return depth_; }
const std::vector<ArgPair>& CallEnv::args() const { return args_; }

std::string CallEnv::arg(const std::string& name) const {
    for (const ArgPair& a : args_)
        if (a.name == name) return a.value;
    throw TrapError{"missing argument: " + name};
}

std::uint64_t CallEnv::arg_u64(const std::string& name) const {
    std::string v = arg(name);
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw TrapError{"argument " + name + " is not a number"};
    }
}

std::string CallEnv::storage_get(const std::string& key) const {
    auto it = contract_.storage.find(key);
    return it == contract_.storage.end() ? std::string() : it->second;
}

std::uint64_t CallEnv::storage_u64(const std::string& key) const {
    std::string v = storage_get(key);
    return v.empty() ? 0 : std::stoull(v);
}

void CallEnv::storage_set(const std::string& key, const std::string& value) {
    exec_.cost.storage_writes += 1;
    exec_.steps += 1;
    contract_.storage[key] = value;
}

void CallEnv::storage_set_u64(const std::string& key, std::uint64_t value) {
    storage_set(key, std::to_string(value));
}

std::uint64_t CallEnv::balance(const Address& a) const { return sim_.balance(a); }

CallResult CallEnv::call(const Address& target, const std::string& method,
                         const std::vector<ArgPair>& args, std::uint64_t value) {
    Simulator::MutableState snap = sim_.capture();
    std::size_t transfers_mark = exec_.transfers.size();
    std::size_t live_mark = exec_.live_stack.size();
    try {
        bytes ret = sim_.message_call(exec_, contract_.address, target, MethodId::of(method),
                                      encode_args(args), value, depth_ + 1, false);
        return {true, "", std::move(ret)};
    } catch (const TrapError& t) {
        sim_.restore(snap);
        exec_.transfers.resize(transfers_mark);
        exec_.live_stack.resize(live_mark);
        exec_.live_display.resize(live_mark);
        return {false, t.reason, {}};
    }
}

CallResult CallEnv::send(const Address& to, std::uint64_t value) {
    if (sim_.has_contract(to)) {
        Simulator::MutableState snap = sim_.capture();
        std::size_t transfers_mark = exec_.transfers.size();
        std::size_t live_mark = exec_.live_stack.size();
        try {
            sim_.message_call(exec_, contract_.address, to, kFallbackSelector, {}, value,
                              depth_ + 1, true);
            return {true, "", {}};
        } catch (const TrapError& t) {
            sim_.restore(snap);
            exec_.transfers.resize(transfers_mark);
            exec_.live_stack.resize(live_mark);
            exec_.live_display.resize(live_mark);
            return {false, t.reason, {}};
        }
    }
    Account& from = sim_.accounts_[contract_.address];
    if (from.balance < value) return {false, "insufficient balance", {}};
    from.balance -= value;
    sim_.accounts_[to].balance += value;
    exec_.transfers.push_back({contract_.address, to, value});
    exec_.steps += 1;
    return {true, "", {}};
}

bytes CallEnv::call_internal(const std::string& method, const std::vector<ArgPair>& args) {
    const MethodDef* def = contract_.method_by_name(method);
    if (!def) throw TrapError{"no such method: " + method};
    bytes data(def->handler ? 0 : 0);
    bytes msg_data;
    MethodId id = MethodId::of(method);
    msg_data.insert(msg_data.end(), id.v.begin(), id.v.end());
    bytes arg_bytes = encode_args(args);
    msg_data.insert(msg_data.end(), arg_bytes.begin(), arg_bytes.end());
    // Internal execution keeps the caller frame's message context.
    CallEnv inner(sim_, exec_, contract_, msg_sender_, msg_sig_, std::move(msg_data),
                  msg_value_, depth_);
    inner.args_ = args;
    return def->handler(inner);
}

void CallEnv::trap(const std::string& reason) { throw TrapError{reason}; }

// ---------------------------------------------------------------------------
// Simulator

Address Simulator::create_account(const bytes& pk, std::uint64_t balance) {
    bytes material;
    const char* tag = "account:";
    material.insert(material.end(), tag, tag + 8);
    material.insert(material.end(), pk.begin(), pk.end());
    bytes digest = crypto::sha256(material);
    Address a = Address::from_bytes(std::span(digest).first(20));
    accounts_[a] = Account{pk, balance, 0};
    return a;
}

Address Simulator::register_contract(const std::string& fixture,
                                     std::map<std::string, std::string> init,
                                     std::optional<GuardSpec> guard, std::string label) {
    std::string material =
        "contract:" + fixture + ":" + std::to_string(contract_seq_++);
    bytes digest = crypto::sha256(bytes(material.begin(), material.end()));
    Address a = Address::from_bytes(std::span(digest).first(20));

    ContractInstance inst;
    inst.address = a;
    inst.fixture = fixture;
    inst.label = label.empty() ? fixture : std::move(label);
    inst.init = std::move(init);
    build_fixture(fixture, inst);  // unknown fixture throws
    // Constructor parameters become the initial storage; reloads restore
    // storage explicitly instead.
    for (const auto& [k, v] : inst.init) inst.storage[k] = v;
    if (guard) inst.guard = SmacsGuard{guard->pk_ts, Bitmap(guard->bitmap_bits)};
    accounts_[a];  // contract account with zero balance
    contracts_.emplace(a, std::move(inst));
    return a;
}

const ContractInstance& Simulator::contract(const Address& a) const {
    auto it = contracts_.find(a);
    if (it == contracts_.end()) throw Error("UnknownContract", a.hex());
    return it->second;
}

ContractInstance& Simulator::contract_mutable(const Address& a) {
    auto it = contracts_.find(a);
    if (it == contracts_.end()) throw Error("UnknownContract", a.hex());
    return it->second;
}

std::optional<Address> Simulator::contract_by_label(const std::string& label) const {
    for (const auto& [addr, inst] : contracts_)
        if (inst.label == label) return addr;
    return std::nullopt;
}

void Simulator::set_time(std::uint32_t t) {
    if (t < clock_) throw Error("ClockRegression", "logical clock only moves forward");
    clock_ = t;
}

std::uint64_t Simulator::balance(const Address& a) const {
    auto it = accounts_.find(a);
    return it == accounts_.end() ? 0 : it->second.balance;
}

std::uint64_t Simulator::nonce(const Address& a) const {
    auto it = accounts_.find(a);
    return it == accounts_.end() ? 0 : it->second.nonce;
}

std::uint64_t Simulator::total_value() const {
    std::uint64_t sum = 0;
    for (const auto& [a, acct] : accounts_) sum += acct.balance;
    return sum;
}

Simulator::MutableState Simulator::capture() const {
    MutableState s;
    s.accounts = accounts_;
    for (const auto& [a, c] : contracts_) {
        s.storages[a] = c.storage;
        s.guards[a] = c.guard;
    }
    return s;
}

void Simulator::restore(const MutableState& s) {
    accounts_ = s.accounts;
    for (auto& [a, c] : contracts_) {
        c.storage = s.storages.at(a);
        c.guard = s.guards.at(a);
    }
}

bytes Simulator::message_call(ExecState& exec, Address sender, Address target,
                              MethodId selector, const bytes& arg_bytes, std::uint64_t value,
                              int depth, bool fallback_entry) {
    if (depth > depth_limit_) throw TrapError{"max call depth exceeded"};
    if (++exec.steps > step_limit_) throw TrapError{"step limit exceeded"};

    auto cit = contracts_.find(target);
    if (cit == contracts_.end()) throw TrapError{"unknown contract " + target.hex()};
    ContractInstance& contract = cit->second;

    const MethodDef* def = nullptr;
    if (!fallback_entry) {
        auto mit = contract.methods.find(selector);
        if (mit != contract.methods.end()) {
            def = &mit->second;
            if (!externally_callable(def->vis))
                throw TrapError{def->name + " is not externally callable"};
        }
    }
    if (!def) {
        if (!contract.fallback) throw TrapError{"no matching method and no fallback"};
        def = &*contract.fallback;
    }
    if (value > 0 && !def->payable) throw TrapError{def->name + " is not payable"};

    bool is_fallback = fallback_entry || (contract.fallback && def == &*contract.fallback);
    std::string display = contract.label + "." + (is_fallback ? "fallback" : def->name);

    bytes msg_data;
    if (!fallback_entry) {
        msg_data.insert(msg_data.end(), selector.v.begin(), selector.v.end());
        msg_data.insert(msg_data.end(), arg_bytes.begin(), arg_bytes.end());
    }

    // Re-entering a contract with a live frame is the re-entrancy signature.
    // Plain value receipt (a fallback entry) is how contracts accept funds;
    // only method entries count as the re-entering edge.
    if (!exec.reentrancy && !is_fallback) {
        auto live = std::find(exec.live_stack.begin(), exec.live_stack.end(), target);
        if (live != exec.live_stack.end()) {
            std::size_t first = static_cast<std::size_t>(live - exec.live_stack.begin());
            std::string chain = exec.live_display[first];
            for (std::size_t i = first + 1; i < exec.live_display.size(); ++i)
                chain += " -> " + exec.live_display[i];
            exec.reentrancy = chain + " -> " + display;
        }
    }

    if (guards_enforced_ && contract.guard) {
        GuardContext gctx{contract.address, exec.origin,
                          fallback_entry ? kFallbackSelector : selector, msg_data, clock_};
        if (!verify_token_onchain(gctx, *contract.guard, exec.token_array, exec.cost))
            throw TrapError{"token"};
    }

    if (value > 0) {
        Account& from = accounts_[sender];
        if (from.balance < value) throw TrapError{"insufficient balance"};
        from.balance -= value;
        accounts_[target].balance += value;
        exec.transfers.push_back({sender, target, value});
    }

    exec.trace.push_back(
        {depth, target, is_fallback ? "fallback" : def->name, sender, display});
    exec.live_stack.push_back(target);
    exec.live_display.push_back(display);
    bytes ret;
    try {
        CallEnv env(*this, exec, contract, sender, fallback_entry ? kFallbackSelector : selector,
                    std::move(msg_data), value, depth);
        ret = def->handler(env);
    } catch (const TrapError&) {
        exec.live_stack.pop_back();
        exec.live_display.pop_back();
        throw;
    } catch (const std::exception& e) {
        // Handler bugs surface as reverts, never as simulator crashes.
        exec.live_stack.pop_back();
        exec.live_display.pop_back();
        throw TrapError{e.what()};
    }
    exec.live_stack.pop_back();
    exec.live_display.pop_back();
    return ret;
}

Receipt Simulator::submit_transaction(const Transaction& tx) {
    Receipt receipt;

    if (!contracts_.count(tx.target)) {
        receipt.status = Receipt::Status::UnknownContract;
        receipt.revert_reason = "unknown contract " + tx.target.hex();
        return receipt;
    }
    auto ait = accounts_.find(tx.origin);
    if (ait == accounts_.end() || ait->second.pk.empty() ||
        !crypto::verify(ait->second.pk, transaction_signing_bytes(tx), tx.signature)) {
        receipt.status = Receipt::Status::BadSignature;
        receipt.revert_reason = "transaction signature does not verify";
        return receipt;
    }
    if (tx.nonce != ait->second.nonce) {
        receipt.status = Receipt::Status::NonceUsed;
        receipt.revert_reason = "nonce " + std::to_string(tx.nonce) + " already used";
        return receipt;
    }

    MutableState snap = capture();
    ait->second.nonce += 1;  // survives revert
    height_ += 1;

    ExecState exec;
    exec.origin = tx.origin;
    exec.token_array = tx.token_array;

    bytes msg_data;
    msg_data.insert(msg_data.end(), tx.method.v.begin(), tx.method.v.end());
    msg_data.insert(msg_data.end(), tx.calldata.begin(), tx.calldata.end());
    try {
        receipt.return_value =
            message_call(exec, tx.origin, tx.target, tx.method, tx.calldata, tx.value, 0, false);
        receipt.status = Receipt::Status::Ok;
    } catch (const TrapError& t) {
        std::uint64_t advanced = accounts_.at(tx.origin).nonce;
        restore(snap);
        accounts_[tx.origin].nonce = advanced;
        receipt.status = Receipt::Status::Reverted;
        receipt.revert_reason = t.reason;
    }
    receipt.trace = std::move(exec.trace);
    receipt.transfers = std::move(exec.transfers);
    receipt.cost = exec.cost;
    return receipt;
}

Simulator::SimOutcome Simulator::simulate_call(const Address& caller, const Address& target,
                                               const MethodId& method,
                                               const std::vector<ArgPair>& args,
                                               std::uint64_t value) {
    SimOutcome out;
    ExecState exec;
    exec.origin = caller;

    MutableState snap = capture();
    bytes arg_bytes = encode_args(args);
    // Resolve the method name so dispatch matches transaction calls.
    try {
        bytes ret = message_call(exec, caller, target, method, arg_bytes, value, 0, false);
        out.result = {true, "", std::move(ret)};
    } catch (const TrapError& t) {
        restore(snap);
        out.result = {false, t.reason, {}};
    }
    out.trace = std::move(exec.trace);
    out.transfers = std::move(exec.transfers);
    out.reentrancy = std::move(exec.reentrancy);
    out.cost = exec.cost;
    return out;
}

std::string Simulator::storage_digest_hex(const Address& a) const {
    const ContractInstance& c = contract(a);
    bytes material;
    for (const auto& [k, v] : c.storage) {
        put_be32(material, static_cast<std::uint32_t>(k.size()));
        material.insert(material.end(), k.begin(), k.end());
        put_be32(material, static_cast<std::uint32_t>(v.size()));
        material.insert(material.end(), v.begin(), v.end());
    }
    return to_hex(crypto::sha256(material));
}

std::string Simulator::dump_json() const {
    json doc;
    doc["height"] = height_;
    doc["clock"] = clock_;
    doc["contract_seq"] = contract_seq_;
    json accounts = json::object();
    for (const auto& [a, acct] : accounts_) {
        json entry;
        entry["pk"] = to_hex(acct.pk);
        entry["balance"] = acct.balance;
        entry["nonce"] = acct.nonce;
        accounts[a.hex()] = entry;
    }
    doc["accounts"] = accounts;
    json contracts = json::object();
    for (const auto& [a, c] : contracts_) {
        json entry;
        entry["fixture"] = c.fixture;
        entry["label"] = c.label;
        entry["init"] = c.init;
        json storage = json::object();
        for (const auto& [k, v] : c.storage) {
            bytes kb(k.begin(), k.end()), vb(v.begin(), v.end());
            storage[to_hex(kb)] = to_hex(vb);
        }
        entry["storage"] = storage;
        if (c.guard) {
            json g;
            g["pk"] = to_hex(c.guard->pk_ts);
            g["bits"] = c.guard->bitmap.size();
            g["bitmap"] = c.guard->bitmap.bits_hex();
            g["start"] = c.guard->bitmap.start();
            g["start_ptr"] = c.guard->bitmap.start_ptr();
            entry["guard"] = g;
        } else {
            entry["guard"] = nullptr;
        }
        contracts[a.hex()] = entry;
    }
    doc["contracts"] = contracts;
    return doc.dump(2);
}

Simulator Simulator::from_json(const std::string& text) {
    json doc = json::parse(text);
    Simulator sim;
    sim.height_ = doc.at("height").get<std::uint64_t>();
    sim.clock_ = doc.at("clock").get<std::uint32_t>();
    sim.contract_seq_ = doc.at("contract_seq").get<std::uint64_t>();
    for (const auto& [hex, entry] : doc.at("accounts").items()) {
        Account acct;
        acct.pk = from_hex(entry.at("pk").get<std::string>());
        acct.balance = entry.at("balance").get<std::uint64_t>();
        acct.nonce = entry.at("nonce").get<std::uint64_t>();
        sim.accounts_[Address::from_hex(hex)] = acct;
    }
    for (const auto& [hex, entry] : doc.at("contracts").items()) {
        ContractInstance inst;
        inst.address = Address::from_hex(hex);
        inst.fixture = entry.at("fixture").get<std::string>();
        inst.label = entry.at("label").get<std::string>();
        inst.init = entry.at("init").get<std::map<std::string, std::string>>();
        build_fixture(inst.fixture, inst);
        for (const auto& [k, v] : entry.at("storage").items()) {
            bytes kb = from_hex(k), vb = from_hex(v.get<std::string>());
            inst.storage[std::string(kb.begin(), kb.end())] =
                std::string(vb.begin(), vb.end());
        }
        if (!entry.at("guard").is_null()) {
            const json& g = entry.at("guard");
            SmacsGuard guard{from_hex(g.at("pk").get<std::string>()),
                             Bitmap::restore(g.at("bits").get<std::size_t>(),
                                             g.at("bitmap").get<std::string>(),
                                             g.at("start").get<std::uint64_t>(),
                                             g.at("start_ptr").get<std::size_t>())};
            inst.guard = std::move(guard);
        }
        sim.contracts_.emplace(inst.address, std::move(inst));
    }
    return sim;
}

bytes Simulator::state_digest() const {
    std::string dump = dump_json();
    return crypto::sha256(bytes(dump.begin(), dump.end()));
}

BankAttackerAddrs bank_attacker_fixture(Simulator& sim, std::optional<GuardSpec> bank_guard) {
    Address bank = sim.register_contract("bank", {}, bank_guard, "Bank");
    Address attacker =
        sim.register_contract("attacker", {{"bank", bank.hex()}, {"is_attack", "1"}},
                              std::nullopt, "Attacker");
    return {bank, attacker};
}

}  // namespace smacs::sim
