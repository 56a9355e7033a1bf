#include <doctest.h>

#include <random>

#include "rules.hpp"

using namespace smacs;
using namespace smacs::rules;

namespace {

Address addr_of(byte fill) {
    Address a;
    a.v.fill(fill);
    return a;
}

const char* kListDocument = R"({
  "sender": {
    "whitelist": ["0x366c000000000000000000000000000000000001",
                  "0xd488000000000000000000000000000000000002"]
  },
  "method": {
    "methodA": {
      "blacklist": ["0xBA7F000000000000000000000000000000000003"]
    }
  },
  "argument": {
    "argA": {
      "whitelist": ["0x3540000000000000000000000000000000000004"]
    }
  }
})";

TokenRequest super_from(const Address& sender) {
    return {TokenType::Super, addr_of(0xcc), sender, std::nullopt, {}};
}

}  // namespace

TEST_CASE("the whitelist/blacklist document loads into three scopes") {
    RuleSet rs = load_rules(kListDocument);
    REQUIRE(rs.sender.has_value());
    CHECK(rs.sender->mode == ListMode::Whitelist);
    CHECK(rs.sender->entries.size() == 2);
    REQUIRE(rs.method.count("methodA"));
    CHECK(rs.method.at("methodA").mode == ListMode::Blacklist);
    // Address entries canonicalize to lowercase.
    CHECK(rs.method.at("methodA").entries.count(
        "0xba7f000000000000000000000000000000000003"));
    REQUIRE(rs.argument.count("argA"));
    CHECK(rs.validators.empty());

    // Round trip through the dump format.
    RuleSet reloaded = load_rules(dump_rules(rs));
    CHECK(reloaded == rs);
}

TEST_CASE("document validation rejects malformed rule shapes") {
    CHECK_THROWS_WITH_AS(load_rules("not json"), doctest::Contains("ParseError"), Error);
    CHECK_THROWS_WITH_AS(load_rules(R"({"surprise": {}})"),
                         doctest::Contains("ParseError"), Error);
    CHECK_THROWS_WITH_AS(
        load_rules(R"({"sender": {"whitelist": ["0x11"], "blacklist": ["0x22"]}})"),
        doctest::Contains("BothListsInOneScope"), Error);
    CHECK_THROWS_WITH_AS(load_rules(R"({"sender": {}})"), doctest::Contains("ParseError"),
                         Error);
    CHECK_THROWS_WITH_AS(load_rules(R"({"validators": ["sereum"]})"),
                         doctest::Contains("UnknownValidator"), Error);
    CHECK_THROWS_WITH_AS(load_rules(R"({"sender": {"whitelist": ["366c"]}})"),
                         doctest::Contains("ParseError"), Error);  // missing 0x
    CHECK_NOTHROW(load_rules(R"({"validators": ["nversion", "ecf"]})"));
}

TEST_CASE("an empty document denies every request") {
    RuleSet rs = load_rules("{}");
    Decision d = evaluate(super_from(addr_of(1)), "", rs);
    CHECK_FALSE(d.allow);
    CHECK(d.reason == "sender");

    TokenRequest method_req{TokenType::Method, addr_of(2), addr_of(1), MethodId::of("f"), {}};
    CHECK_FALSE(evaluate(method_req, "f", rs).allow);
    TokenRequest arg_req{TokenType::Argument, addr_of(2), addr_of(1), MethodId::of("f"),
                         {{"argA", "v"}}};
    CHECK_FALSE(evaluate(arg_req, "f", rs).allow);
}

TEST_CASE("evaluation walks sender, method, then argument scopes") {
    RuleSet rs = load_rules(kListDocument);
    Address listed = Address::from_hex("0x366c000000000000000000000000000000000001");
    Address blacklisted = Address::from_hex("0xba7f000000000000000000000000000000000003");
    Address stranger = addr_of(0x99);

    CHECK(evaluate(super_from(listed), "", rs).allow);
    CHECK(evaluate(super_from(listed), "", rs).reason == "ok");
    CHECK_FALSE(evaluate(super_from(stranger), "", rs).allow);
    CHECK(evaluate(super_from(stranger), "", rs).reason == "sender.whitelist");

    // methodA blacklist blocks a blacklisted sender... but only after the
    // sender scope has passed, so list it in the sender whitelist first.
    RuleSet rs2 = update_rules(rs, UpdateOp::Add, "sender.whitelist", blacklisted.hex());
    TokenRequest bad_method{TokenType::Method, addr_of(0xcc), blacklisted,
                            MethodId::of("methodA"), {}};
    Decision d = evaluate(bad_method, "methodA", rs2);
    CHECK_FALSE(d.allow);
    CHECK(d.reason == "method.methodA.blacklist");

    TokenRequest ok_method{TokenType::Method, addr_of(0xcc), listed, MethodId::of("methodA"),
                           {}};
    CHECK(evaluate(ok_method, "methodA", rs2).allow);

    // Method without a scope entry: default deny.
    CHECK_FALSE(evaluate(ok_method, "unknownMethod", rs2).allow);
    CHECK(evaluate(ok_method, "unknownMethod", rs2).reason == "method.unknownMethod");

    // Argument value outside its whitelist.
    TokenRequest arg_bad{TokenType::Argument, addr_of(0xcc), listed, MethodId::of("methodA"),
                         {{"argA", "0xffff"}}};
    d = evaluate(arg_bad, "methodA", rs2);
    CHECK_FALSE(d.allow);
    CHECK(d.reason == "argument.argA.whitelist");

    TokenRequest arg_ok{TokenType::Argument, addr_of(0xcc), listed, MethodId::of("methodA"),
                        {{"argA", "0x3540000000000000000000000000000000000004"}}};
    CHECK(evaluate(arg_ok, "methodA", rs2).allow);

    // Arguments without any scope are denied, naming the scope only.
    TokenRequest arg_unknown{TokenType::Argument, addr_of(0xcc), listed,
                             MethodId::of("methodA"), {{"argZ", "1"}}};
    CHECK(evaluate(arg_unknown, "methodA", rs2).reason == "argument.argZ");
}

TEST_CASE("updates create versions and behave like set membership") {
    RuleSet rs = load_rules("{}");
    CHECK(rs.version == 0);
    Address x = addr_of(0x42);

    RuleSet v1 = update_rules(rs, UpdateOp::Add, "sender.whitelist", x.hex());
    CHECK(v1.version == 1);
    CHECK(evaluate(super_from(x), "", v1).allow);

    RuleSet v2 = update_rules(v1, UpdateOp::Remove, "sender.whitelist", x.hex());
    CHECK(v2.version == 2);
    CHECK_FALSE(evaluate(super_from(x), "", v2).allow);

    RuleSet v3 = update_rules(v2, UpdateOp::Add, "sender.whitelist", x.hex());
    CHECK(evaluate(super_from(x), "", v3).allow);

    CHECK_THROWS_WITH_AS(update_rules(rs, UpdateOp::Remove, "method.m.whitelist", "0x11"),
                         doctest::Contains("NoSuchScope"), Error);
    CHECK_THROWS_WITH_AS(update_rules(v1, UpdateOp::Add, "sender.blacklist", x.hex()),
                         doctest::Contains("BothListsInOneScope"), Error);
    CHECK_THROWS_AS(update_rules(rs, UpdateOp::Add, "nonsense", "x"), Error);

    // Against a reference std::set over random op sequences.
    std::mt19937_64 gen(5);
    RuleSet live = load_rules("{}");
    std::set<std::string> reference;
    for (int step = 0; step < 500; ++step) {
        Address entry = addr_of(static_cast<byte>(gen() % 6));
        bool add = gen() % 2 == 0;
        if (add) {
            live = update_rules(live, UpdateOp::Add, "sender.whitelist", entry.hex());
            reference.insert(entry.hex());
        } else if (live.sender) {
            live = update_rules(live, UpdateOp::Remove, "sender.whitelist", entry.hex());
            reference.erase(entry.hex());
        }
        if (live.sender) CHECK(live.sender->entries == reference);
    }
}

TEST_CASE("whitelist growth never revokes, blacklist growth never grants") {
    std::mt19937_64 gen(17);
    for (int round = 0; round < 300; ++round) {
        bool white = gen() % 2 == 0;
        RuleSet rs = load_rules(white ? R"({"sender": {"whitelist": []}})"
                                      : R"({"sender": {"blacklist": []}})");
        for (int i = 0; i < 4; ++i)
            rs = update_rules(rs, UpdateOp::Add,
                              white ? "sender.whitelist" : "sender.blacklist",
                              addr_of(static_cast<byte>(gen() % 8)).hex());
        TokenRequest req = super_from(addr_of(static_cast<byte>(gen() % 8)));
        bool before = evaluate(req, "", rs).allow;
        RuleSet grown = update_rules(rs, UpdateOp::Add,
                                     white ? "sender.whitelist" : "sender.blacklist",
                                     addr_of(static_cast<byte>(gen() % 8)).hex());
        bool after = evaluate(req, "", grown).allow;
        if (white)
            CHECK((!before || after));  // allow stays allowed
        else
            CHECK((before || !after));  // deny stays denied
    }
}

TEST_CASE("denials name the scope without leaking list contents") {
    RuleSet rs = load_rules(kListDocument);
    std::vector<TokenRequest> probes = {
        super_from(addr_of(0x99)),
        {TokenType::Method, addr_of(1), addr_of(0x99), MethodId::of("methodA"), {}},
        {TokenType::Argument, addr_of(1), addr_of(0x99), MethodId::of("methodA"),
         {{"argA", "zzz"}}},
    };
    std::vector<std::string> members;
    if (rs.sender)
        members.insert(members.end(), rs.sender->entries.begin(), rs.sender->entries.end());
    for (const auto& [k, rule] : rs.method)
        members.insert(members.end(), rule.entries.begin(), rule.entries.end());
    for (const auto& [k, rule] : rs.argument)
        members.insert(members.end(), rule.entries.begin(), rule.entries.end());

    for (const TokenRequest& probe : probes) {
        Decision d = evaluate(probe, "methodA", rs);
        CHECK_FALSE(d.allow);
        for (const std::string& member : members)
            CHECK(d.reason.find(member) == std::string::npos);
    }
}
