#include "rules.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace smacs::rules {

using nlohmann::json;

std::string canonical_address_entry(const std::string& entry) {
    if (entry.size() < 2 || entry[0] != '0' || (entry[1] != 'x' && entry[1] != 'X'))
        throw Error("ParseError", "address entry needs a 0x prefix: " + entry);
    bytes raw = from_hex(entry);  // validates hex digits
    return to_hex(raw, true);
}

namespace {

bool is_address_scope(const std::string& section) {
    return section == "sender" || section == "method";
}

ListRule parse_scope(const json& node, const std::string& path, bool address_entries) {
    if (!node.is_object()) throw Error("ParseError", path + " must be an object");
    bool has_white = node.contains("whitelist");
    bool has_black = node.contains("blacklist");
    if (has_white && has_black)
        throw Error("BothListsInOneScope", path + " carries both a whitelist and a blacklist");
    if (!has_white && !has_black)
        throw Error("ParseError", path + " needs a whitelist or a blacklist");
    for (auto& [key, value] : node.items())
        if (key != "whitelist" && key != "blacklist")
            throw Error("ParseError", "unknown key '" + key + "' in " + path);

    ListRule rule;
    rule.mode = has_white ? ListMode::Whitelist : ListMode::Blacklist;
    const json& list = node.at(has_white ? "whitelist" : "blacklist");
    if (!list.is_array()) throw Error("ParseError", path + " list must be an array");
    for (const json& e : list) {
        if (!e.is_string()) throw Error("ParseError", path + " entries must be strings");
        std::string s = e.get<std::string>();
        rule.entries.insert(address_entries ? canonical_address_entry(s) : s);
    }
    return rule;
}

json dump_scope(const ListRule& rule) {
    json list = json::array();
    for (const std::string& e : rule.entries) list.push_back(e);
    json node = json::object();
    node[rule.mode == ListMode::Whitelist ? "whitelist" : "blacklist"] = list;
    return node;
}

}  // namespace

RuleSet load_rules(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error("ParseError", e.what());
    }
    if (!doc.is_object()) throw Error("ParseError", "rule document must be an object");

    RuleSet rs;
    for (auto& [key, value] : doc.items()) {
        if (key == "sender") {
            rs.sender = parse_scope(value, "sender", true);
        } else if (key == "method" || key == "argument") {
            if (!value.is_object()) throw Error("ParseError", key + " must be an object");
            auto& target = (key == "method") ? rs.method : rs.argument;
            for (auto& [scope_name, scope_node] : value.items())
                target.emplace(scope_name, parse_scope(scope_node, key + "." + scope_name,
                                                       is_address_scope(key)));
        } else if (key == "validators") {
            if (!value.is_array()) throw Error("ParseError", "validators must be an array");
            for (const json& v : value) {
                std::string name = v.get<std::string>();
                if (std::find(kKnownValidators.begin(), kKnownValidators.end(), name) ==
                    kKnownValidators.end())
                    throw Error("UnknownValidator", name);
                rs.validators.push_back(name);
            }
        } else if (key == "version") {
            rs.version = value.get<std::uint64_t>();
        } else {
            throw Error("ParseError", "unknown top-level key '" + key + "'");
        }
    }
    return rs;
}

std::string dump_rules(const RuleSet& rs) {
    json doc = json::object();
    doc["version"] = rs.version;
    if (rs.sender) doc["sender"] = dump_scope(*rs.sender);
    if (!rs.method.empty()) {
        json m = json::object();
        for (const auto& [name, rule] : rs.method) m[name] = dump_scope(rule);
        doc["method"] = m;
    }
    if (!rs.argument.empty()) {
        json a = json::object();
        for (const auto& [name, rule] : rs.argument) a[name] = dump_scope(rule);
        doc["argument"] = a;
    }
    if (!rs.validators.empty()) doc["validators"] = rs.validators;
    return doc.dump(2);
}

namespace {

struct ScopePath {
    std::string section;  // sender | method | argument
    std::string name;     // empty for sender
    ListMode mode;
};

ScopePath parse_scope_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t dot = path.find('.', pos);
        if (dot == std::string::npos) {
            parts.push_back(path.substr(pos));
            break;
        }
        parts.push_back(path.substr(pos, dot - pos));
        pos = dot + 1;
    }
    auto mode_of = [&](const std::string& s) {
        if (s == "whitelist") return ListMode::Whitelist;
        if (s == "blacklist") return ListMode::Blacklist;
        throw Error("NoSuchScope", "scope path must end in whitelist or blacklist: " + path);
    };
    if (parts.size() == 2 && parts[0] == "sender")
        return {"sender", "", mode_of(parts[1])};
    if (parts.size() == 3 && (parts[0] == "method" || parts[0] == "argument") &&
        !parts[1].empty())
        return {parts[0], parts[1], mode_of(parts[2])};
    throw Error("NoSuchScope", "unrecognized scope path: " + path);
}

}  // namespace

RuleSet update_rules(const RuleSet& rs, UpdateOp op, const std::string& scope_path,
                     const std::string& entry) {
    ScopePath sp = parse_scope_path(scope_path);
    std::string value =
        is_address_scope(sp.section) ? canonical_address_entry(entry) : entry;

    RuleSet next = rs;
    next.version = rs.version + 1;

    auto apply = [&](std::optional<ListRule>& slot) {
        if (!slot) {
            if (op == UpdateOp::Remove) throw Error("NoSuchScope", scope_path);
            slot = ListRule{sp.mode, {}};
        }
        if (slot->mode != sp.mode)
            throw Error("BothListsInOneScope",
                        scope_path + " conflicts with the existing list mode");
        if (op == UpdateOp::Add)
            slot->entries.insert(value);
        else
            slot->entries.erase(value);
    };

    if (sp.section == "sender") {
        apply(next.sender);
    } else {
        auto& section = (sp.section == "method") ? next.method : next.argument;
        auto it = section.find(sp.name);
        if (it == section.end()) {
            if (op == UpdateOp::Remove) throw Error("NoSuchScope", scope_path);
            std::optional<ListRule> fresh;
            apply(fresh);
            section.emplace(sp.name, std::move(*fresh));
        } else {
            std::optional<ListRule> existing = it->second;
            apply(existing);
            it->second = std::move(*existing);
        }
    }
    return next;
}

Decision evaluate(const TokenRequest& req, const std::string& method_name, const RuleSet& rs) {
    std::string sender_hex = req.sender.hex();

    if (!rs.sender) return {false, "sender"};
    if (!rs.sender->allows(sender_hex))
        return {false, std::string("sender.") +
                           (rs.sender->mode == ListMode::Whitelist ? "whitelist" : "blacklist")};

    if (req.type == TokenType::Method || req.type == TokenType::Argument) {
        auto it = rs.method.find(method_name);
        if (it == rs.method.end()) return {false, "method." + method_name};
        if (!it->second.allows(sender_hex))
            return {false, "method." + method_name + "." +
                               (it->second.mode == ListMode::Whitelist ? "whitelist"
                                                                       : "blacklist")};
    }

    if (req.type == TokenType::Argument) {
        for (const ArgPair& arg : req.args) {
            auto it = rs.argument.find(arg.name);
            if (it == rs.argument.end()) return {false, "argument." + arg.name};
            if (!it->second.allows(arg.value))
                return {false, "argument." + arg.name + "." +
                                   (it->second.mode == ListMode::Whitelist ? "whitelist"
                                                                           : "blacklist")};
        }
    }

    return {true, "ok"};
}

}  // namespace smacs::rules
