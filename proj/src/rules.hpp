#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "token.hpp"

namespace smacs::rules {

enum class ListMode { Whitelist, Blacklist };

/// A scope carries either a whitelist or a blacklist, never both.
struct ListRule {
    ListMode mode = ListMode::Whitelist;
    std::set<std::string> entries;

    bool allows(const std::string& entry) const {
        bool member = entries.count(entry) > 0;
        return mode == ListMode::Whitelist ? member : !member;
    }
    bool operator==(const ListRule&) const = default;
};

struct RuleSet {
    std::uint64_t version = 0;
    std::optional<ListRule> sender;             // keyed on sAddr
    std::map<std::string, ListRule> method;     // method name -> rule on sAddr
    std::map<std::string, ListRule> argument;   // arg name -> rule on argValue
    std::vector<std::string> validators;        // applied to argument requests

    bool operator==(const RuleSet&) const = default;
};

struct Decision {
    bool allow = false;
    std::string reason;  // failing scope path, or "ok"
};

inline const std::vector<std::string> kKnownValidators = {"nversion", "ecf"};

/// Parses the rule document: optional "sender", "method", "argument"
/// sections plus an optional "validators" array; unknown keys are rejected.
/// Throws ParseError, BothListsInOneScope, UnknownValidator.
RuleSet load_rules(const std::string& json_text);
std::string dump_rules(const RuleSet& rs);

enum class UpdateOp { Add, Remove };

/// Returns a new snapshot with the entry added to or removed from the scope
/// ("sender.whitelist", "method.<name>.blacklist", "argument.<name>.whitelist")
/// and the version bumped. Add creates a missing scope; Remove on a missing
/// scope throws NoSuchScope.
RuleSet update_rules(const RuleSet& rs, UpdateOp op, const std::string& scope_path,
                     const std::string& entry);

/// Default-deny evaluation in scope order sender, method, argument; the
/// first failing scope decides. The method scope is keyed by name, resolved
/// by the caller from the contract's method table. Validator hooks run
/// outside this function; the attached names are in RuleSet::validators.
Decision evaluate(const TokenRequest& req, const std::string& method_name, const RuleSet& rs);

/// Lowercased 0x-form used for address entries; throws on non-hex input.
std::string canonical_address_entry(const std::string& entry);

}  // namespace smacs::rules
