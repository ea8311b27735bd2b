#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lattag/errors.hpp"

namespace lattag {

enum class RuleAnchor { anywhere, initial, final };

struct RewriteRule {
    std::string pattern;
    std::string replacement;
    RuleAnchor anchor = RuleAnchor::anywhere;
};

// Ordered orthographic rewrite rules. One left-to-right scan applies, at each
// position, the matching rule with the longest pattern (ties by listing
// order) and continues after the replacement; scans repeat until a fixpoint,
// which makes the result idempotent under re-application.
struct RuleTable {
    std::vector<RewriteRule> rules;

    std::string apply(const std::string& form) const;

private:
    std::string apply_once(const std::string& form) const;
};

// Whole-form overrides for normalizations that no character rule can derive
// (comparative/superlative base forms and similar lexical mappings).
using ExceptionLexicon = std::unordered_map<std::string, std::string>;

std::string classicize(const std::string& form, const RuleTable& rules,
                       const ExceptionLexicon* exceptions = nullptr);

// The built-in medieval-to-classical table: u/v and j/i redistribution,
// ci -> ti before vowels, prepositional prefix assimilation, aspiration and
// mp-intrusion fixes, and a few geminate/diphthong repairs.
RuleTable default_rule_table();

// File format: pattern<TAB>replacement<TAB>anchor, anchor in
// {anywhere, initial, final}; '#' comments and blank lines ignored.
RuleTable load_rule_table(const std::string& path);
void save_rule_table(const RuleTable& table, const std::string& path);

// File format: form<TAB>canonical.
ExceptionLexicon load_exception_lexicon(const std::string& path);

} // namespace lattag
