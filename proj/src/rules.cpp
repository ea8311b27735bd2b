#include "lattag/rules.hpp"

#include <array>
#include <fstream>

namespace lattag {

namespace {

constexpr int kMaxPasses = 16;

bool anchor_ok(const RewriteRule& rule, std::size_t pos, std::size_t pattern_len,
               std::size_t form_len) {
    switch (rule.anchor) {
        case RuleAnchor::anywhere: return true;
        case RuleAnchor::initial: return pos == 0;
        case RuleAnchor::final: return pos + pattern_len == form_len;
    }
    return false;
}

} // namespace

std::string RuleTable::apply_once(const std::string& form) const {
    std::string out;
    out.reserve(form.size());
    std::size_t pos = 0;
    while (pos < form.size()) {
        const RewriteRule* best = nullptr;
        for (const RewriteRule& rule : rules) {
            const std::size_t len = rule.pattern.size();
            if (len == 0 || pos + len > form.size()) continue;
            if (best && len <= best->pattern.size()) continue; // listed order wins ties
            if (form.compare(pos, len, rule.pattern) != 0) continue;
            if (!anchor_ok(rule, pos, len, form.size())) continue;
            best = &rule;
        }
        if (best) {
            out += best->replacement;
            pos += best->pattern.size();
        } else {
            out += form[pos];
            ++pos;
        }
    }
    return out;
}

std::string RuleTable::apply(const std::string& form) const {
    std::string current = form;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        std::string next = apply_once(current);
        if (next == current) break;
        current = std::move(next);
    }
    return current;
}

std::string classicize(const std::string& form, const RuleTable& rules,
                       const ExceptionLexicon* exceptions) {
    if (exceptions) {
        auto it = exceptions->find(form);
        if (it != exceptions->end()) return it->second;
    }
    return rules.apply(form);
}

RuleTable default_rule_table() {
    RuleTable table;
    auto add = [&table](std::string pattern, std::string replacement,
                        RuleAnchor anchor = RuleAnchor::anywhere) {
        table.rules.push_back({std::move(pattern), std::move(replacement), anchor});
    };

    // Prepositional prefix assimilation.
    const std::array<std::pair<const char*, const char*>, 21> prefixes = {{
        {"conl", "coll"}, {"conr", "corr"}, {"inl", "ill"},   {"inr", "irr"},
        {"adl", "all"},   {"adr", "arr"},   {"adp", "app"},   {"adc", "acc"},
        {"adf", "aff"},   {"adg", "agg"},   {"adt", "att"},   {"obp", "opp"},
        {"obc", "occ"},   {"obf", "off"},   {"subp", "supp"}, {"subc", "succ"},
        {"subf", "suff"}, {"subg", "sugg"}, {"subm", "summ"}, {"subr", "surr"},
        {"conm", "comm"},
    }};
    for (const auto& [from, to] : prefixes) add(from, to, RuleAnchor::initial);

    // Aspiration repairs.
    add("michi", "mihi");
    add("nichil", "nihil");

    // Intrusive p after m.
    add("mpn", "mn");
    add("mps", "ms", RuleAnchor::final);

    // Geminate/diphthong repairs.
    add("aeccl", "eccl");
    add("ccll", "ccl");

    // ti recovered where medieval lenition wrote ci before a vowel. Words
    // with legitimate classical ci (facio, socius, ...) belong in the
    // exception lexicon.
    for (char v : {'a', 'e', 'i', 'o', 'u'}) {
        add(std::string("ci") + v, std::string("ti") + v);
    }

    // u/v redistribution. "Vowel context" treats j as a vowel because j
    // rewrites to i. The q-u and su-/gu- clusters are untouched since their
    // u never has a vowel on the left.
    const std::string vowels = "aeiouyj";
    const std::string consonants = "bcdfghklmnpqrstwxz";

    // Initial consonantal u: uita -> vita, uult -> vult, uua -> uva.
    for (char y : vowels) {
        if (y == 'u') continue;
        add(std::string("uu") + y, std::string("uv") + y, RuleAnchor::initial);
        add(std::string("u") + y, std::string("v") + y, RuleAnchor::initial);
    }
    for (char c : consonants) {
        add(std::string("uu") + c, std::string("vu") + c, RuleAnchor::initial);
    }

    // In iuu + vowel the second u is the consonant: adiuuo -> adiuvo,
    // iuuenis -> iuvenis. Longer pattern, so it beats the generic rule below.
    for (char y : vowels) {
        if (y == 'u') continue;
        add(std::string("iuu") + y, std::string("iuv") + y);
    }

    // Intervocalic u is consonantal: auus -> avus, noua -> nova.
    for (char x : vowels) {
        for (char y : vowels) {
            add(std::string(1, x) + "u" + y, std::string(1, x) + "v" + y);
        }
    }

    // v in vowel position: avvs -> avus, vmbra -> umbra, vrbs -> urbs.
    for (char c : consonants) {
        add(std::string("vv") + c, std::string("vu") + c);
        if (c != 'v') add(std::string("v") + c, std::string("u") + c);
    }
    add("v", "u", RuleAnchor::final);

    // j disappears for i.
    add("j", "i");

    return table;
}

namespace {

const char* anchor_name(RuleAnchor anchor) {
    switch (anchor) {
        case RuleAnchor::anywhere: return "anywhere";
        case RuleAnchor::initial: return "initial";
        case RuleAnchor::final: return "final";
    }
    return "anywhere";
}

RuleAnchor parse_anchor(const std::string& name, std::size_t line_no) {
    if (name == "anywhere") return RuleAnchor::anywhere;
    if (name == "initial") return RuleAnchor::initial;
    if (name == "final") return RuleAnchor::final;
    throw MalformedRecord(line_no, "unknown anchor '" + name + "'");
}

} // namespace

RuleTable load_rule_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open rule table: " + path);
    RuleTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                           : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw MalformedRecord(line_no, "expected pattern<TAB>replacement<TAB>anchor");
        }
        RewriteRule rule;
        rule.pattern = line.substr(0, tab1);
        rule.replacement = line.substr(tab1 + 1, tab2 - tab1 - 1);
        rule.anchor = parse_anchor(line.substr(tab2 + 1), line_no);
        if (rule.pattern.empty()) throw MalformedRecord(line_no, "empty pattern");
        table.rules.push_back(std::move(rule));
    }
    return table;
}

void save_rule_table(const RuleTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write rule table: " + path);
    for (const RewriteRule& rule : table.rules) {
        out << rule.pattern << '\t' << rule.replacement << '\t' << anchor_name(rule.anchor)
            << '\n';
    }
    if (!out) throw IoError("failed writing rule table: " + path);
}

ExceptionLexicon load_exception_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open exception lexicon: " + path);
    ExceptionLexicon lexicon;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw MalformedRecord(line_no, "expected form<TAB>canonical");
        }
        lexicon[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return lexicon;
}

} // namespace lattag
