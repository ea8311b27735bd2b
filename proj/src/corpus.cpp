#include "lattag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace lattag {

namespace {

// Validates UTF-8 and rejects stray continuation bytes / truncated sequences.
bool is_valid_utf8(const std::string& s) {
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(s.data());
    while (i < s.size()) {
        const unsigned char b = bytes[i];
        std::size_t extra = 0;
        if (b < 0x80) {
            extra = 0;
        } else if ((b & 0xE0) == 0xC0) {
            extra = 1;
            if (b < 0xC2) return false; // overlong
        } else if ((b & 0xF0) == 0xE0) {
            extra = 2;
        } else if ((b & 0xF8) == 0xF0) {
            extra = 3;
            if (b > 0xF4) return false;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false; // truncated sequence
        for (std::size_t k = 1; k <= extra; ++k) {
            if ((bytes[i + k] & 0xC0) != 0x80) return false;
        }
        i += extra + 1;
    }
    return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

Corpus load_corpus(const std::string& path, Split split, bool require_gold) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);

    Corpus corpus;
    corpus.split = split;
    Sentence current;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!is_valid_utf8(line)) {
            throw EncodingError("invalid UTF-8 on line " + std::to_string(line_no) + " of " +
                                path);
        }
        if (line.empty()) {
            if (!current.empty()) {
                corpus.sentences.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (line[0] == '#') continue;

        const std::vector<std::string> fields = split_tabs(line);
        AnnotatedToken tok;
        if (fields.size() == 3) {
            tok.surface = fields[0];
            tok.lemma = fields[1];
            tok.pos = fields[2];
        } else if (fields.size() == 1 && !require_gold) {
            tok.surface = fields[0];
        } else {
            throw MalformedRecord(line_no, "expected 3 tab-separated columns, got " +
                                               std::to_string(fields.size()));
        }
        if (tok.surface.empty()) {
            throw MalformedRecord(line_no, "empty token column");
        }
        if (require_gold && (tok.lemma.empty() || tok.pos.empty())) {
            throw MalformedRecord(line_no, "empty lemma or pos column");
        }
        tok.lowered = lowercase_ascii(tok.surface);
        current.push_back(std::move(tok));
    }
    if (!current.empty()) corpus.sentences.push_back(std::move(current));
    return corpus;
}

std::pair<Corpus, Corpus> split_train_dev(const Corpus& corpus, double dev_fraction) {
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
        throw InvalidFraction("dev fraction must lie in (0,1), got " +
                              std::to_string(dev_fraction));
    }
    if (corpus.empty()) throw EmptyCorpus("cannot split an empty corpus");

    const double target = (1.0 - dev_fraction) * static_cast<double>(corpus.token_count());
    Corpus train, dev;
    train.split = Split::train;
    dev.split = Split::dev;
    std::size_t cum = 0;
    for (const auto& sentence : corpus.sentences) {
        if (static_cast<double>(cum + sentence.size()) <= target) {
            train.sentences.push_back(sentence);
            cum += sentence.size();
        } else {
            dev.sentences.push_back(sentence);
        }
    }
    return {std::move(train), std::move(dev)};
}

void Vocabularies::rebuild_indices() {
    char_index.clear();
    lemma_char_index.clear();
    token_index.clear();
    tag_index.clear();
    for (std::size_t i = 0; i < char_alphabet.size(); ++i)
        char_index.emplace(char_alphabet[i], static_cast<int>(i));
    for (std::size_t i = 0; i < lemma_alphabet.size(); ++i)
        lemma_char_index.emplace(lemma_alphabet[i], static_cast<int>(i));
    for (std::size_t i = 0; i < tokens.size(); ++i)
        token_index.emplace(tokens[i], static_cast<int>(i));
    for (std::size_t i = 0; i < tagset.size(); ++i)
        tag_index.emplace(tagset[i], static_cast<int>(i));
}

Vocabularies build_vocabularies(const Corpus& train) {
    if (train.empty()) throw EmptyCorpus("cannot build vocabularies from an empty corpus");

    Vocabularies vocab;
    for (const auto& sentence : train.sentences) {
        for (const auto& tok : sentence) {
            for (char c : tok.lowered) {
                if (vocab.char_index.emplace(c, static_cast<int>(vocab.char_alphabet.size()))
                        .second) {
                    vocab.char_alphabet.push_back(c);
                }
            }
            for (char c : tok.lemma) {
                if (vocab.lemma_char_index
                        .emplace(c, static_cast<int>(vocab.lemma_alphabet.size()))
                        .second) {
                    vocab.lemma_alphabet.push_back(c);
                }
            }
            auto [it, inserted] =
                vocab.token_index.emplace(tok.lowered, static_cast<int>(vocab.tokens.size()));
            if (inserted) {
                vocab.tokens.push_back(tok.lowered);
                vocab.token_counts.push_back(1);
            } else {
                ++vocab.token_counts[static_cast<std::size_t>(it->second)];
            }
            if (vocab.tag_index.emplace(tok.pos, static_cast<int>(vocab.tagset.size())).second) {
                vocab.tagset.push_back(tok.pos);
            }
            vocab.max_token_len =
                std::max(vocab.max_token_len, static_cast<int>(tok.lowered.size()));
            vocab.max_lemma_len = std::max(vocab.max_lemma_len, static_cast<int>(tok.lemma.size()));
        }
    }
    return vocab;
}

std::vector<std::vector<bool>> mark_unknown(const Vocabularies& vocab, const Corpus& eval) {
    std::vector<std::vector<bool>> flags;
    flags.reserve(eval.sentences.size());
    for (const auto& sentence : eval.sentences) {
        std::vector<bool> row;
        row.reserve(sentence.size());
        for (const auto& tok : sentence) {
            row.push_back(!vocab.contains_token(tok.lowered));
        }
        flags.push_back(std::move(row));
    }
    return flags;
}

CorpusStats corpus_stats(const Corpus& corpus, const Vocabularies* vocab) {
    CorpusStats stats;
    std::unordered_set<std::string> unique_tokens;
    std::unordered_set<std::string> unique_lemmas;
    std::size_t unseen = 0;
    for (const auto& sentence : corpus.sentences) {
        for (const auto& tok : sentence) {
            ++stats.tokens;
            unique_tokens.insert(tok.lowered);
            if (!tok.lemma.empty()) unique_lemmas.insert(tok.lemma);
            if (vocab && !vocab->contains_token(tok.lowered)) ++unseen;
        }
    }
    stats.unique_tokens = unique_tokens.size();
    stats.unique_lemmas = unique_lemmas.size();
    if (vocab && stats.tokens > 0) {
        stats.proportion_unseen =
            100.0 * static_cast<double>(unseen) / static_cast<double>(stats.tokens);
    } else if (vocab) {
        stats.proportion_unseen = std::nullopt;
    }
    return stats;
}

} // namespace lattag
