#include <doctest.h>

#include <algorithm>
#include <set>

#include "lattag/corpus.hpp"
#include "lattag/rng.hpp"
#include "testutil.hpp"

using namespace lattag;
using testutil::TempDir;
using testutil::make_corpus;
using testutil::write_file;

TEST_CASE("load_corpus parses records, comments and sentence breaks") {
    TempDir dir;
    const std::string path = dir.file("corpus.tsv");
    write_file(path,
               "# a comment\n"
               "Aliquis\taliquis\tP\n"
               "dixit\tdico\tV\n"
               "\n"
               "avus\tavus\tN\n");
    const Corpus corpus = load_corpus(path, Split::train);
    REQUIRE(corpus.sentences.size() == 2);
    REQUIRE(corpus.sentences[0].size() == 2);
    CHECK(corpus.sentences[0][0].surface == "Aliquis");
    CHECK(corpus.sentences[0][0].lowered == "aliquis");
    CHECK(corpus.sentences[0][0].lemma == "aliquis");
    CHECK(corpus.sentences[0][0].pos == "P");
    CHECK(corpus.sentences[1][0].surface == "avus");
    CHECK(corpus.token_count() == 3);
}

TEST_CASE("load_corpus edge cases") {
    TempDir dir;

    const std::string empty = dir.file("empty.tsv");
    write_file(empty, "");
    const Corpus corpus = load_corpus(empty, Split::train);
    CHECK(corpus.sentences.empty());
    CHECK(corpus.token_count() == 0);

    const std::string malformed = dir.file("malformed.tsv");
    write_file(malformed, "bona\tbonus\tA\naliquis\taliquis\n");
    try {
        load_corpus(malformed, Split::train);
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.line == 2);
    }

    const std::string invalid = dir.file("invalid.tsv");
    write_file(invalid, "ab\xFF\x41\tx\tN\n");
    CHECK_THROWS_AS(load_corpus(invalid, Split::train), EncodingError);

    CHECK_THROWS_AS(load_corpus(dir.file("missing.tsv"), Split::train), IoError);

    // Multi-byte UTF-8 passes validation.
    const std::string utf8 = dir.file("utf8.tsv");
    write_file(utf8, "pr\xC3\xA6sul\tpraesul\tN\n");
    CHECK(load_corpus(utf8, Split::train).token_count() == 1);
}

TEST_CASE("split_train_dev splits on sentence boundaries") {
    std::vector<std::vector<std::array<std::string, 3>>> sentences;
    for (int i = 0; i < 10; ++i) {
        sentences.push_back({{{"t" + std::to_string(i), "l", "N"}}});
    }
    const Corpus corpus = make_corpus(sentences);
    const auto [train, dev] = split_train_dev(corpus, 0.10);
    CHECK(train.sentences.size() == 9);
    CHECK(dev.sentences.size() == 1);
    CHECK(dev.sentences[0][0].surface == "t9");

    CHECK_THROWS_AS(split_train_dev(corpus, 1.5), InvalidFraction);
    CHECK_THROWS_AS(split_train_dev(corpus, 0.0), InvalidFraction);
    CHECK_THROWS_AS(split_train_dev(Corpus{}, 0.1), EmptyCorpus);
}

TEST_CASE("split conservation and fraction bound hold for random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<std::array<std::string, 3>>> sentences;
        const std::size_t n_sent = 2 + rng.below(30);
        std::size_t longest = 1;
        for (std::size_t s = 0; s < n_sent; ++s) {
            std::vector<std::array<std::string, 3>> sent;
            const std::size_t len = 1 + rng.below(12);
            longest = std::max(longest, len);
            for (std::size_t t = 0; t < len; ++t) {
                sent.push_back({"w" + std::to_string(rng.below(50)), "l", "N"});
            }
            sentences.push_back(sent);
        }
        const Corpus corpus = make_corpus(sentences);
        const double fraction = 0.05 + 0.4 * rng.next_double();
        const auto [train, dev] = split_train_dev(corpus, fraction);

        CHECK(train.token_count() + dev.token_count() == corpus.token_count());
        REQUIRE(train.sentences.size() + dev.sentences.size() == corpus.sentences.size());
        const double target = (1.0 - fraction) * static_cast<double>(corpus.token_count());
        CHECK(static_cast<double>(train.token_count()) <= target + 1e-9);
        CHECK(static_cast<double>(train.token_count()) + static_cast<double>(longest) >=
              target - 1e-9);
    }
}

TEST_CASE("build_vocabularies covers training data with reserved symbols") {
    const Corpus corpus = make_corpus({{{"aliquis", "aliquis", "P"}}});
    const Vocabularies vocab = build_vocabularies(corpus);

    const std::set<char> alphabet(vocab.char_alphabet.begin(), vocab.char_alphabet.end());
    CHECK(alphabet == std::set<char>{'a', 'i', 'l', 'q', 's', 'u'});
    CHECK(vocab.char_alphabet.size() == 6);
    // First-occurrence order over "aliquis".
    CHECK(vocab.char_alphabet == std::vector<char>{'a', 'l', 'i', 'q', 'u', 's'});
    CHECK(vocab.max_token_len == 7);
    CHECK(vocab.max_lemma_len == 7);

    // PAD exists even when no lemma needs padding, and reserved indices sit
    // outside the observed ranges.
    CHECK(vocab.pad_index() == 6);
    CHECK(vocab.lemma_alphabet_size() == 7);
    CHECK(vocab.tokens.size() == 1);
    CHECK(vocab.unk_index() == 1);
    CHECK(vocab.boundary_index() == 2);
    CHECK(vocab.lexicon_size() == 3);
    CHECK(vocab.tagset == std::vector<std::string>{"P"});

    CHECK_THROWS_AS(build_vocabularies(Corpus{}), EmptyCorpus);
}

TEST_CASE("vocabularies are deterministic across repeated builds") {
    const Corpus corpus = testutil::synthetic_corpus(500, 40, 15, 5, 9, 7);
    const Vocabularies a = build_vocabularies(corpus);
    const Vocabularies b = build_vocabularies(corpus);
    CHECK(a == b);
    CHECK(a.token_counts == b.token_counts);
}

TEST_CASE("mark_unknown compares lowered forms against the lexicon") {
    const Corpus train = make_corpus({{{"aliquis", "aliquis", "P"}, {"dixit", "dico", "V"}}});
    const Vocabularies vocab = build_vocabularies(train);

    const Corpus eval = make_corpus(
        {{{"Aliquis", "aliquis", "P"}, {"novus", "novus", "A"}, {"dixit", "dico", "V"}}},
        Split::test);
    const auto flags = mark_unknown(vocab, eval);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0] == std::vector<bool>{false, true, false});

    // Partition: known + unknown = all.
    std::size_t known = 0, unknown = 0;
    for (const auto& row : flags) {
        for (bool f : row) (f ? unknown : known)++;
    }
    CHECK(known + unknown == eval.token_count());
}

TEST_CASE("corpus_stats counts and proportion") {
    const Corpus empty;
    const CorpusStats zero = corpus_stats(empty);
    CHECK(zero.tokens == 0);
    CHECK(zero.unique_tokens == 0);
    CHECK(zero.unique_lemmas == 0);

    const Corpus train = make_corpus({{{"a", "x", "N"}, {"b", "y", "N"}}});
    const Vocabularies vocab = build_vocabularies(train);
    const Corpus eval =
        make_corpus({{{"a", "x", "N"}, {"a", "x", "N"}, {"c", "z", "N"}, {"d", "w", "N"}}});
    const CorpusStats stats = corpus_stats(eval, &vocab);
    CHECK(stats.tokens == 4);
    CHECK(stats.unique_tokens == 3);
    CHECK(stats.unique_lemmas == 3);
    REQUIRE(stats.proportion_unseen.has_value());
    CHECK(*stats.proportion_unseen == doctest::Approx(50.0));
    CHECK(stats.unique_tokens <= stats.tokens);
    CHECK(*stats.proportion_unseen >= 0.0);
    CHECK(*stats.proportion_unseen <= 100.0);
}
