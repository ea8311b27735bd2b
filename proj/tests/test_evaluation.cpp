#include <doctest.h>

#include "lattag/evaluation.hpp"
#include "lattag/rng.hpp"
#include "testutil.hpp"

using namespace lattag;
using testutil::TempDir;
using testutil::make_corpus;

TEST_CASE("accuracy basics, masks and absence") {
    CHECK(*accuracy({"a", "b"}, {"a", "b"}) == doctest::Approx(100.0));
    CHECK(*accuracy({"a", "b", "c", "d"}, {"a", "b", "c", "x"}) == doctest::Approx(75.0));

    const std::vector<bool> mask = {true, false, true, false};
    CHECK(*accuracy({"a", "x", "c", "x"}, {"a", "b", "c", "d"}, &mask) ==
          doctest::Approx(100.0));

    const std::vector<bool> empty_mask = {false, false};
    CHECK(!accuracy({"a", "b"}, {"a", "b"}, &empty_mask).has_value());

    CHECK_THROWS_AS(accuracy({"a"}, {"a", "b"}), LengthMismatch);
}

TEST_CASE("score_head: gold as predictions gives 100 everywhere") {
    const std::vector<std::string> gold = {"x", "y", "z", "w"};
    const std::vector<bool> unknown = {false, true, false, true};
    const HeadScores s = score_head("lemma", gold, gold, unknown);
    CHECK(*s.accuracy_all == doctest::Approx(100.0));
    CHECK(*s.accuracy_known == doctest::Approx(100.0));
    CHECK(*s.accuracy_unknown == doctest::Approx(100.0));
    CHECK(s.n_all == 4);
    CHECK(s.n_known == 2);
    CHECK(s.n_unknown == 2);
}

TEST_CASE("accounting identities hold for random predictions") {
    Rng rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        std::vector<std::string> pred(n), gold(n);
        std::vector<bool> unknown(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = "g" + std::to_string(rng.below(5));
            pred[i] = "g" + std::to_string(rng.below(5));
            unknown[i] = rng.below(2) == 1;
        }
        const HeadScores s = score_head("pos", pred, gold, unknown);
        CHECK(s.n_known + s.n_unknown == s.n_all);
        CHECK(s.correct_known + s.correct_unknown == s.correct_all);
        if (s.accuracy_all) {
            const double recomputed =
                100.0 * static_cast<double>(s.correct_all) / static_cast<double>(s.n_all);
            CHECK(*s.accuracy_all == doctest::Approx(recomputed));
        }
    }
}

TEST_CASE("evaluate ties the model, corpus and vocabulary together") {
    const Corpus train = testutil::synthetic_corpus(150, 10, 5, 3, 6, 44);
    const Vocabularies vocab = build_vocabularies(train);
    Hyperparameters hp;
    hp.recurrent_dim = 6;
    hp.dense_dim = 6;
    hp.encoder_out_dim = 6;
    hp.embedding_dim = 6;
    hp.context_projection_dim = 6;
    const ModelParameters<float> model = init_model<float>(vocab, hp, nullptr, 1);

    const EvaluationReport report = evaluate(model, train, vocab);
    REQUIRE(report.heads.size() == 2);
    const HeadScores* lemma = report.find("lemma");
    const HeadScores* pos = report.find("pos");
    REQUIRE(lemma);
    REQUIRE(pos);
    CHECK(lemma->n_all == train.token_count());
    CHECK(pos->n_all == train.token_count());
    CHECK(lemma->n_known + lemma->n_unknown == lemma->n_all);

    // Deterministic across calls (exercises the parallel-evaluate path too).
    const EvaluationReport again = evaluate(model, train, vocab);
    CHECK(again.find("lemma")->correct_all == lemma->correct_all);
    CHECK(again.find("pos")->correct_all == pos->correct_all);

    // Gold without a lemma while the lemma head is active.
    Corpus missing = make_corpus({{{"x", "", "N"}}});
    CHECK_THROWS_AS(evaluate(model, missing, vocab), MissingGold);
}

TEST_CASE("report rendering is a pure golden function") {
    EvaluationReport report;
    HeadScores lemma;
    lemma.head = "lemma";
    lemma.n_all = 100;
    lemma.n_known = 90;
    lemma.n_unknown = 10;
    lemma.correct_all = 93;
    lemma.accuracy_all = 93.161;
    lemma.accuracy_known = 95.744;
    lemma.accuracy_unknown = 50.581;
    HeadScores pos = lemma;
    pos.head = "pos";
    pos.accuracy_all = 93.97;
    pos.accuracy_known = 95.14;
    pos.accuracy_unknown = 74.81;
    report.heads = {lemma, pos};

    const std::string text = render_report_text(report);
    CHECK(text.find("Task") != std::string::npos);
    CHECK(text.find("Lemma") != std::string::npos);
    CHECK(text.find("PoS") != std::string::npos);
    CHECK(text.find("93.16") != std::string::npos); // exactly 2 decimals
    CHECK(text.find("95.74") != std::string::npos);
    CHECK(text.find("50.58") != std::string::npos);
    CHECK(text.find("Lemma / PoS") != std::string::npos);
    CHECK(text.find("93.16 / 93.97") != std::string::npos);
    CHECK(text.find("93.161") == std::string::npos);

    const std::string tsv = render_report_tsv(report);
    std::size_t rows = 0;
    for (char c : tsv) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 1 + 2 * 3); // header + heads x subsets
    CHECK(tsv.find("lemma\tall\t93.16\t100\n") != std::string::npos);
    CHECK(tsv.find("pos\tunknown\t74.81\t10\n") != std::string::npos);

    // Single-head report renders no PoS row and no joint row.
    EvaluationReport single;
    single.heads = {lemma};
    const std::string text_single = render_report_text(single);
    CHECK(text_single.find("PoS") == std::string::npos);
    const std::string tsv_single = render_report_tsv(single);
    rows = 0;
    for (char c : tsv_single) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 1 + 3);

    // Absent accuracies render as NA.
    HeadScores empty_unknown = lemma;
    empty_unknown.n_unknown = 0;
    empty_unknown.accuracy_unknown = std::nullopt;
    EvaluationReport na_report;
    na_report.heads = {empty_unknown};
    CHECK(render_report_text(na_report).find("NA") != std::string::npos);

    TempDir dir;
    emit_report(report, dir.file("report.tsv"), "tsv");
    CHECK(testutil::read_file(dir.file("report.tsv")) == tsv);
    emit_report(report, dir.file("report.txt"), "text");
    CHECK(testutil::read_file(dir.file("report.txt")) == text);
}
