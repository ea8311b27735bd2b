#include "lattag/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lattag {

namespace {

std::optional<double> percentage(std::size_t correct, std::size_t n) {
    if (n == 0) return std::nullopt;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

std::string format2(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

const char* head_label(const std::string& head) { return head == "lemma" ? "Lemma" : "PoS"; }

} // namespace

std::optional<double> accuracy(const std::vector<std::string>& pred,
                               const std::vector<std::string>& gold,
                               const std::vector<bool>* mask) {
    if (pred.size() != gold.size() || (mask && mask->size() != pred.size())) {
        throw LengthMismatch("accuracy: prediction/gold/mask lengths differ");
    }
    std::size_t n = 0, correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        ++n;
        if (pred[i] == gold[i]) ++correct;
    }
    return percentage(correct, n);
}

HeadScores score_head(const std::string& head, const std::vector<std::string>& pred,
                      const std::vector<std::string>& gold,
                      const std::vector<bool>& unknown) {
    if (pred.size() != gold.size() || unknown.size() != pred.size()) {
        throw LengthMismatch("score_head: input lengths differ");
    }
    HeadScores s;
    s.head = head;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool ok = pred[i] == gold[i];
        ++s.n_all;
        if (ok) ++s.correct_all;
        if (unknown[i]) {
            ++s.n_unknown;
            if (ok) ++s.correct_unknown;
        } else {
            ++s.n_known;
            if (ok) ++s.correct_known;
        }
    }
    s.accuracy_all = percentage(s.correct_all, s.n_all);
    s.accuracy_known = percentage(s.correct_known, s.n_known);
    s.accuracy_unknown = percentage(s.correct_unknown, s.n_unknown);
    return s;
}

EvaluationReport evaluate(const ModelParameters<float>& model, const Corpus& corpus,
                          const Vocabularies& vocab) {
    const auto unknown_flags = mark_unknown(vocab, corpus);

    const long long n_sent = static_cast<long long>(corpus.sentences.size());
    std::vector<std::vector<Prediction>> predictions(corpus.sentences.size());
    // Per-sentence tagging is independent; integer count merging below is
    // order-free, so this parallel loop keeps evaluate deterministic.
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n_sent; ++i) {
        predictions[static_cast<std::size_t>(i)] =
            predict(model, corpus.sentences[static_cast<std::size_t>(i)]);
    }

    std::vector<std::string> lemma_pred, lemma_gold, pos_pred, pos_gold;
    std::vector<bool> unknown;
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
        const auto& sentence = corpus.sentences[i];
        for (std::size_t t = 0; t < sentence.size(); ++t) {
            unknown.push_back(unknown_flags[i][t]);
            if (model.hp.lemma_head) {
                if (sentence[t].lemma.empty()) {
                    throw MissingGold("token without gold lemma while the lemma head is active");
                }
                lemma_pred.push_back(*predictions[i][t].lemma);
                lemma_gold.push_back(sentence[t].lemma);
            }
            if (model.hp.pos_head) {
                if (sentence[t].pos.empty()) {
                    throw MissingGold("token without gold pos while the pos head is active");
                }
                pos_pred.push_back(*predictions[i][t].pos);
                pos_gold.push_back(sentence[t].pos);
            }
        }
    }

    EvaluationReport report;
    if (model.hp.lemma_head) {
        report.heads.push_back(score_head("lemma", lemma_pred, lemma_gold, unknown));
    }
    if (model.hp.pos_head) {
        report.heads.push_back(score_head("pos", pos_pred, pos_gold, unknown));
    }
    return report;
}

std::string render_report_text(const EvaluationReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %10s %10s %10s\n", "Task", "All", "Known",
                  "Unknown");
    out << line;
    for (const auto& h : report.heads) {
        std::snprintf(line, sizeof line, "%-14s %10s %10s %10s\n", head_label(h.head),
                      format2(h.accuracy_all).c_str(), format2(h.accuracy_known).c_str(),
                      format2(h.accuracy_unknown).c_str());
        out << line;
    }
    const HeadScores* lemma = report.find("lemma");
    const HeadScores* pos = report.find("pos");
    if (lemma && pos) {
        const auto pair2 = [](const std::optional<double>& a, const std::optional<double>& b) {
            return format2(a) + " / " + format2(b);
        };
        std::snprintf(line, sizeof line, "%-14s %10s %10s %10s\n", "Lemma / PoS",
                      pair2(lemma->accuracy_all, pos->accuracy_all).c_str(),
                      pair2(lemma->accuracy_known, pos->accuracy_known).c_str(),
                      pair2(lemma->accuracy_unknown, pos->accuracy_unknown).c_str());
        out << line;
    }
    if (!report.heads.empty()) {
        const auto& h = report.heads.front();
        std::snprintf(line, sizeof line, "%-14s %10zu %10zu %10zu\n", "Tokens", h.n_all,
                      h.n_known, h.n_unknown);
        out << line;
    }
    return out.str();
}

std::string render_report_tsv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "head\tsubset\taccuracy\tn\n";
    for (const auto& h : report.heads) {
        out << h.head << "\tall\t" << format2(h.accuracy_all) << '\t' << h.n_all << '\n';
        out << h.head << "\tknown\t" << format2(h.accuracy_known) << '\t' << h.n_known << '\n';
        out << h.head << "\tunknown\t" << format2(h.accuracy_unknown) << '\t' << h.n_unknown
            << '\n';
    }
    return out.str();
}

void emit_report(const EvaluationReport& report, const std::string& path,
                 const std::string& format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + path);
    out << (format == "tsv" ? render_report_tsv(report) : render_report_text(report));
    if (!out) throw IoError("failed writing report: " + path);
}

} // namespace lattag
