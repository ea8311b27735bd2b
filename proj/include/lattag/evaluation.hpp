#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lattag/corpus.hpp"
#include "lattag/model.hpp"

namespace lattag {

struct HeadScores {
    std::string head; // "lemma" or "pos"
    std::size_t n_all = 0, n_known = 0, n_unknown = 0;
    std::size_t correct_all = 0, correct_known = 0, correct_unknown = 0;
    std::optional<double> accuracy_all, accuracy_known, accuracy_unknown;
};

struct EvaluationReport {
    std::vector<HeadScores> heads;

    const HeadScores* find(const std::string& name) const {
        for (const auto& h : heads) {
            if (h.head == name) return &h;
        }
        return nullptr;
    }
};

// 100 * correct / selected over the mask (all positions when mask is null);
// absent (not zero) when nothing is selected.
std::optional<double> accuracy(const std::vector<std::string>& pred,
                               const std::vector<std::string>& gold,
                               const std::vector<bool>* mask = nullptr);

// Count-level scoring shared by evaluate(); exposed for direct testing.
HeadScores score_head(const std::string& head, const std::vector<std::string>& pred,
                      const std::vector<std::string>& gold,
                      const std::vector<bool>& unknown);

// Tags the corpus with the model and scores each active head with the
// all/known/unknown breakdown (unknown = lowered form absent from vocab).
EvaluationReport evaluate(const ModelParameters<float>& model, const Corpus& corpus,
                          const Vocabularies& vocab);

std::string render_report_text(const EvaluationReport& report);
std::string render_report_tsv(const EvaluationReport& report);

// format is "text" or "tsv".
void emit_report(const EvaluationReport& report, const std::string& path,
                 const std::string& format);

} // namespace lattag
