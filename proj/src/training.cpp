#include "lattag/training.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lattag/evaluation.hpp"
#include "lattag/rng.hpp"

namespace lattag {

std::pair<double, std::size_t> schedule_for_epoch(const TrainConfig& cfg, std::size_t epoch) {
    if (epoch <= cfg.schedule_epoch) {
        return {cfg.lr_initial, cfg.batch_size_initial};
    }
    const auto shrunk = static_cast<std::size_t>(
        std::ceil(static_cast<double>(cfg.batch_size_initial) / cfg.batch_factor));
    return {cfg.lr_initial / cfg.lr_factor, std::max<std::size_t>(1, shrunk)};
}

bool should_stop_early(std::size_t current_epoch, std::size_t best_epoch, std::size_t patience) {
    return current_epoch - best_epoch >= patience;
}

FitResult fit(ModelParameters<float>& model, const Corpus& train, const Corpus& dev,
              const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
    if (train.empty()) throw EmptyCorpus("fit: empty training corpus");
    if (dev.empty()) throw EmptyCorpus("fit: empty dev corpus");

    const std::vector<TrainingInstance> instances = build_instances(train, model.vocab);

    FitResult result;
    result.best.model = model;
    result.best.epoch = 0;
    result.best.selection_metric = -std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const auto [lr, batch_size] = schedule_for_epoch(cfg, epoch);

        const std::vector<Batch> batches =
            make_batches(instances, batch_size, mix_seed(cfg.seed, epoch), /*shuffle=*/true);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const double loss = backward(model, batches[b], mix_seed(cfg.seed, epoch, b));
            model.for_each_parameter([&](Parameter<float>& p) {
                rmsprop_update(p, lr, cfg.rho, cfg.epsilon);
            });
            loss_sum += loss * static_cast<double>(batches[b].size());
            seen += batches[b].size();
        }

        const EvaluationReport report = evaluate(model, dev, model.vocab);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.lr = lr;
        rec.batch_size = batch_size;
        double metric_sum = 0.0;
        std::size_t metric_n = 0;
        if (const HeadScores* lemma = report.find("lemma")) {
            rec.dev_lemma_all = lemma->accuracy_all;
            rec.dev_lemma_known = lemma->accuracy_known;
            rec.dev_lemma_unknown = lemma->accuracy_unknown;
            if (lemma->accuracy_all) {
                metric_sum += *lemma->accuracy_all;
                ++metric_n;
            }
        }
        if (const HeadScores* pos = report.find("pos")) {
            rec.dev_pos_all = pos->accuracy_all;
            rec.dev_pos_known = pos->accuracy_known;
            rec.dev_pos_unknown = pos->accuracy_unknown;
            if (pos->accuracy_all) {
                metric_sum += *pos->accuracy_all;
                ++metric_n;
            }
        }
        rec.selection_metric = metric_n ? metric_sum / static_cast<double>(metric_n) : 0.0;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.selection_metric > result.best.selection_metric) {
            result.best.model = model;
            result.best.epoch = epoch;
            result.best.selection_metric = rec.selection_metric;
        }
        if (should_stop_early(epoch, result.best.epoch, cfg.patience)) break;
    }
    return result;
}

void write_history_tsv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write history: " + path);
    out << "epoch\ttrain_loss\tdev_lemma_all\tdev_pos_all\tlr\tbatch\n";
    char buf[64];
    const auto cell = [&buf](const std::optional<double>& v) -> std::string {
        if (!v) return "NA";
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return buf;
    };
    for (const EpochRecord& rec : history) {
        std::snprintf(buf, sizeof buf, "%.6f", rec.train_loss);
        out << rec.epoch << '\t' << buf << '\t' << cell(rec.dev_lemma_all) << '\t'
            << cell(rec.dev_pos_all) << '\t';
        std::snprintf(buf, sizeof buf, "%.8g", rec.lr);
        out << buf << '\t' << rec.batch_size << '\n';
    }
    if (!out) throw IoError("failed writing history: " + path);
}

} // namespace lattag
