#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lattag/kernels.hpp"
#include "lattag/model.hpp"

namespace lattag {

struct TrainConfig {
    std::size_t max_epochs = 15;
    std::size_t batch_size_initial = 100;
    double lr_initial = 1e-3;
    double rho = 0.9;
    double epsilon = 1e-6;
    std::size_t schedule_epoch = 10; // after this epoch lr and batch size shrink once
    double lr_factor = 3.0;
    double batch_factor = 3.0;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    std::optional<double> dev_lemma_all, dev_lemma_known, dev_lemma_unknown;
    std::optional<double> dev_pos_all, dev_pos_known, dev_pos_unknown;
    double lr = 0.0;
    std::size_t batch_size = 0;
    double wall_seconds = 0.0;
    double selection_metric = 0.0; // mean of active heads' dev all-token accuracy
};

using TrainHistory = std::vector<EpochRecord>;

struct Checkpoint {
    ModelParameters<float> model;
    std::size_t epoch = 0;
    double selection_metric = 0.0;
};

struct FitResult {
    Checkpoint best;
    TrainHistory history;
};

// acc <- rho*acc + (1-rho)*grad^2 ; value <- value - lr*grad/(sqrt(acc)+eps);
// the gradient is zeroed afterwards.
template <typename T>
void rmsprop_update(Parameter<T>& param, double lr, double rho, double eps) {
    const std::size_t n = param.value.size();
    T* value = param.value.data();
    T* grad = param.grad.data();
    T* acc = param.rms_acc.data();
    const bool big = n >= kernel_detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double a = rho * static_cast<double>(acc[i]) + (1.0 - rho) * g * g;
        acc[i] = static_cast<T>(a);
        value[i] = static_cast<T>(static_cast<double>(value[i]) -
                                  lr * g / (std::sqrt(a) + eps));
        grad[i] = T(0);
    }
}

// (learning rate, batch size) in effect for a 1-based epoch number.
std::pair<double, std::size_t> schedule_for_epoch(const TrainConfig& cfg, std::size_t epoch);

bool should_stop_early(std::size_t current_epoch, std::size_t best_epoch, std::size_t patience);

// Minibatch RMSprop training with per-epoch dev evaluation; returns the
// checkpoint with the best selection metric plus the full history.
FitResult fit(ModelParameters<float>& model, const Corpus& train, const Corpus& dev,
              const TrainConfig& cfg,
              const std::function<void(const EpochRecord&)>& on_epoch = {});

// Versioned binary model file; see README for the exact layout.
void save_model(const Checkpoint& checkpoint, const std::string& path);
ModelParameters<float> load_model(const std::string& path);

void write_history_tsv(const TrainHistory& history, const std::string& path);

} // namespace lattag
