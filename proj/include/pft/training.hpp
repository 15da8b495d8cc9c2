#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pft/corpus.hpp"
#include "pft/model.hpp"
#include "pft/sampler.hpp"

namespace pft {

/// Per-instance loss divided by ln of the task's label-space size, so tasks
/// with different numbers of classes contribute comparable magnitudes.
double scaled_loss(double raw, std::size_t n_labels);

struct OptimizerConfig {
    double lr = 0.0001;
    double momentum = 0.9;
};

/// Tracks the best epoch under a no-improvement patience rule. Improvement is
/// strict; the stop epoch is the first e with e - best_epoch >= patience.
class EarlyStopper {
  public:
    explicit EarlyStopper(std::size_t patience);

    /// Returns true when `loss` improves on the best seen so far.
    bool observe(std::size_t epoch, double loss);
    bool should_stop(std::size_t epoch) const;

    double best_loss() const { return best_loss_; }
    std::size_t best_epoch() const { return best_epoch_; }
    std::size_t stale_epochs(std::size_t epoch) const { return epoch - best_epoch_; }

  private:
    std::size_t patience_;
    double best_loss_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
};

struct PrefinetuneSpec {
    std::vector<std::string> corpus_set;  // names, canonical (sorted) order; may be empty
    int config_id = 1;
    std::size_t input_dim = 16;
    std::size_t hidden_dim = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 3;
    OptimizerConfig opt;
    std::uint64_t seed = 0;
};

struct FinetuneSpec {
    FewShotSpec few_shot;
    std::size_t max_epochs = 200;
    std::size_t patience = 30;
    OptimizerConfig opt;
};

struct EpochPoint {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double monitored_loss = 0.0;  // validation loss, or training loss downstream
};

struct TrainState {
    double best_monitored_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    std::size_t epochs_since_improvement = 0;
    std::vector<EpochPoint> curve;
};

struct TrainResult {
    ModelState model;  // parameters from the best epoch, not the last
    TrainState state;
};

/// Thrown when a loss turns NaN/Inf mid-run; carries where it happened.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Multi-task pre-finetuning. Each step samples a task uniformly, draws one
/// training instance from it, routes through that task's head and applies an
/// SGD step on the scaled-loss gradient. One epoch is the total train size of
/// the selected corpora. An empty corpus set returns the seed-initialized
/// encoder with no heads and runs zero epochs.
TrainResult prefinetune(const PrefinetuneSpec& spec, const std::vector<const Corpus*>& corpora);

/// Unweighted mean over tasks of each task's mean scaled validation loss.
double validation_loss(const ModelState& model, const std::vector<const Corpus*>& corpora);

/// Binary head id attached by finetune().
inline constexpr const char* kBinaryHeadId = "target";

/// Downstream fine-tuning: attaches a fresh 2-class head, updates encoder and
/// head jointly with unscaled cross-entropy, and early-stops on the few-shot
/// training loss (no validation split is possible at k=2).
TrainResult finetune(const ModelState& base, const FewShotSample& train_set,
                     const FinetuneSpec& spec);

}  // namespace pft
