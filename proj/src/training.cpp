#include "pft/training.hpp"

#include <cmath>
#include <stdexcept>

namespace pft {

double scaled_loss(double raw, std::size_t n_labels) {
    if (n_labels < 2) {
        throw std::invalid_argument("scaled_loss: label space size must be >= 2, got " +
                                    std::to_string(n_labels));
    }
    if (!(raw >= 0.0)) {
        throw std::invalid_argument("scaled_loss: raw loss must be non-negative");
    }
    return raw / std::log(static_cast<double>(n_labels));
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience == 0) throw std::invalid_argument("EarlyStopper: patience must be positive");
}

bool EarlyStopper::observe(std::size_t epoch, double loss) {
    if (loss < best_loss_) {
        best_loss_ = loss;
        best_epoch_ = epoch;
        return true;
    }
    return false;
}

bool EarlyStopper::should_stop(std::size_t epoch) const {
    return epoch - best_epoch_ >= patience_;
}

namespace {

/// Velocity buffers mirroring the model; heads keep their momentum across
/// steps that do not touch them.
struct SgdState {
    Matrix vel_w1;
    Vector vel_b1;
    std::map<std::string, std::pair<Matrix, Vector>> heads;

    explicit SgdState(const ModelState& model)
        : vel_w1(model.encoder.w1.rows, model.encoder.w1.cols),
          vel_b1(model.encoder.b1.size(), 0.0) {
        for (const auto& [task_id, head] : model.heads) {
            heads.emplace(task_id,
                          std::make_pair(Matrix(head.w.rows, head.w.cols),
                                         Vector(head.b.size(), 0.0)));
        }
    }
};

/// One optimizer step on the encoder and the routed head. `scale` multiplies
/// the raw cross-entropy gradient (1/ln n for pre-finetuning, 1 downstream).
void apply_step(ModelState& model, SgdState& sgd, const ModelGradients& grads,
                const OptimizerConfig& opt, double scale) {
    auto scaled = [scale](const std::vector<double>& g) {
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = scale * g[i];
        return out;
    };
    sgd_step(model.encoder.w1.data, sgd.vel_w1.data, scaled(grads.dw1.data), opt.lr, opt.momentum);
    sgd_step(model.encoder.b1, sgd.vel_b1, scaled(grads.db1), opt.lr, opt.momentum);
    auto& head = model.heads.at(grads.task_id);
    auto& [vel_w, vel_b] = sgd.heads.at(grads.task_id);
    sgd_step(head.w.data, vel_w.data, scaled(grads.dhead_w.data), opt.lr, opt.momentum);
    sgd_step(head.b, vel_b, scaled(grads.dhead_b), opt.lr, opt.momentum);
}

}  // namespace

double validation_loss(const ModelState& model, const std::vector<const Corpus*>& corpora) {
    if (corpora.empty()) throw std::invalid_argument("validation_loss: no corpora");
    double task_sum = 0.0;
    for (const Corpus* corpus : corpora) {
        if (!model.heads.count(corpus->name)) {
            throw std::invalid_argument("validation_loss: no head for task '" + corpus->name +
                                        "'");
        }
        const auto indices = corpus->indices_of(Split::Validation);
        if (indices.empty()) {
            throw std::runtime_error("validation_loss: corpus '" + corpus->name +
                                     "' has an empty validation split");
        }
        const std::size_t n_labels = corpus->label_space.size();
        double instance_sum = 0.0;
        for (std::size_t idx : indices) {
            const Utterance& u = corpus->utterances[idx];
            const double raw = cross_entropy(forward(model, corpus->name, u.features), u.label);
            instance_sum += scaled_loss(raw, n_labels);
        }
        task_sum += instance_sum / static_cast<double>(indices.size());
    }
    return task_sum / static_cast<double>(corpora.size());
}

TrainResult prefinetune(const PrefinetuneSpec& spec, const std::vector<const Corpus*>& corpora) {
    if (corpora.size() != spec.corpus_set.size()) {
        throw std::invalid_argument("prefinetune: spec lists " +
                                    std::to_string(spec.corpus_set.size()) + " corpora, got " +
                                    std::to_string(corpora.size()));
    }
    for (std::size_t i = 0; i < corpora.size(); ++i) {
        if (corpora[i]->name != spec.corpus_set[i]) {
            throw std::invalid_argument("prefinetune: corpus order mismatch at position " +
                                        std::to_string(i) + " ('" + corpora[i]->name + "' vs '" +
                                        spec.corpus_set[i] + "')");
        }
    }
    if (spec.patience == 0 || spec.patience > spec.max_epochs) {
        throw std::invalid_argument("prefinetune: patience must be in [1, max_epochs]");
    }

    Rng init_rng(derive_seed(spec.seed, "init"));

    // Baseline: a fresh encoder with no heads, zero updates.
    if (corpora.empty()) {
        TrainResult result;
        result.model = init_model(spec.input_dim, spec.hidden_dim, {}, init_rng);
        return result;
    }

    const std::size_t input_dim = spec.input_dim;
    std::vector<std::pair<std::string, std::size_t>> head_defs;
    std::size_t steps_per_epoch = 0;
    std::map<std::string, std::vector<std::size_t>> train_indices;
    std::map<std::string, const Corpus*> by_name;
    for (const Corpus* corpus : corpora) {
        if (corpus->dim != input_dim) {
            throw std::invalid_argument("prefinetune: corpus '" + corpus->name +
                                        "' feature dimension mismatch");
        }
        head_defs.emplace_back(corpus->name, corpus->label_space.size());
        auto idx = corpus->indices_of(Split::Train);
        if (idx.empty()) {
            throw std::runtime_error("prefinetune: corpus '" + corpus->name +
                                     "' has an empty train split");
        }
        steps_per_epoch += idx.size();
        train_indices.emplace(corpus->name, std::move(idx));
        by_name.emplace(corpus->name, corpus);
    }

    ModelState model = init_model(input_dim, spec.hidden_dim, head_defs, init_rng);
    SgdState sgd(model);
    TaskSampleStream tasks(spec.corpus_set, derive_seed(spec.seed, "tasks"));
    Rng pick_rng(derive_seed(spec.seed, "instances"));

    EarlyStopper stopper(spec.patience);
    TrainResult result;
    result.model = model;  // replaced on first improvement
    TrainState& state = result.state;

    for (std::size_t epoch = 1; epoch <= spec.max_epochs; ++epoch) {
        double train_loss_sum = 0.0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            const std::string& task = tasks.sample();
            const auto& pool = train_indices.at(task);
            const Corpus& corpus = *by_name.at(task);
            const Utterance& u = corpus.utterances[pool[pick_rng.below(pool.size())]];

            ModelGradients grads;
            try {
                grads = backward(model, task, u.features, u.label);
            } catch (const std::domain_error& e) {
                // Overflowing gradients are the same runaway-step event as a
                // non-finite loss; surface both as divergence.
                throw TrainingDiverged("pre-finetuning diverged at epoch " +
                                       std::to_string(epoch) + ", task '" + task +
                                       "': " + e.what());
            }
            const double loss = scaled_loss(grads.loss, corpus.label_space.size());
            if (!std::isfinite(loss)) {
                throw TrainingDiverged("pre-finetuning loss diverged at epoch " +
                                       std::to_string(epoch) + ", task '" + task + "'");
            }
            train_loss_sum += loss;
            const double scale = 1.0 / std::log(static_cast<double>(corpus.label_space.size()));
            apply_step(model, sgd, grads, spec.opt, scale);
        }

        const double val = validation_loss(model, corpora);
        if (!std::isfinite(val)) {
            throw TrainingDiverged("validation loss diverged at epoch " + std::to_string(epoch));
        }
        state.epochs_run = epoch;
        state.curve.push_back(
            {epoch, train_loss_sum / static_cast<double>(steps_per_epoch), val});
        if (stopper.observe(epoch, val)) {
            result.model = model;
        }
        state.best_monitored_loss = stopper.best_loss();
        state.best_epoch = stopper.best_epoch();
        state.epochs_since_improvement = stopper.stale_epochs(epoch);
        if (stopper.should_stop(epoch)) break;
    }
    return result;
}

TrainResult finetune(const ModelState& base, const FewShotSample& train_set,
                     const FinetuneSpec& spec) {
    if (train_set.instances.empty()) {
        throw std::invalid_argument("finetune: empty training set");
    }
    if (train_set.instances.size() != train_set.labels.size()) {
        throw std::invalid_argument("finetune: instances/labels size mismatch");
    }
    for (const Utterance& u : train_set.instances) {
        if (u.features.size() != base.input_dim()) {
            throw std::invalid_argument("finetune: feature dimension " +
                                        std::to_string(u.features.size()) +
                                        " does not match encoder input " +
                                        std::to_string(base.input_dim()));
        }
    }
    if (spec.patience == 0 || spec.patience > spec.max_epochs) {
        throw std::invalid_argument("finetune: patience must be in [1, max_epochs]");
    }

    Rng rng(derive_seed(spec.few_shot.seed, "finetune"));

    // Pre-finetuned knowledge transfers only through the encoder; all
    // pre-finetuning heads are dropped.
    ModelState model;
    model.encoder = base.encoder;
    model.heads.emplace(kBinaryHeadId, init_head(kBinaryHeadId, 2, base.hidden_dim(), rng));

    SgdState sgd(model);
    EarlyStopper stopper(spec.patience);
    TrainResult result;
    result.model = model;
    TrainState& state = result.state;

    const std::size_t n = train_set.instances.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= spec.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            ModelGradients grads;
            try {
                grads = backward(model, kBinaryHeadId,
                                 train_set.instances[i].features,
                                 static_cast<std::size_t>(train_set.labels[i]));
            } catch (const std::domain_error& e) {
                throw TrainingDiverged("few-shot training diverged at epoch " +
                                       std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(grads.loss)) {
                throw TrainingDiverged("few-shot loss diverged at epoch " +
                                       std::to_string(epoch));
            }
            apply_step(model, sgd, grads, spec.opt, 1.0);
        }

        double loss_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss_sum += cross_entropy(
                forward(model, kBinaryHeadId, train_set.instances[i].features),
                static_cast<std::size_t>(train_set.labels[i]));
        }
        const double train_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(train_loss)) {
            throw TrainingDiverged("few-shot training loss diverged at epoch " +
                                   std::to_string(epoch));
        }
        state.epochs_run = epoch;
        state.curve.push_back({epoch, train_loss, train_loss});
        if (stopper.observe(epoch, train_loss)) {
            result.model = model;
        }
        state.best_monitored_loss = stopper.best_loss();
        state.best_epoch = stopper.best_epoch();
        state.epochs_since_improvement = stopper.stale_epochs(epoch);
        if (stopper.should_stop(epoch)) break;
    }
    return result;
}

}  // namespace pft
