#include "pft/model.hpp"

#include <cmath>
#include <stdexcept>

namespace pft {

const HeadParams& ModelState::head(const std::string& task_id) const {
    auto it = heads.find(task_id);
    if (it == heads.end()) {
        throw std::invalid_argument("unknown task_id '" + task_id + "'");
    }
    return it->second;
}

static Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    Matrix m(rows, cols);
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : m.data) v = rng.uniform(-s, s);
    return m;
}

HeadParams init_head(const std::string& task_id, std::size_t n_labels, std::size_t hidden_dim,
                     Rng& rng) {
    if (n_labels < 2) {
        throw std::invalid_argument("head '" + task_id + "' needs at least 2 labels");
    }
    HeadParams head;
    head.w = uniform_matrix(n_labels, hidden_dim, hidden_dim, rng);
    head.b = Vector(n_labels, 0.0);
    head.task_id = task_id;
    return head;
}

ModelState init_model(std::size_t input_dim, std::size_t hidden_dim,
                      const std::vector<std::pair<std::string, std::size_t>>& heads, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0) {
        throw std::invalid_argument("model dimensions must be strictly positive");
    }
    ModelState model;
    model.encoder.w1 = uniform_matrix(hidden_dim, input_dim, input_dim, rng);
    model.encoder.b1 = Vector(hidden_dim, 0.0);
    for (const auto& [task_id, n_labels] : heads) {
        if (model.heads.count(task_id)) {
            throw std::invalid_argument("duplicate task_id '" + task_id + "'");
        }
        model.heads.emplace(task_id, init_head(task_id, n_labels, hidden_dim, rng));
    }
    return model;
}

Vector encode(const EncoderParams& encoder, const Vector& x, Vector* preactivation) {
    Vector pre = matvec(encoder.w1, x);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += encoder.b1[i];
    Vector hidden(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) hidden[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    if (preactivation) *preactivation = std::move(pre);
    return hidden;
}

Vector forward(const ModelState& model, const std::string& task_id, const Vector& x) {
    const HeadParams& head = model.head(task_id);
    const Vector hidden = encode(model.encoder, x);
    Vector logits = matvec(head.w, hidden);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += head.b[i];
    ensure_finite(logits, "logits of task '" + task_id + "'");
    return logits;
}

static Vector softmax(const Vector& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    Vector p(logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        denom += p[i];
    }
    for (double& v : p) v /= denom;
    return p;
}

double cross_entropy(const Vector& logits, std::size_t label) {
    if (logits.empty()) throw std::invalid_argument("cross_entropy: empty logits");
    if (label >= logits.size()) {
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) + " classes");
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return mx + std::log(sum) - logits[label];
}

ModelGradients backward(const ModelState& model, const std::string& task_id, const Vector& x,
                        std::size_t label) {
    const HeadParams& head = model.head(task_id);
    if (label >= head.n_labels()) {
        throw std::out_of_range("backward: label " + std::to_string(label) +
                                " out of range for task '" + task_id + "'");
    }

    Vector pre;
    const Vector hidden = encode(model.encoder, x, &pre);
    Vector logits = matvec(head.w, hidden);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += head.b[i];

    ModelGradients g;
    g.task_id = task_id;
    g.loss = cross_entropy(logits, label);

    // dlogits = softmax(logits) - onehot(label)
    Vector dlogits = softmax(logits);
    dlogits[label] -= 1.0;

    g.dhead_w = Matrix(head.w.rows, head.w.cols);
    for (std::size_t c = 0; c < head.w.rows; ++c) {
        for (std::size_t h = 0; h < head.w.cols; ++h) {
            g.dhead_w(c, h) = dlogits[c] * hidden[h];
        }
    }
    g.dhead_b = dlogits;

    // dhidden = W^T dlogits, masked by the rectifier
    Vector dpre(hidden.size(), 0.0);
    for (std::size_t h = 0; h < hidden.size(); ++h) {
        if (pre[h] <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t c = 0; c < head.w.rows; ++c) acc += head.w(c, h) * dlogits[c];
        dpre[h] = acc;
    }

    g.dw1 = Matrix(model.encoder.w1.rows, model.encoder.w1.cols);
    for (std::size_t h = 0; h < dpre.size(); ++h) {
        if (dpre[h] == 0.0) continue;
        for (std::size_t i = 0; i < x.size(); ++i) {
            g.dw1(h, i) = dpre[h] * x[i];
        }
    }
    g.db1 = dpre;

    ensure_finite(g.dhead_w.data, "head weight gradient");
    ensure_finite(g.dw1.data, "encoder weight gradient");
    return g;
}

void sgd_step(std::span<double> params, std::span<double> velocity, std::span<const double> grad,
              double lr, double momentum) {
    if (params.size() != velocity.size() || params.size() != grad.size()) {
        throw std::invalid_argument("sgd_step: shape mismatch (" + std::to_string(params.size()) +
                                    " params, " + std::to_string(velocity.size()) + " velocity, " +
                                    std::to_string(grad.size()) + " grad)");
    }
    if (!(lr >= 0.0) || !std::isfinite(lr) || !(momentum >= 0.0) || !std::isfinite(momentum)) {
        throw std::invalid_argument("sgd_step: invalid hyperparameters");
    }
    ensure_finite(grad, "gradient passed to sgd_step");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grad[i];
        params[i] -= lr * velocity[i];
    }
}

std::size_t argmax(const Vector& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

namespace {

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-12) return 0.0;
    return std::abs(a - b) / scale;
}

double loss_over_samples(const ModelState& model, const std::vector<GradCheckSample>& samples) {
    double total = 0.0;
    for (const auto& s : samples) {
        total += cross_entropy(forward(model, s.task_id, s.x), s.label);
    }
    return total;
}

void check_tensor(ModelState& probe, std::vector<double>& values, const std::vector<double>& grad,
                  const std::string& name, const std::vector<GradCheckSample>& samples,
                  double epsilon, GradCheckReport& report) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + epsilon;
        const double up = loss_over_samples(probe, samples);
        values[i] = saved - epsilon;
        const double down = loss_over_samples(probe, samples);
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double err = relative_error(grad[i], numeric);
        report.per_parameter.push_back({name + "[" + std::to_string(i) + "]", err});
        report.max_relative_error = std::max(report.max_relative_error, err);
    }
}

}  // namespace

GradCheckReport grad_check(const ModelState& model, const std::vector<GradCheckSample>& samples,
                           double epsilon) {
    if (samples.empty()) throw std::invalid_argument("grad_check: need at least one sample");

    // Accumulate analytic gradients over the sample set.
    Matrix dw1(model.encoder.w1.rows, model.encoder.w1.cols);
    Vector db1(model.encoder.b1.size(), 0.0);
    std::map<std::string, ModelGradients> head_grads;
    for (const auto& s : samples) {
        ModelGradients g = backward(model, s.task_id, s.x, s.label);
        for (std::size_t i = 0; i < dw1.data.size(); ++i) dw1.data[i] += g.dw1.data[i];
        for (std::size_t i = 0; i < db1.size(); ++i) db1[i] += g.db1[i];
        auto it = head_grads.find(s.task_id);
        if (it == head_grads.end()) {
            head_grads.emplace(s.task_id, std::move(g));
        } else {
            for (std::size_t i = 0; i < it->second.dhead_w.data.size(); ++i) {
                it->second.dhead_w.data[i] += g.dhead_w.data[i];
            }
            for (std::size_t i = 0; i < it->second.dhead_b.size(); ++i) {
                it->second.dhead_b[i] += g.dhead_b[i];
            }
        }
    }

    GradCheckReport report;
    ModelState probe = model;
    check_tensor(probe, probe.encoder.w1.data, dw1.data, "encoder.w1", samples, epsilon, report);
    check_tensor(probe, probe.encoder.b1, db1, "encoder.b1", samples, epsilon, report);
    for (auto& [task_id, g] : head_grads) {
        auto& head = probe.heads.at(task_id);
        check_tensor(probe, head.w.data, g.dhead_w.data, "head[" + task_id + "].w", samples,
                     epsilon, report);
        check_tensor(probe, head.b, g.dhead_b, "head[" + task_id + "].b", samples, epsilon, report);
    }
    return report;
}

}  // namespace pft
