#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace oracle {

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

BinaryF1 macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("oracle::macro_f1: size mismatch");
    }
    std::size_t tp0 = 0, fp0 = 0, fn0 = 0;
    std::size_t tp1 = 0, fp1 = 0, fn1 = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if (p == 0 && y == 0) ++tp0;
        if (p == 0 && y == 1) ++fp0;
        if (p == 1 && y == 0) ++fn0;
        if (p == 1 && y == 1) ++tp1;
        if (p == 1 && y == 0) ++fp1;
        if (p == 0 && y == 1) ++fn1;
    }
    BinaryF1 out;
    out.f1_class0 = f1_from_counts(tp0, fp0, fn0);
    out.f1_class1 = f1_from_counts(tp1, fp1, fn1);
    out.macro = (out.f1_class0 + out.f1_class1) / 2.0;
    return out;
}

double best_constant_f1(const std::vector<int>& labels) {
    double best = 0.0;
    for (int constant : {0, 1}) {
        std::vector<int> predictions(labels.size(), constant);
        best = std::max(best, macro_f1(predictions, labels).macro);
    }
    return best;
}

MeanStderr mean_stderr(const std::vector<double>& values) {
    MeanStderr out;
    if (values.empty()) throw std::invalid_argument("oracle::mean_stderr: empty input");
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) return out;
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    const double sample_var = sq / static_cast<double>(values.size() - 1);
    out.std_error = std::sqrt(sample_var) / std::sqrt(static_cast<double>(values.size()));
    return out;
}

double cross_entropy(const std::vector<double>& logits, std::size_t label) {
    if (label >= logits.size()) throw std::invalid_argument("oracle::cross_entropy: bad label");
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    return -std::log(std::exp(logits[label]) / z);
}

double forward_loss(const FlatModel& m, const std::vector<double>& x, std::size_t label) {
    std::vector<double> hidden(m.hidden_dim, 0.0);
    for (std::size_t h = 0; h < m.hidden_dim; ++h) {
        double acc = m.b1[h];
        for (std::size_t i = 0; i < m.input_dim; ++i) acc += m.w1[h * m.input_dim + i] * x[i];
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> logits(m.n_labels, 0.0);
    for (std::size_t c = 0; c < m.n_labels; ++c) {
        double acc = m.head_b[c];
        for (std::size_t h = 0; h < m.hidden_dim; ++h) acc += m.head_w[c * m.hidden_dim + h] * hidden[h];
        logits[c] = acc;
    }
    return cross_entropy(logits, label);
}

double fd_gradient(FlatModel m, int which, std::size_t index, const std::vector<double>& x,
                   std::size_t label, double epsilon) {
    std::vector<double>* tensor = nullptr;
    switch (which) {
        case 0: tensor = &m.w1; break;
        case 1: tensor = &m.b1; break;
        case 2: tensor = &m.head_w; break;
        case 3: tensor = &m.head_b; break;
        default: throw std::invalid_argument("oracle::fd_gradient: bad tensor selector");
    }
    const double saved = (*tensor)[index];
    (*tensor)[index] = saved + epsilon;
    const double up = forward_loss(m, x, label);
    (*tensor)[index] = saved - epsilon;
    const double down = forward_loss(m, x, label);
    (*tensor)[index] = saved;
    return (up - down) / (2.0 * epsilon);
}

std::vector<CurveCell> curve_groups(const std::vector<FlatRecord>& records,
                                    const std::vector<std::pair<int, int>>& config_sizes) {
    auto size_of = [&](int config_id) {
        for (const auto& [id, size] : config_sizes) {
            if (id == config_id) return size;
        }
        throw std::invalid_argument("oracle::curve_groups: unknown config_id");
    };

    std::vector<std::pair<int, int>> seen;  // (k, n_corpora) already emitted
    std::vector<CurveCell> out;
    for (const FlatRecord& pivot : records) {
        if (!pivot.ok) continue;
        const int n = size_of(pivot.config_id);
        const std::pair<int, int> key{pivot.k, n};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);

        std::vector<double> values;
        for (const FlatRecord& r : records) {
            if (!r.ok) continue;
            if (r.k == pivot.k && size_of(r.config_id) == n) values.push_back(r.macro_f1);
        }
        const MeanStderr ms = mean_stderr(values);
        out.push_back({pivot.k, n, ms.mean, ms.std_error, values.size()});
    }
    std::sort(out.begin(), out.end(), [](const CurveCell& a, const CurveCell& b) {
        if (a.k != b.k) return a.k < b.k;
        return a.n_corpora < b.n_corpora;
    });
    return out;
}

}  // namespace oracle
