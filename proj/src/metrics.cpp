#include "pft/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pft {

ConfusionCounts confusion_counts(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("confusion_counts: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(labels.size()) +
                                    " labels");
    }
    if (predictions.empty()) throw std::invalid_argument("confusion_counts: empty input");

    ConfusionCounts counts;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
            throw std::invalid_argument("confusion_counts: values must be 0 or 1");
        }
        if (p == y) {
            counts.tp[static_cast<std::size_t>(y)] += 1;
        } else {
            counts.fp[static_cast<std::size_t>(p)] += 1;
            counts.fn[static_cast<std::size_t>(y)] += 1;
        }
    }
    return counts;
}

F1Report macro_f1(std::span<const int> predictions, std::span<const int> labels) {
    const ConfusionCounts c = confusion_counts(predictions, labels);
    F1Report report;
    for (std::size_t cls = 0; cls < 2; ++cls) {
        const double denom = static_cast<double>(2 * c.tp[cls] + c.fp[cls] + c.fn[cls]);
        report.per_class_f1[cls] = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp[cls]) / denom;
        report.support[cls] = c.tp[cls] + c.fn[cls];
    }
    report.macro_f1 = (report.per_class_f1[0] + report.per_class_f1[1]) / 2.0;
    return report;
}

double constant_baseline(std::span<const int> labels) {
    if (labels.empty()) throw std::invalid_argument("constant_baseline: empty input");
    double best = 0.0;
    std::vector<int> constant(labels.size());
    for (int c = 0; c <= 1; ++c) {
        for (auto& v : constant) v = c;
        best = std::max(best, macro_f1(constant, labels).macro_f1);
    }
    return best;
}

MeanStderr mean_and_stderr(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_and_stderr: empty input");
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sample_std = std::sqrt(ss / (n - 1.0));
    return {mean, sample_std / std::sqrt(n)};
}

}  // namespace pft
