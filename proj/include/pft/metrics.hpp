#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace pft {

/// Binary confusion counts, one entry per class.
struct ConfusionCounts {
    std::array<std::size_t, 2> tp{0, 0};
    std::array<std::size_t, 2> fp{0, 0};
    std::array<std::size_t, 2> fn{0, 0};
};

struct F1Report {
    double macro_f1 = 0.0;
    std::array<double, 2> per_class_f1{0.0, 0.0};
    std::array<std::size_t, 2> support{0, 0};
};

ConfusionCounts confusion_counts(std::span<const int> predictions, std::span<const int> labels);

/// Per-class F1 = 2tp / (2tp + fp + fn), defined as 0 when the denominator is
/// 0; macro is the unweighted mean over both classes.
F1Report macro_f1(std::span<const int> predictions, std::span<const int> labels);

/// Best macro F1 achievable by always predicting a single fixed class.
double constant_baseline(std::span<const int> labels);

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;  // sample std (n-1 denominator) / sqrt(n); 0 when n = 1
};

MeanStderr mean_and_stderr(std::span<const double> values);

}  // namespace pft
