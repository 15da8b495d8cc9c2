#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pft/linalg.hpp"
#include "pft/rng.hpp"

namespace pft {

/// Single hidden layer with rectifier activation.
struct EncoderParams {
    Matrix w1;  // hidden x input
    Vector b1;  // hidden

    std::size_t input_dim() const { return w1.cols; }
    std::size_t hidden_dim() const { return w1.rows; }

    bool operator==(const EncoderParams&) const = default;
};

/// Linear classification head bound to one task.
struct HeadParams {
    Matrix w;  // n_labels x hidden
    Vector b;  // n_labels
    std::string task_id;

    std::size_t n_labels() const { return w.rows; }

    bool operator==(const HeadParams&) const = default;
};

/// Shared encoder plus one head per task.
struct ModelState {
    EncoderParams encoder;
    std::map<std::string, HeadParams> heads;

    std::size_t input_dim() const { return encoder.input_dim(); }
    std::size_t hidden_dim() const { return encoder.hidden_dim(); }
    const HeadParams& head(const std::string& task_id) const;

    bool operator==(const ModelState&) const = default;
};

/// Gradients of the cross-entropy of one instance, for the encoder and the
/// routed head only. `loss` carries the forward value so training loops do
/// not need a second pass.
struct ModelGradients {
    Matrix dw1;
    Vector db1;
    Matrix dhead_w;
    Vector dhead_b;
    std::string task_id;
    double loss = 0.0;
};

struct ParamError {
    std::string parameter;  // e.g. "encoder.w1[3]", "head[improv].b[0]"
    double relative_error;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::vector<ParamError> per_parameter;
};

struct GradCheckSample {
    std::string task_id;
    Vector x;
    std::size_t label;
};

/// Weights uniform in [-s, s] with s = 1/sqrt(fan_in); biases zero. Heads are
/// initialized in the order given.
ModelState init_model(std::size_t input_dim, std::size_t hidden_dim,
                      const std::vector<std::pair<std::string, std::size_t>>& heads, Rng& rng);

HeadParams init_head(const std::string& task_id, std::size_t n_labels, std::size_t hidden_dim,
                     Rng& rng);

/// relu(W1 x + b1). If `preactivation` is non-null it receives W1 x + b1.
Vector encode(const EncoderParams& encoder, const Vector& x, Vector* preactivation = nullptr);

/// Logits of the routed head. Throws on unknown task or dimension mismatch.
Vector forward(const ModelState& model, const std::string& task_id, const Vector& x);

/// Numerically stable cross-entropy (max-subtraction log-sum-exp).
double cross_entropy(const Vector& logits, std::size_t label);

ModelGradients backward(const ModelState& model, const std::string& task_id, const Vector& x,
                        std::size_t label);

/// v <- momentum*v + g; p <- p - lr*v. lr may be zero (a no-op update);
/// negative or non-finite hyperparameters, shape mismatches and non-finite
/// gradients throw.
void sgd_step(std::span<double> params, std::span<double> velocity, std::span<const double> grad,
              double lr, double momentum);

/// Compares backward against central finite differences over every parameter
/// the samples touch. Errors where both sides are below 1e-12 count as zero.
GradCheckReport grad_check(const ModelState& model, const std::vector<GradCheckSample>& samples,
                           double epsilon = 1e-5);

/// Lowest index wins ties.
std::size_t argmax(const Vector& values);

}  // namespace pft
