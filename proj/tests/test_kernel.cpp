#include <stdexcept>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pft/linalg.hpp"
#include "pft/model.hpp"
#include "pft/rng.hpp"
#include "support/oracles.hpp"

using namespace pft;

namespace {

// Mirrors a production model into the oracle's flat layout.
oracle::FlatModel flatten(const ModelState& model, const std::string& task_id) {
    oracle::FlatModel m;
    m.input_dim = model.input_dim();
    m.hidden_dim = model.hidden_dim();
    const HeadParams& head = model.head(task_id);
    m.n_labels = head.n_labels();
    m.w1 = model.encoder.w1.data;
    m.b1 = model.encoder.b1;
    m.head_w = head.w.data;
    m.head_b = head.b;
    return m;
}

}  // namespace

TEST_CASE("matrix storage and matvec") {
    Matrix m(2, 3, 0.0);
    m(0, 0) = 1.0;
    m(0, 2) = 2.0;
    m(1, 1) = -3.0;
    CHECK(m.size() == 6);

    Vector y = matvec(m, {1.0, 2.0, 3.0});
    CHECK(y.size() == 2);
    CHECK(y[0] == doctest::Approx(7.0));
    CHECK(y[1] == doctest::Approx(-6.0));

    CHECK_THROWS_AS(matvec(m, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("finiteness guards") {
    std::vector<double> good{0.0, -1.5, 3.0};
    CHECK(all_finite(good));
    CHECK_NOTHROW(ensure_finite(good, "good"));

    std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_FALSE(all_finite(bad));
    CHECK_THROWS_WITH_AS(ensure_finite(bad, "gradients"),
                         doctest::Contains("gradients"), std::domain_error);

    std::vector<double> inf{std::numeric_limits<double>::infinity()};
    CHECK_FALSE(all_finite(inf));
}

TEST_CASE("init_model respects fan-in bounds and head order") {
    Rng rng(7);
    ModelState model = init_model(4, 6, {{"b_task", 3}, {"a_task", 5}}, rng);

    CHECK(model.input_dim() == 4);
    CHECK(model.hidden_dim() == 6);
    REQUIRE(model.heads.size() == 2);
    CHECK(model.head("b_task").n_labels() == 3);
    CHECK(model.head("a_task").n_labels() == 5);
    CHECK_THROWS(model.head("missing"));

    const double s1 = 1.0 / std::sqrt(4.0);
    for (double w : model.encoder.w1.data) {
        CHECK(w >= -s1);
        CHECK(w <= s1);
    }
    for (double b : model.encoder.b1) CHECK(b == 0.0);

    const double s2 = 1.0 / std::sqrt(6.0);
    for (double w : model.head("a_task").w.data) {
        CHECK(w >= -s2);
        CHECK(w <= s2);
    }
    for (double b : model.head("b_task").b) CHECK(b == 0.0);

    Rng rng2(7);
    ModelState again = init_model(4, 6, {{"b_task", 3}, {"a_task", 5}}, rng2);
    CHECK(again == model);
}

TEST_CASE("encode applies the rectifier and reports preactivations") {
    EncoderParams enc;
    enc.w1 = Matrix(2, 2, 0.0);
    enc.w1(0, 0) = 1.0;
    enc.w1(1, 1) = -1.0;
    enc.b1 = {0.5, 0.5};

    Vector pre;
    Vector h = encode(enc, {1.0, 2.0}, &pre);
    CHECK(pre[0] == doctest::Approx(1.5));
    CHECK(pre[1] == doctest::Approx(-1.5));
    CHECK(h[0] == doctest::Approx(1.5));
    CHECK(h[1] == 0.0);
}

TEST_CASE("forward routes through the named head") {
    Rng rng(11);
    ModelState model = init_model(3, 4, {{"one", 2}, {"two", 5}}, rng);
    Vector x{0.3, -0.2, 1.0};
    CHECK(forward(model, "one", x).size() == 2);
    CHECK(forward(model, "two", x).size() == 5);
    CHECK_THROWS_WITH_AS(forward(model, "three", x), doctest::Contains("three"),
                         std::invalid_argument);
    CHECK_THROWS_AS(forward(model, "one", {1.0}), std::invalid_argument);
}

TEST_CASE("cross_entropy matches the naive definition and stays stable") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        std::vector<double> logits(n);
        for (double& l : logits) l = 4.0 * (rng.uniform(0.0, 1.0) - 0.5);
        const std::size_t label = rng.below(n);
        CHECK(cross_entropy(logits, label) ==
              doctest::Approx(oracle::cross_entropy(logits, label)).epsilon(1e-12));
    }

    // The naive formula would overflow here.
    const double big = cross_entropy({1000.0, 0.0}, 0);
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(0.0).epsilon(1e-12));
    const double worst = cross_entropy({1000.0, 0.0}, 1);
    CHECK(worst == doctest::Approx(1000.0).epsilon(1e-9));

    CHECK_THROWS_AS(cross_entropy({0.0, 1.0}, 2), std::out_of_range);
}

TEST_CASE("backward agrees with independent central differences") {
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t input = 2 + rng.below(5);
        const std::size_t hidden = 2 + rng.below(5);
        const std::size_t n_labels = 2 + rng.below(4);
        Rng model_rng(1000 + static_cast<std::uint64_t>(trial));
        ModelState model = init_model(input, hidden, {{"t", n_labels}}, model_rng);

        Vector x(input);
        for (double& v : x) v = 2.0 * (rng.uniform(0.0, 1.0) - 0.5);
        const std::size_t label = rng.below(n_labels);

        ModelGradients grads = backward(model, "t", x, label);
        CHECK(grads.loss == doctest::Approx(cross_entropy(forward(model, "t", x), label))
                                .epsilon(1e-12));

        oracle::FlatModel flat = flatten(model, "t");
        auto compare = [&](int which, const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < analytic.size(); ++i) {
                const double fd = oracle::fd_gradient(flat, which, i, x, label, 1e-5);
                const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
                worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
            }
        };
        compare(0, grads.dw1.data);
        compare(1, grads.db1);
        compare(2, grads.dhead_w.data);
        compare(3, grads.dhead_b);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("grad_check passes on healthy models and names parameters") {
    Rng rng(3);
    ModelState model = init_model(4, 5, {{"alpha", 3}, {"beta", 2}}, rng);
    std::vector<GradCheckSample> samples;
    for (int i = 0; i < 3; ++i) {
        Vector x(4);
        for (double& v : x) v = rng.gaussian();
        samples.push_back({i % 2 == 0 ? "alpha" : "beta", x, static_cast<std::size_t>(i % 2)});
    }
    GradCheckReport report = grad_check(model, samples);
    CHECK(report.max_relative_error < 1e-4);
    REQUIRE_FALSE(report.per_parameter.empty());
    CHECK_FALSE(report.per_parameter.front().parameter.empty());
}

TEST_CASE("sgd_step follows the momentum update rule") {
    std::vector<double> p{1.0};
    std::vector<double> v{0.0};
    std::vector<double> g{2.0};

    sgd_step(p, v, g, 0.1, 0.9);
    CHECK(v[0] == doctest::Approx(2.0));
    CHECK(p[0] == doctest::Approx(0.8));

    sgd_step(p, v, g, 0.1, 0.9);
    CHECK(v[0] == doctest::Approx(0.9 * 2.0 + 2.0));
    CHECK(p[0] == doctest::Approx(0.8 - 0.1 * 3.8));

    SUBCASE("zero learning rate is a velocity-only no-op for parameters") {
        std::vector<double> p2{5.0};
        std::vector<double> v2{1.0};
        sgd_step(p2, v2, g, 0.0, 0.5);
        CHECK(p2[0] == 5.0);
    }

    SUBCASE("invalid inputs throw") {
        std::vector<double> bad{std::numeric_limits<double>::quiet_NaN()};
        CHECK_THROWS(sgd_step(p, v, g, -0.1, 0.9));
        CHECK_THROWS(sgd_step(p, v, g, 0.1, -0.1));
        CHECK_THROWS(sgd_step(p, v, bad, 0.1, 0.9));
        std::vector<double> short_v{};
        CHECK_THROWS(sgd_step(p, short_v, g, 0.1, 0.9));
    }
}

TEST_CASE("argmax prefers the lowest index on ties") {
    CHECK(argmax({0.1, 0.9, 0.3}) == 1);
    CHECK(argmax({0.5, 0.5, 0.5}) == 0);
    CHECK(argmax({-1.0}) == 0);
}
