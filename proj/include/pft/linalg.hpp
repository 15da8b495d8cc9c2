#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pft {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }

    bool operator==(const Matrix& other) const = default;
};

bool all_finite(std::span<const double> values);

/// Throws std::domain_error naming `what` if any value is NaN or infinite.
void ensure_finite(std::span<const double> values, const std::string& what);

/// y = M x. Throws on dimension mismatch.
Vector matvec(const Matrix& m, const Vector& x);

}  // namespace pft
