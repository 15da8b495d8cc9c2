#include "pft/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace pft {

Matrix::Matrix(std::size_t r, std::size_t c, double fill) : rows(r), cols(c), data(r * c, fill) {
    if (r == 0 || c == 0) {
        throw std::invalid_argument("Matrix dimensions must be strictly positive, got " +
                                    std::to_string(r) + "x" + std::to_string(c));
    }
}

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void ensure_finite(std::span<const double> values, const std::string& what) {
    if (!all_finite(values)) {
        throw std::domain_error("non-finite value in " + what);
    }
}

Vector matvec(const Matrix& m, const Vector& x) {
    if (m.cols != x.size()) {
        throw std::invalid_argument("matvec dimension mismatch: matrix is " +
                                    std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                    ", vector has " + std::to_string(x.size()) + " entries");
    }
    Vector y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

}  // namespace pft
