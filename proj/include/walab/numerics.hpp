#pragma once

#include <cstddef>
#include <vector>

#include "walab/errors.hpp"

namespace walab {

// Flat, ordered sequence of 64-bit floats. Every trainable-parameter view,
// gradient, direction vector and NQM iterate in this project is a Vec64.
using Vec64 = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
struct Mat64 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec64 data;  // rows * cols entries

    Mat64() = default;
    Mat64(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Mat64 identity(std::size_t n);
};

// result[i] = a * x[i] + y[i]
Vec64 axpy(double a, const Vec64& x, const Vec64& y);

// In-place y[i] += a * x[i]
void axpy_inplace(double a, const Vec64& x, Vec64& y);

// Standard matrix-vector product.
Vec64 matvec(const Mat64& m, const Vec64& x);

double dot(const Vec64& x, const Vec64& y);
double norm2(const Vec64& x);

// Compensated accumulator. Summation order is fixed by the caller, so merged
// results are reproducible to ~1e-14 independent of how work was partitioned.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

bool all_finite(const Vec64& x);

// Throws DimensionError unless the two lengths agree.
void require_same_length(const Vec64& x, const Vec64& y, const char* where);

}  // namespace walab
