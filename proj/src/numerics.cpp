#include "walab/numerics.hpp"

#include <cmath>
#include <string>

namespace walab {

Mat64 Mat64::identity(std::size_t n) {
    Mat64 m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

void require_same_length(const Vec64& x, const Vec64& y, const char* where) {
    if (x.size() != y.size()) {
        throw DimensionError(std::string(where) + ": length mismatch (" + std::to_string(x.size()) +
                             " vs " + std::to_string(y.size()) + ")");
    }
}

Vec64 axpy(double a, const Vec64& x, const Vec64& y) {
    require_same_length(x, y, "axpy");
    Vec64 out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = a * x[i] + y[i];
    return out;
}

void axpy_inplace(double a, const Vec64& x, Vec64& y) {
    require_same_length(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Vec64 matvec(const Mat64& m, const Vec64& x) {
    if (m.cols != x.size()) {
        throw DimensionError("matvec: matrix has " + std::to_string(m.cols) + " cols, vector has " +
                             std::to_string(x.size()) + " entries");
    }
    Vec64 out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

double dot(const Vec64& x, const Vec64& y) {
    require_same_length(x, y, "dot");
    KahanSum s;
    for (std::size_t i = 0; i < x.size(); ++i) s.add(x[i] * y[i]);
    return s.value();
}

double norm2(const Vec64& x) { return std::sqrt(dot(x, x)); }

bool all_finite(const Vec64& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace walab
