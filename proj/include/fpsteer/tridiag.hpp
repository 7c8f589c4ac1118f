#pragma once

// Tridiagonal spatial operators acting on cell values, plus the Thomas
// elimination used by the implicit time steppers.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fpsteer {

struct TridiagonalOperator {
    // (L y)_i = sub[i]*y_{i-1} + diag[i]*y_i + sup[i]*y_{i+1}
    // sub[0] and sup[n-1] are unused and kept at 0.
    std::vector<double> sub, diag, sup;

    size_t size() const { return diag.size(); }

    static TridiagonalOperator zero(size_t n) {
        return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0)};
    }

    std::vector<double> apply(const std::vector<double>& y) const {
        const size_t n = size();
        if (y.size() != n) throw std::invalid_argument("TridiagonalOperator: size mismatch");
        std::vector<double> r(n);
        for (size_t i = 0; i < n; ++i) {
            double s = diag[i] * y[i];
            if (i > 0) s += sub[i] * y[i - 1];
            if (i + 1 < n) s += sup[i] * y[i + 1];
            r[i] = s;
        }
        return r;
    }

    // Column sums; all zero for a conservative operator.
    std::vector<double> column_sums() const {
        const size_t n = size();
        std::vector<double> c(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            c[i] += diag[i];
            if (i > 0) c[i - 1] += sub[i];
            if (i + 1 < n) c[i + 1] += sup[i];
        }
        return c;
    }

    void scale(double s) {
        for (auto& v : sub) v *= s;
        for (auto& v : diag) v *= s;
        for (auto& v : sup) v *= s;
    }
};

// Solves the tridiagonal system A x = rhs where A has the given bands.
inline std::vector<double> thomas_solve(const std::vector<double>& sub,
                                        const std::vector<double>& diag,
                                        const std::vector<double>& sup,
                                        std::vector<double> rhs) {
    const size_t n = diag.size();
    std::vector<double> c(n, 0.0);
    double piv = diag[0];
    if (piv == 0.0) throw std::runtime_error("thomas_solve: zero pivot");
    c[0] = sup[0] / piv;
    rhs[0] /= piv;
    for (size_t i = 1; i < n; ++i) {
        piv = diag[i] - sub[i] * c[i - 1];
        if (piv == 0.0) throw std::runtime_error("thomas_solve: zero pivot");
        if (i + 1 < n) c[i] = sup[i] / piv;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / piv;
    }
    for (size_t i = n - 1; i-- > 0;)
        rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

} // namespace fpsteer
