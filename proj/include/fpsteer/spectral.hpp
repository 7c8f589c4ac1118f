#pragma once

// Discrete weighted elliptic operator A_a y = (a y)_xx with zero-flux
// boundaries, and its spectrum. A_a factors as T * diag(a) with T the
// symmetric Neumann Laplacian, so diag(a)^{1/2} A_a diag(a)^{-1/2} is a
// symmetric tridiagonal matrix; eigenvalues come from Sturm-sequence
// bisection and the principal vector from inverse iteration.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fpsteer/grid.hpp"
#include "fpsteer/tridiag.hpp"

namespace fpsteer {

struct SpectralReport {
    std::vector<double> eigenvalues; // sorted descending, expected <= 0
    GridFunction principal_vector;   // positive, unit L2 norm
    double gap = 0.0;                // |second largest eigenvalue|
};

inline TridiagonalOperator assemble_weighted_operator(const GridFunction& a, Grid grid) {
    if (a.placement != Placement::Cell)
        throw std::invalid_argument("assemble_weighted_operator: a must be cell-placed");
    if (a.min() <= 0.0)
        throw std::invalid_argument("assemble_weighted_operator: a must be positive");
    const int n = grid.n;
    const double h2 = grid.h * grid.h;
    auto L = TridiagonalOperator::zero(static_cast<size_t>(n));
    for (int j = 1; j < n; ++j) { // interior edge j: flux ((a y)_j - (a y)_{j-1}) / h
        L.sup[j - 1] += a.values[j] / h2;
        L.diag[j - 1] -= a.values[j - 1] / h2;
        L.diag[j] -= a.values[j] / h2;
        L.sub[j] += a.values[j - 1] / h2;
    }
    return L;
}

namespace detail {

// Symmetric tridiagonal similarity of A_a: S = D^{1/2} T D^{1/2}, D = diag(a).
struct SymTridiag {
    std::vector<double> d; // diagonal
    std::vector<double> e; // off-diagonal, e[i] couples i and i+1
};

inline SymTridiag symmetrize_weighted(const GridFunction& a) {
    const int n = a.grid.n;
    const double h2 = a.grid.h * a.grid.h;
    SymTridiag s;
    s.d.resize(static_cast<size_t>(n), 0.0);
    s.e.resize(static_cast<size_t>(n) - 1, 0.0);
    for (int j = 1; j < n; ++j) {
        s.d[j - 1] -= a.values[j - 1] / h2;
        s.d[j] -= a.values[j] / h2;
        s.e[j - 1] = std::sqrt(a.values[j - 1] * a.values[j]) / h2;
    }
    return s;
}

// Number of eigenvalues strictly below sigma (Sturm sequence / LDL^T signs).
inline int sturm_count(const SymTridiag& s, long double sigma) {
    const size_t n = s.d.size();
    int count = 0;
    long double q = (long double)s.d[0] - sigma;
    if (q < 0) ++count;
    for (size_t i = 1; i < n; ++i) {
        long double denom = q;
        if (denom == 0.0L) denom = 1e-300L;
        const long double ei = (long double)s.e[i - 1];
        q = (long double)s.d[i] - sigma - ei * ei / denom;
        if (q < 0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (0-based) by bisection.
inline double eigenvalue_by_index(const SymTridiag& s, int k) {
    const size_t n = s.d.size();
    long double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (size_t i = 0; i < n; ++i) {
        long double r = 0.0L;
        if (i > 0) r += std::abs(s.e[i - 1]);
        if (i + 1 < n) r += std::abs(s.e[i]);
        lo = std::min(lo, (long double)s.d[i] - r);
        hi = std::max(hi, (long double)s.d[i] + r);
    }
    lo -= 1.0L;
    hi += 1.0L;
    for (int it = 0; it < 200 && hi - lo > 1e-24L * std::max(std::abs(lo), std::abs(hi)); ++it) {
        const long double mid = 0.5L * (lo + hi);
        if (sturm_count(s, mid) > k) hi = mid;
        else lo = mid;
    }
    return (double)(0.5L * (lo + hi));
}

// Inverse iteration for the eigenvector at eigenvalue lam.
inline std::vector<double> inverse_iteration(const SymTridiag& s, double lam) {
    const size_t n = s.d.size();
    double scale = 0.0;
    for (double v : s.d) scale = std::max(scale, std::abs(v));
    const double shift = lam - 1e-12 * std::max(scale, 1.0);
    std::vector<double> sub(n, 0.0), diag(n), sup(n, 0.0), x(n, 1.0);
    for (size_t i = 0; i < n; ++i) {
        diag[i] = s.d[i] - shift;
        if (i > 0) sub[i] = s.e[i - 1];
        if (i + 1 < n) sup[i] = s.e[i];
    }
    for (int it = 0; it < 4; ++it) {
        x = thomas_solve(sub, diag, sup, std::move(x));
        double nrm = 0.0;
        for (double v : x) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : x) v /= nrm;
    }
    return x;
}

} // namespace detail

// k largest eigenvalues of the discrete A_a and its principal eigenvector.
inline SpectralReport spectrum(const GridFunction& a, int k) {
    const int n = a.grid.n;
    if (k < 1 || k > n) throw std::invalid_argument("spectrum: need 1 <= k <= n");
    const auto s = detail::symmetrize_weighted(a);

    SpectralReport report;
    report.eigenvalues.reserve(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j)
        report.eigenvalues.push_back(detail::eigenvalue_by_index(s, n - 1 - j));

    // principal vector of A_a = D^{-1/2} (principal vector of S)
    auto w = detail::inverse_iteration(s, report.eigenvalues[0]);
    std::vector<double> v(w.size());
    for (size_t i = 0; i < w.size(); ++i) v[i] = w[i] / std::sqrt(a.values[i]);
    double sum = 0.0;
    for (double x : v) sum += x;
    if (sum < 0.0)
        for (double& x : v) x = -x;
    auto pv = GridFunction::cell(a.grid, std::move(v));
    const double nrm = norm(pv, NormKind::l2());
    for (double& x : pv.values) x /= nrm;
    report.principal_vector = std::move(pv);

    if (k >= 2) report.gap = std::abs(report.eigenvalues[1]);
    return report;
}

inline double spectral_gap(const GridFunction& a) { return spectrum(a, 2).gap; }

// Spectral gap of the Fokker-Planck generator with the stabilizer drift
// v = f_x/f. The exponentially fitted operator satisfies detailed balance
// (sup_{j-1,j} f_j = sub_{j,j-1} f_{j-1} exactly), so it is symmetrizable and
// the Sturm machinery applies: e_j = sqrt(sup * sub). This is the decay rate
// of the stabilized equation itself, distinct from the gap of the weighted
// operator A_{1/f} that calibrates the steering gains.
inline double fp_spectral_gap(const GridFunction& f) {
    if (f.min() <= 0.0) throw std::invalid_argument("fp_spectral_gap: f must be positive");
    const int n = f.grid.n;
    const double h = f.grid.h;
    auto bern = [](double x) { return std::abs(x) < 1e-12 ? 1.0 - 0.5 * x : x / std::expm1(x); };
    detail::SymTridiag s;
    s.d.resize(static_cast<size_t>(n), 0.0);
    s.e.resize(static_cast<size_t>(n) - 1, 0.0);
    for (int j = 1; j < n; ++j) {
        const double x = std::log(f.values[j]) - std::log(f.values[j - 1]); // v*h
        const double bp = bern(x) / (h * h), bm = bern(-x) / (h * h);
        s.d[j - 1] -= bm;
        s.d[j] -= bp;
        s.e[j - 1] = std::sqrt(bp * bm);
    }
    return std::abs(detail::eigenvalue_by_index(s, n - 2));
}

// Gain rule alpha = safety / lambda.
inline double choose_alpha(double gap, double safety = 1.0) {
    if (!(gap > 0.0)) throw std::invalid_argument("choose_alpha: gap must be positive");
    if (!(safety >= 1.0)) throw std::invalid_argument("choose_alpha: safety must be >= 1");
    return safety / gap;
}

// Checks that the discrete boundary fluxes of A_{1/f} (i.e. ((1/f)u)_x) and
// of B_f (i.e. u_x - (f_x/f) u) vanish on the same set of test vectors. The
// drift coefficient at a boundary edge uses the arithmetic-mean ratio
// 2(f1-f0)/(h(f1+f0)), which makes the two fluxes exactly proportional.
inline bool bc_domain_equivalence_check(const GridFunction& f) {
    if (f.min() <= 0.0)
        throw std::invalid_argument("bc_domain_equivalence_check: f must be positive");
    const int n = f.grid.n;
    const double h = f.grid.h;

    auto classify = [&](const std::vector<double>& u, bool left) {
        const int i0 = left ? 0 : n - 2;
        const int i1 = i0 + 1;
        const double a0 = 1.0 / f.values[i0], a1 = 1.0 / f.values[i1];
        const double flux_a = (a1 * u[i1] - a0 * u[i0]) / h;
        const double scale_a = (std::abs(a1 * u[i1]) + std::abs(a0 * u[i0])) / h + 1e-300;

        const double c = 2.0 * (f.values[i1] - f.values[i0]) / (h * (f.values[i1] + f.values[i0]));
        const double flux_b = (u[i1] - u[i0]) / h - c * 0.5 * (u[i0] + u[i1]);
        const double scale_b =
            (std::abs(u[i1]) + std::abs(u[i0])) / h + std::abs(c) * 0.5 * (std::abs(u[i0]) + std::abs(u[i1])) + 1e-300;

        const bool vanish_a = std::abs(flux_a) <= 1e-10 * scale_a;
        const bool vanish_b = std::abs(flux_b) <= 1e-10 * scale_b;
        return vanish_a == vanish_b;
    };

    std::vector<std::vector<double>> tests;
    tests.push_back(f.values);                                // both fluxes vanish
    tests.push_back(std::vector<double>(static_cast<size_t>(n), 1.0)); // generically not
    std::vector<double> ramp(static_cast<size_t>(n)), wiggle(static_cast<size_t>(n));
    unsigned long long state = 0x243f6a8885a308d3ull; // deterministic test vectors
    for (int i = 0; i < n; ++i) {
        ramp[i] = f.grid.center(i);
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        wiggle[i] = 2.0 * (double)(state >> 11) / 9007199254740992.0 - 1.0;
    }
    tests.push_back(std::move(ramp));
    tests.push_back(std::move(wiggle));

    for (const auto& u : tests)
        for (bool left : {true, false})
            if (!classify(u, left)) return false;
    return true;
}

} // namespace fpsteer
