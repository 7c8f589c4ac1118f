#pragma once

// Conservative finite-volume solver for y_t = y_xx - (v y)_x with zero-flux
// boundaries. Fluxes use exponential fitting (Scharfetter-Gummel weights), so
// a drift given by log-ratios of a density f has f as its exact discrete
// stationary state.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpsteer/grid.hpp"
#include "fpsteer/tridiag.hpp"

namespace fpsteer {

enum class Scheme { BackwardEuler, CrankNicolson };

// Bernoulli weight B(x) = x / (e^x - 1), B(0) = 1.
inline double bernoulli(double x) {
    if (std::abs(x) < 1e-12) return 1.0 - 0.5 * x;
    return x / std::expm1(x);
}

// Piecewise-constant-in-time, edge-valued drift samples. samples[i] is active
// on [breakpoints[i], breakpoints[i+1]); the last sample holds to the end.
struct DriftField {
    std::vector<double> breakpoints;
    std::vector<GridFunction> samples;

    static DriftField constant(const GridFunction& v) {
        if (v.placement != Placement::Edge)
            throw std::invalid_argument("DriftField: edge placement required");
        return DriftField{{0.0}, {v}};
    }

    void push(double t_start, GridFunction v) {
        if (v.placement != Placement::Edge)
            throw std::invalid_argument("DriftField: edge placement required");
        if (!breakpoints.empty() && t_start <= breakpoints.back())
            throw std::invalid_argument("DriftField: breakpoints must increase");
        breakpoints.push_back(t_start);
        samples.push_back(std::move(v));
    }

    size_t index_at(double t) const {
        if (breakpoints.empty()) throw std::runtime_error("DriftField: empty");
        size_t lo = 0;
        for (size_t i = 1; i < breakpoints.size(); ++i) {
            if (breakpoints[i] <= t + 1e-15) lo = i;
            else break;
        }
        return lo;
    }

    const GridFunction& sample_at(double t) const { return samples[index_at(t)]; }

    double sup_norm() const {
        double m = 0.0;
        for (const auto& s : samples)
            for (double v : s.values) m = std::max(m, std::abs(v));
        return m;
    }
};

// Flux-form operator (L y)_i = (F_{i+1/2} - F_{i-1/2}) / h with
// F = y_x - v y discretized by exponential fitting; boundary fluxes are zero.
inline TridiagonalOperator assemble_fp_operator(const GridFunction& v, Grid grid) {
    if (v.placement != Placement::Edge)
        throw std::invalid_argument("assemble_fp_operator: v must be edge-placed");
    const int n = grid.n;
    const double h = grid.h;
    auto L = TridiagonalOperator::zero(static_cast<size_t>(n));
    for (int j = 1; j < n; ++j) { // interior edges only; F_0 = F_n = 0
        const double x = v.values[j] * h;
        const double bp = bernoulli(x) / (h * h);  // weight on the right cell
        const double bm = bernoulli(-x) / (h * h); // weight on the left cell
        L.sup[j - 1] += bp;
        L.diag[j - 1] -= bm;
        L.diag[j] -= bp;
        L.sub[j] += bm;
    }
    return L;
}

// One theta-step of y' = L y: (I - theta dt L) y+ = (I + (1-theta) dt L) y.
// Mass is projected back to the input mass afterwards; the correction is at
// round-off scale for a conservative L.
inline GridFunction step(const GridFunction& y, const TridiagonalOperator& L, double dt,
                         Scheme scheme) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const size_t n = y.size();
    if (L.size() != n) throw std::invalid_argument("step: operator/grid mismatch");
    const double theta = scheme == Scheme::BackwardEuler ? 1.0 : 0.5;

    std::vector<double> rhs(n), sub(n), diag(n), sup(n);
    for (size_t i = 0; i < n; ++i) {
        double s = (1.0 + (1.0 - theta) * dt * L.diag[i]) * y.values[i];
        if (i > 0) s += (1.0 - theta) * dt * L.sub[i] * y.values[i - 1];
        if (i + 1 < n) s += (1.0 - theta) * dt * L.sup[i] * y.values[i + 1];
        rhs[i] = s;
        sub[i] = -theta * dt * L.sub[i];
        diag[i] = 1.0 - theta * dt * L.diag[i];
        sup[i] = -theta * dt * L.sup[i];
    }
    auto out = thomas_solve(sub, diag, sup, std::move(rhs));

    double m0 = 0.0, m1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        m0 += y.values[i];
        m1 += out[i];
    }
    if (m1 != 0.0) {
        const double fix = m0 / m1;
        for (double& v : out) v *= fix;
    }
    return GridFunction::cell(y.grid, std::move(out));
}

struct Trajectory {
    std::vector<double> times;
    std::vector<GridFunction> states;
    DriftField drift_log;

    const GridFunction& final_state() const { return states.back(); }

    double max_mass_drift() const {
        const double m0 = mass(states.front());
        double d = 0.0;
        for (const auto& s : states) d = std::max(d, std::abs(mass(s) - m0));
        return d;
    }

    double min_value() const {
        double m = states.front().min();
        for (const auto& s : states) m = std::min(m, s.min());
        return m;
    }
};

// Time-steps y0 over [0,T]; the drift sample active at each step's start time
// is applied, and dt is shortened locally to land exactly on drift
// breakpoints and on T.
inline Trajectory solve(const GridFunction& y0, const DriftField& drift, double T, double dt,
                        Scheme scheme = Scheme::CrankNicolson) {
    if (std::abs(mass(y0) - 1.0) > 1e-10)
        throw std::invalid_argument("solve: y0 must have unit mass");
    if (y0.min() < 0.0) throw std::invalid_argument("solve: y0 must be nonnegative");
    for (double b : drift.breakpoints)
        if (b < 0.0 || b > T) throw std::invalid_argument("solve: drift breakpoint outside [0,T]");

    Trajectory traj;
    traj.drift_log = drift;
    traj.times.push_back(0.0);
    traj.states.push_back(y0);

    GridFunction y = y0;
    double t = 0.0;
    size_t seg = 0;
    while (t < T - 1e-13) {
        const double seg_end =
            seg + 1 < drift.breakpoints.size() ? std::min(drift.breakpoints[seg + 1], T) : T;
        auto L = assemble_fp_operator(drift.samples[seg], y.grid);
        while (t < seg_end - 1e-13) {
            const double step_dt = std::min(dt, seg_end - t);
            y = step(y, L, step_dt, scheme);
            t += step_dt;
            traj.times.push_back(t);
            traj.states.push_back(y);
        }
        t = seg_end;
        ++seg;
    }
    return traj;
}

// Certified lower bound for the Neumann-heat solution at time t:
// min over x of h * sum_z (4 pi t)^{-1/2} exp(-(x-z)^2 / (4t)) y0(z).
inline double heat_kernel_floor(double t, const GridFunction& y0) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel_floor: t must be positive");
    if (y0.placement != Placement::Cell)
        throw std::invalid_argument("heat_kernel_floor: cell placement required");
    if (y0.min() < 0.0) throw std::invalid_argument("heat_kernel_floor: y0 must be nonnegative");
    const int n = y0.grid.n;
    const double h = y0.grid.h;
    const double pref = 1.0 / std::sqrt(4.0 * M_PI * t);
    double floor_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = y0.grid.center(i);
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dz = x - y0.grid.center(j);
            s += std::exp(-dz * dz / (4.0 * t)) * y0.values[j];
        }
        floor_val = std::min(floor_val, pref * h * s);
    }
    return floor_val;
}

} // namespace fpsteer
