#pragma once

// Reflected-diffusion ensemble dZ = v(Z,t) dt + sqrt(2) dW + d(psi).
// The sqrt(2) noise scale matches the PDE convention y_t = y_xx - (v y)_x
// (unit diffusion coefficient means increment variance 2 dt).
//
// Each particle owns a counter-based RNG stream derived from (seed, index),
// so results do not depend on traversal or worker order.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fpsteer/fokker_planck.hpp"
#include "fpsteer/grid.hpp"

namespace fpsteer {

// Image of z under the 2-periodic even extension of [0,1] (sawtooth fold);
// exact discrete analogue of the Skorokhod reflection for Brownian steps.
inline double reflect(double z) {
    double r = std::fmod(z, 2.0);
    if (r < 0.0) r += 2.0;
    return r > 1.0 ? 2.0 - r : r;
}

namespace detail {

struct SplitMix64 {
    uint64_t state;
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { // in (0,1]
        return (next() >> 11) * (1.0 / 9007199254740992.0) + (0.5 / 9007199254740992.0);
    }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

inline SplitMix64 particle_stream(uint64_t seed, uint64_t index) {
    SplitMix64 mixer{seed ^ (index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull)};
    mixer.next();
    return SplitMix64{mixer.next()};
}

// Linear interpolation of an edge-placed sample at position z.
inline double interp_edge(const GridFunction& v, double z) {
    const int n = v.grid.n;
    double s = z / v.grid.h;
    if (s < 0.0) s = 0.0;
    if (s > n) s = n;
    int j = (int)s;
    if (j >= n) j = n - 1;
    const double frac = s - j;
    return (1.0 - frac) * v.values[j] + frac * v.values[j + 1];
}

} // namespace detail

struct ParticleEnsemble {
    std::vector<double> positions;
    double time = 0.0;
    uint64_t seed = 0;
    size_t N = 0;
};

// Inverse-CDF sample of a cell-placed density at quantile u in [0,1).
inline double sample_density(const GridFunction& y0, double u) {
    const int n = y0.grid.n;
    const double h = y0.grid.h;
    const double target = u * mass(y0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cell = y0.values[i] * h;
        if (acc + cell >= target || i == n - 1) {
            const double frac = cell > 0.0 ? (target - acc) / cell : 0.0;
            return (i + std::min(std::max(frac, 0.0), 1.0)) * h;
        }
        acc += cell;
    }
    return 1.0;
}

// Euler-Maruyama over [0,T]; snapshots are taken at the step times closest to
// the requested instants (T is always included as the final snapshot).
inline std::vector<ParticleEnsemble> simulate(size_t N, const GridFunction& y0,
                                              const DriftField& drift, double dt, double T,
                                              uint64_t seed,
                                              const std::vector<double>& snapshot_times = {}) {
    if (N < 1) throw std::invalid_argument("simulate: need N >= 1");
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("simulate: dt, T must be positive");
    for (double s : snapshot_times)
        if (s < 0.0 || s > T + 1e-12)
            throw std::invalid_argument("simulate: snapshot outside [0,T]");

    const long steps = std::max<long>(1, std::lround(T / dt));
    const double step_dt = T / steps;
    const double noise = std::sqrt(2.0 * step_dt);

    // map snapshot instants to step indices; drift sample index per step
    std::vector<long> snap_steps;
    for (double s : snapshot_times) snap_steps.push_back(std::lround(s / step_dt));
    snap_steps.push_back(steps);
    std::vector<size_t> drift_idx(static_cast<size_t>(steps));
    for (long k = 0; k < steps; ++k) drift_idx[k] = drift.index_at(k * step_dt);

    std::vector<ParticleEnsemble> out(snap_steps.size());
    for (size_t s = 0; s < out.size(); ++s) {
        out[s].time = snap_steps[s] * step_dt;
        out[s].seed = seed;
        out[s].N = N;
        out[s].positions.resize(N);
    }

    for (size_t i = 0; i < N; ++i) {
        auto rng = detail::particle_stream(seed, i);
        double z = sample_density(y0, rng.uniform() * (1.0 - 1e-12));
        for (long k = 0; k < steps; ++k) {
            for (size_t s = 0; s < snap_steps.size(); ++s)
                if (snap_steps[s] == k) out[s].positions[i] = z;
            const double v = detail::interp_edge(drift.samples[drift_idx[k]], z);
            z = reflect(z + v * step_dt + noise * rng.normal());
        }
        for (size_t s = 0; s < snap_steps.size(); ++s)
            if (snap_steps[s] == steps) out[s].positions[i] = z;
    }
    return out;
}

// Histogram estimator on a uniform grid, normalized to unit mass.
inline GridFunction empirical_density(const ParticleEnsemble& ensemble, int bins) {
    if (bins < 4) throw std::invalid_argument("empirical_density: need bins >= 4");
    const Grid grid = Grid::uniform(bins);
    std::vector<double> counts(static_cast<size_t>(bins), 0.0);
    for (double z : ensemble.positions) {
        int b = (int)(z * bins);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        counts[b] += 1.0;
    }
    const double scale = 1.0 / (grid.h * ensemble.positions.size());
    for (double& c : counts) c *= scale;
    return GridFunction::cell(grid, std::move(counts));
}

// L1 distance between the ensemble histogram and a PDE density.
inline double consistency_error(const ParticleEnsemble& ensemble, const GridFunction& y) {
    const auto hist = empirical_density(ensemble, y.grid.n);
    double s = 0.0;
    for (int i = 0; i < y.grid.n; ++i) s += std::abs(hist.values[i] - y.values[i]);
    return y.grid.h * s;
}

} // namespace fpsteer
