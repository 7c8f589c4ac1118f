#pragma once

// Shared helpers for the test suite, including a deterministic generator for
// property-style checks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "fpsteer/grid.hpp"

namespace testutil {

struct Rng {
    uint64_t state = 0x853c49e6748fea9bull;
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * ((next() >> 11) * (1.0 / 9007199254740992.0));
    }
};

inline fpsteer::GridFunction random_cell(fpsteer::Grid grid, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(static_cast<size_t>(grid.n));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return fpsteer::GridFunction::cell(grid, std::move(v));
}

inline fpsteer::GridFunction random_edge(fpsteer::Grid grid, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(static_cast<size_t>(grid.n) + 1);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return fpsteer::GridFunction::edge(grid, std::move(v));
}

inline double l2_diff(const fpsteer::GridFunction& p, const fpsteer::GridFunction& q) {
    fpsteer::GridFunction d = p;
    for (size_t i = 0; i < d.size(); ++i) d.values[i] -= q.values[i];
    return fpsteer::norm(d, fpsteer::NormKind::l2());
}

} // namespace testutil
