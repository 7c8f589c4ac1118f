#pragma once

// CSV emitters. All files use '.' decimals, '\n' line endings, UTF-8,
// 17 significant digits.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "fpsteer/fokker_planck.hpp"
#include "fpsteer/grid.hpp"
#include "fpsteer/particles.hpp"
#include "fpsteer/spectral.hpp"

namespace fpsteer {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // keep '\n' endings everywhere
    if (!out) throw std::runtime_error("cannot open " + path);
    return out;
}

// Row-major by time then cell center.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = open_csv(path);
    out << "t,x,y\n";
    for (size_t k = 0; k < traj.times.size(); ++k) {
        const auto& y = traj.states[k];
        for (int i = 0; i < y.grid.n; ++i)
            out << fmt17(traj.times[k]) << ',' << fmt17(y.grid.center(i)) << ','
                << fmt17(y.values[i]) << '\n';
    }
}

inline void write_drift_csv(const std::string& path, const DriftField& drift, double T) {
    auto out = open_csv(path);
    out << "t_start,t_end,x_edge,v\n";
    for (size_t k = 0; k < drift.samples.size(); ++k) {
        const double t0 = drift.breakpoints[k];
        const double t1 = k + 1 < drift.breakpoints.size() ? drift.breakpoints[k + 1] : T;
        const auto& v = drift.samples[k];
        for (int j = 0; j <= v.grid.n; ++j)
            out << fmt17(t0) << ',' << fmt17(t1) << ',' << fmt17(v.grid.edge(j)) << ','
                << fmt17(v.values[j]) << '\n';
    }
}

inline void write_spectrum_csv(const std::string& path, const SpectralReport& report) {
    auto out = open_csv(path);
    out << "index,eigenvalue\n";
    for (size_t i = 0; i < report.eigenvalues.size(); ++i)
        out << i << ',' << fmt17(report.eigenvalues[i]) << '\n';
    out << "# gap," << fmt17(report.gap) << '\n';
}

inline void write_particles_csv(const std::string& path,
                                const std::vector<ParticleEnsemble>& snapshots, int bins) {
    auto out = open_csv(path);
    out << "t,x,count,density\n";
    for (const auto& snap : snapshots) {
        const auto hist = empirical_density(snap, bins);
        for (int i = 0; i < bins; ++i) {
            const double count = hist.values[i] * hist.grid.h * snap.N;
            out << fmt17(snap.time) << ',' << fmt17(hist.grid.center(i)) << ','
                << fmt17(count) << ',' << fmt17(hist.values[i]) << '\n';
        }
    }
}

} // namespace fpsteer
