#pragma once

// Scenario runner: JSON config in, CSV/JSON artifacts out.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpsteer/control.hpp"
#include "fpsteer/csv.hpp"
#include "fpsteer/density.hpp"
#include "fpsteer/fokker_planck.hpp"
#include "fpsteer/particles.hpp"
#include "fpsteer/spectral.hpp"

namespace fpsteer {

struct ParticleConfig {
    size_t count = 100000;
    double dt = 1e-3;
    uint64_t seed = 1;
    int bins = 50;
    std::vector<double> snapshots;
};

struct Scenario {
    std::string name;
    std::string y0_spec = "uniform";
    std::string f_spec = "uniform";
    int n = 200;
    double T = 1.0;
    double dt = 1e-3;
    std::string mode; // stabilize | steer | spectrum | particles | convergence | replay
    SteerConfig steer_config;
    ParticleConfig particle_config;
    double fit_t0 = -1.0, fit_t1 = -1.0; // decay-rate fit window; defaults to [T/6, 5T/6]
    double replay_tol = 5e-3;
    std::vector<int> grid_sizes; // convergence mode
    std::vector<double> dts;     // convergence mode
};

inline Scenario parse_scenario(const nlohmann::json& j) {
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.mode = j.at("mode").get<std::string>();
    if (s.mode != "stabilize" && s.mode != "steer" && s.mode != "spectrum" &&
        s.mode != "particles" && s.mode != "convergence" && s.mode != "replay")
        throw std::invalid_argument("unknown mode '" + s.mode + "'");
    s.y0_spec = j.value("y0_spec", s.y0_spec);
    s.f_spec = j.value("f_spec", s.f_spec);
    s.n = j.value("n", s.n);
    s.T = j.value("T", s.T);
    s.dt = j.value("dt", s.dt);
    if (!(s.T > 0.0) || !(s.dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
    DensitySpec::parse(s.y0_spec);
    DensitySpec::parse(s.f_spec);

    if (j.contains("steer_config")) {
        const auto& c = j.at("steer_config");
        s.steer_config.epsilon = c.value("epsilon", s.steer_config.epsilon);
        s.steer_config.alpha = c.value("alpha", s.steer_config.alpha);
        s.steer_config.alpha_safety = c.value("alpha_safety", s.steer_config.alpha_safety);
        s.steer_config.m_max = c.value("m_max", s.steer_config.m_max);
        s.steer_config.tol_terminal = c.value("tol_terminal", s.steer_config.tol_terminal);
        s.steer_config.floor_delta = c.value("floor_delta", s.steer_config.floor_delta);
        s.steer_config.dt = c.value("dt", s.dt);
        const std::string scheme = c.value("scheme", std::string("crank_nicolson"));
        if (scheme == "backward_euler") s.steer_config.scheme = Scheme::BackwardEuler;
        else if (scheme == "crank_nicolson") s.steer_config.scheme = Scheme::CrankNicolson;
        else throw std::invalid_argument("unknown scheme '" + scheme + "'");
    } else {
        s.steer_config.dt = s.dt;
    }
    if (j.contains("particle_config")) {
        const auto& c = j.at("particle_config");
        s.particle_config.count = c.value("count", s.particle_config.count);
        s.particle_config.dt = c.value("dt", s.particle_config.dt);
        s.particle_config.seed = c.value("seed", s.particle_config.seed);
        s.particle_config.bins = c.value("bins", s.particle_config.bins);
        if (c.contains("snapshots"))
            s.particle_config.snapshots = c.at("snapshots").get<std::vector<double>>();
    }
    s.fit_t0 = j.value("fit_t0", s.fit_t0);
    s.fit_t1 = j.value("fit_t1", s.fit_t1);
    s.replay_tol = j.value("replay_tol", s.replay_tol);
    if (j.contains("grid_sizes")) s.grid_sizes = j.at("grid_sizes").get<std::vector<int>>();
    if (j.contains("dts")) s.dts = j.at("dts").get<std::vector<double>>();
    return s;
}

// Least-squares slope of ln||y(t) - f||_2 over [t0, t1]; returns the decay
// rate (positive for decaying error). Points at round-off level are skipped.
inline double fit_decay_rate(const Trajectory& traj, const GridFunction& f, double t0,
                             double t1) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t count = 0;
    for (size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        if (t < t0 || t > t1) continue;
        GridFunction d = traj.states[k];
        for (size_t i = 0; i < d.size(); ++i) d.values[i] -= f.values[i];
        const double e = norm(d, NormKind::l2());
        if (e < 1e-13) continue;
        const double le = std::log(e);
        sx += t;
        sy += le;
        sxx += t * t;
        sxy += t * le;
        ++count;
    }
    if (count < 3) throw std::runtime_error("fit_decay_rate: too few usable samples");
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    return -slope;
}

// Pairwise cell average: restriction from a 2n grid onto the n grid.
inline GridFunction restrict_half(const GridFunction& fine) {
    if (fine.grid.n % 2 != 0) throw std::invalid_argument("restrict_half: n must be even");
    const Grid coarse = Grid::uniform(fine.grid.n / 2);
    std::vector<double> v(static_cast<size_t>(coarse.n));
    for (int i = 0; i < coarse.n; ++i)
        v[i] = 0.5 * (fine.values[2 * i] + fine.values[2 * i + 1]);
    return GridFunction::cell(coarse, std::move(v));
}

inline double l2_difference(const GridFunction& p, const GridFunction& q) {
    GridFunction d = p;
    for (size_t i = 0; i < d.size(); ++i) d.values[i] -= q.values[i];
    return norm(d, NormKind::l2());
}

// Replays a recorded drift through the general solver, Crank-Nicolson before
// t_switch and Backward Euler after (mirrors the controller's scheme choice).
inline Trajectory replay_drift(const GridFunction& y0, const DriftField& drift, double T,
                               double dt, double t_switch) {
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
        const auto L = assemble_fp_operator(drift.samples[seg], y.grid);
        const Scheme sch =
            t < t_switch - 1e-13 ? Scheme::CrankNicolson : Scheme::BackwardEuler;
        while (t < seg_end - 1e-13) {
            const double step_dt = std::min(dt, seg_end - t);
            y = step(y, L, step_dt, sch);
            t += step_dt;
            traj.times.push_back(t);
            traj.states.push_back(y);
        }
        t = seg_end;
        ++seg;
    }
    return traj;
}

namespace detail {

inline std::filesystem::path output_root() {
    if (const char* env = std::getenv("FPSTEER_OUT")) return env;
    return ".";
}

struct ScenarioArtifacts {
    nlohmann::json metrics;
    std::vector<std::string> summary;
    std::vector<std::pair<std::string, bool>> audits;

    void audit(const std::string& name, bool pass) { audits.emplace_back(name, pass); }
    bool all_pass() const {
        for (const auto& [_, p] : audits)
            if (!p) return false;
        return true;
    }
};

inline void common_audits(ScenarioArtifacts& art, const Trajectory& traj, bool y0_positive) {
    const double drift_mass = traj.max_mass_drift();
    art.metrics["mass_drift"] = drift_mass;
    art.metrics["min_density"] = traj.min_value();
    art.audit("mass_conserved", drift_mass <= 1e-12);
    if (y0_positive) art.audit("density_positive", traj.min_value() > 0.0);
}

} // namespace detail

// Averages a fine cell function down to `bins` cells (bins must divide n).
inline GridFunction restrict_to(const GridFunction& fine, int bins) {
    if (fine.grid.n % bins != 0)
        throw std::invalid_argument("restrict_to: bins must divide n");
    const int k = fine.grid.n / bins;
    const Grid coarse = Grid::uniform(bins);
    std::vector<double> v(static_cast<size_t>(bins), 0.0);
    for (int i = 0; i < bins; ++i) {
        for (int j = 0; j < k; ++j) v[i] += fine.values[i * k + j];
        v[i] /= k;
    }
    return GridFunction::cell(coarse, std::move(v));
}

// Runs one scenario; writes artifacts into <out_root>/<name>/.
// Exit status: 0 ok, 1 audit failure, 2 config/parse failure.
inline int run_scenario(const std::string& config_path) {
    Scenario sc;
    try {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        sc = parse_scenario(nlohmann::json::parse(in));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    const auto dir = detail::output_root() / sc.name;
    std::filesystem::create_directories(dir);

    detail::ScenarioArtifacts art;
    art.metrics["schema"] = 1;
    art.metrics["name"] = sc.name;
    art.metrics["mode"] = sc.mode;

    try {
        const Grid grid = Grid::uniform(sc.n);
        const auto y0 = normalize(project(sc.y0_spec, grid));
        const auto f = normalize(project(sc.f_spec, grid));
        GridFunction a = f;
        const bool f_positive = f.min() > 0.0;
        if (f_positive)
            for (double& v : a.values) v = 1.0 / v;

        const double fit_t0 = sc.fit_t0 >= 0.0 ? sc.fit_t0 : sc.T / 6.0;
        const double fit_t1 = sc.fit_t1 >= 0.0 ? sc.fit_t1 : 5.0 * sc.T / 6.0;

        if (sc.mode == "stabilize") {
            const auto v = gradient_log_drift(f);
            const auto drift = DriftField::constant(v);
            const auto traj = solve(y0, drift, sc.T, sc.dt, Scheme::CrankNicolson);
            art.metrics["spectral_gap"] = spectral_gap(a);
            art.metrics["terminal_error"] = l2_difference(traj.final_state(), f);
            art.metrics["drift_sup_norm"] = drift_sup_norm(drift);
            art.metrics["fitted_rate"] = fit_decay_rate(traj, f, fit_t0, fit_t1);
            detail::common_audits(art, traj, y0.min() > 0.0);
            write_trajectory_csv((dir / "trajectory.csv").string(), traj);
            write_drift_csv((dir / "drift.csv").string(), drift, sc.T);
        } else if (sc.mode == "steer" || sc.mode == "replay") {
            const auto res = steer(y0, f, sc.T, sc.steer_config);
            art.metrics["spectral_gap"] = res.gap;
            art.metrics["alpha"] = res.alpha;
            art.metrics["intervals_run"] = res.intervals_run;
            art.metrics["terminal_error"] = res.terminal_error;
            art.metrics["terminal_error_rel"] = res.terminal_error_rel;
            art.metrics["drift_sup_norm"] = drift_sup_norm(res.drift);
            detail::common_audits(art, res.trajectory, y0.min() > 0.0);
            art.audit("division_floor_inactive", !res.floor_activated);
            const auto audit_rep = euler_mascheroni_bound_audit(res.schedule, res.envelope);
            art.metrics["envelope_bound"] = audit_rep.bound_constant;
            art.audit("drift_envelope_bounded", audit_rep.envelope_bounded);
            write_trajectory_csv((dir / "trajectory.csv").string(), res.trajectory);
            write_drift_csv((dir / "drift.csv").string(), res.drift, sc.T);
            if (sc.mode == "replay") {
                const double eps = sc.steer_config.epsilon > 0.0 ? sc.steer_config.epsilon
                                                                 : sc.T / 10.0;
                const auto open_loop =
                    replay_drift(y0, res.drift, sc.T, sc.steer_config.dt, eps);
                double dev = 0.0;
                const size_t k = std::min(open_loop.states.size(), res.trajectory.states.size());
                for (size_t i = 0; i < k; ++i)
                    dev = std::max(dev,
                                   l2_difference(open_loop.states[i], res.trajectory.states[i]));
                art.metrics["replay_deviation"] = dev;
                art.audit("replay_matches_closed_loop", dev <= sc.replay_tol);
            }
        } else if (sc.mode == "spectrum") {
            if (!f_positive) throw std::invalid_argument("spectrum: f must be positive");
            const auto report = spectrum(a, std::min(10, sc.n));
            art.metrics["spectral_gap"] = report.gap;
            art.metrics["principal_eigenvalue"] = report.eigenvalues[0];
            art.audit("principal_eigenvalue_zero", std::abs(report.eigenvalues[0]) <= 1e-8);
            art.audit("gap_positive", report.gap > 0.0);
            write_spectrum_csv((dir / "spectrum.csv").string(), report);
        } else if (sc.mode == "particles") {
            const auto drift = DriftField::constant(gradient_log_drift(f));
            const auto snaps = simulate(sc.particle_config.count, y0, drift,
                                        sc.particle_config.dt, sc.T, sc.particle_config.seed,
                                        sc.particle_config.snapshots);
            const auto traj = solve(y0, drift, sc.T, sc.dt, Scheme::CrankNicolson);
            const auto pde_final = restrict_to(traj.final_state(), sc.particle_config.bins);
            const double err = consistency_error(snaps.back(), pde_final);
            art.metrics["consistency_error"] = err;
            art.metrics["drift_sup_norm"] = drift_sup_norm(drift);
            detail::common_audits(art, traj, y0.min() > 0.0);
            art.audit("particles_in_domain", [&] {
                for (const auto& s : snaps)
                    for (double z : s.positions)
                        if (z < 0.0 || z > 1.0) return false;
                return true;
            }());
            write_particles_csv((dir / "particles.csv").string(), snaps,
                                sc.particle_config.bins);
        } else if (sc.mode == "convergence") {
            throw std::invalid_argument("convergence mode: use convergence_study()");
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run error: %s\n", e.what());
        return 1;
    }

    for (const auto& [name, pass] : art.audits)
        art.summary.push_back(std::string(pass ? "PASS " : "FAIL ") + name);

    {
        std::ofstream mf(dir / "metrics.json", std::ios::binary);
        mf << art.metrics.dump(2) << '\n';
        std::ofstream sf(dir / "summary.txt", std::ios::binary);
        sf << "scenario " << sc.name << " (" << sc.mode << ")\n";
        for (const auto& line : art.summary) sf << line << '\n';
        sf << (art.all_pass() ? "RESULT pass\n" : "RESULT fail\n");
    }
    return art.all_pass() ? 0 : 1;
}

struct ConvergenceRow {
    int n = 0;
    double dt = 0.0;
    double l2_error = 0.0;
    double order = std::nan("");
};

// Self-convergence table for the smooth stabilizer scenario: spatial rows at
// fixed dt (each n against the restricted 2n solution), then temporal rows at
// fixed n (each dt against dt/2). Orders come from successive Richardson
// ratios.
inline std::vector<ConvergenceRow> convergence_study(const Scenario& sc) {
    if (sc.grid_sizes.size() < 3)
        throw std::invalid_argument("convergence_study: need at least 3 grid sizes");
    for (size_t i = 1; i < sc.grid_sizes.size(); ++i)
        if (sc.grid_sizes[i] != 2 * sc.grid_sizes[i - 1])
            throw std::invalid_argument("convergence_study: grid sizes must double");

    auto run = [&](int n, double dt) {
        const Grid grid = Grid::uniform(n);
        const auto y0 = normalize(project(sc.y0_spec, grid));
        const auto f = normalize(project(sc.f_spec, grid));
        const auto drift = DriftField::constant(gradient_log_drift(f));
        return solve(y0, drift, sc.T, dt, Scheme::CrankNicolson).final_state();
    };

    std::vector<ConvergenceRow> rows;

    // spatial
    std::vector<GridFunction> finals;
    for (int n : sc.grid_sizes) finals.push_back(run(n, sc.dt));
    std::vector<double> errs;
    for (size_t i = 0; i + 1 < finals.size(); ++i)
        errs.push_back(l2_difference(finals[i], restrict_half(finals[i + 1])));
    for (size_t i = 0; i < errs.size(); ++i) {
        ConvergenceRow row;
        row.n = sc.grid_sizes[i];
        row.dt = sc.dt;
        row.l2_error = errs[i];
        if (i + 1 < errs.size()) row.order = std::log2(errs[i] / errs[i + 1]);
        rows.push_back(row);
    }

    // temporal
    if (sc.dts.size() >= 3) {
        const int n = sc.grid_sizes.back();
        std::vector<GridFunction> fin;
        for (double dt : sc.dts) fin.push_back(run(n, dt));
        fin.push_back(run(n, sc.dts.back() / 2.0));
        std::vector<double> terrs;
        for (size_t i = 0; i + 1 < fin.size(); ++i)
            terrs.push_back(l2_difference(fin[i], fin[i + 1]));
        for (size_t i = 0; i < sc.dts.size(); ++i) {
            ConvergenceRow row;
            row.n = n;
            row.dt = sc.dts[i];
            row.l2_error = terrs[i];
            if (i + 1 < terrs.size()) row.order = std::log2(terrs[i] / terrs[i + 1]);
            rows.push_back(row);
        }
    }
    return rows;
}

inline int run_convergence(const std::string& config_path) {
    Scenario sc;
    try {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        sc = parse_scenario(nlohmann::json::parse(in));
        if (sc.grid_sizes.size() < 3)
            throw std::invalid_argument("need at least 3 grid sizes");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    try {
        const auto rows = convergence_study(sc);
        const auto dir = detail::output_root() / sc.name;
        std::filesystem::create_directories(dir);
        auto out = open_csv((dir / "convergence.csv").string());
        out << "n,dt,l2_error,order_estimate\n";
        for (const auto& r : rows)
            out << r.n << ',' << fmt17(r.dt) << ',' << fmt17(r.l2_error) << ','
                << (std::isnan(r.order) ? std::string("") : fmt17(r.order)) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run error: %s\n", e.what());
        return 1;
    }
}

} // namespace fpsteer
