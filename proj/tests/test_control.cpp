#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fpsteer/control.hpp"
#include "fpsteer/density.hpp"
#include "test_util.hpp"

using namespace fpsteer;
using std::numbers::pi;

TEST_CASE("gradient log drift") {
    const auto g = Grid::uniform(50);

    // f proportional to e^x has f_x/f = 1 identically, and the edge
    // log-ratios reproduce that without discretization error
    std::vector<double> ex(50);
    for (int i = 0; i < 50; ++i) ex[i] = std::exp(g.center(i));
    const auto v = gradient_log_drift(GridFunction::cell(g, std::move(ex)));
    CHECK(v.values[0] == 0.0);
    CHECK(v.values[50] == 0.0);
    for (int j = 1; j < 50; ++j) CHECK(v.values[j] == doctest::Approx(1.0).epsilon(1e-12));

    // scale invariance: the drift only sees ratios
    const auto f = project("sine:0.5:1", g);
    GridFunction f3 = f;
    for (double& x : f3.values) x *= 3.0;
    const auto v1 = gradient_log_drift(f);
    const auto v2 = gradient_log_drift(f3);
    for (size_t j = 0; j < v1.size(); ++j)
        CHECK(v1.values[j] == doctest::Approx(v2.values[j]).epsilon(1e-12));

    CHECK_THROWS_AS(gradient_log_drift(GridFunction::cell_constant(g, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("stabilizer sup norm matches the analytic maximum") {
    // for f = 1 + 0.5 sin(2 pi x), max |f'/f| = pi sqrt(4/3) at sin = -1/2
    const auto g = Grid::uniform(400);
    const auto f = project("sine:0.5:1", g);
    const auto drift = DriftField::constant(gradient_log_drift(f));
    CHECK(drift_sup_norm(drift) == doctest::Approx(2.0 * pi / std::sqrt(3.0)).epsilon(0.02));
}

TEST_CASE("steering schedule") {
    const double basel = pi * pi / 6.0;

    // raw schedule (T - eps = pi^2/6): lengths 1/m^2, gains alpha*m
    const auto raw = steering_schedule(1.0 + basel, 1.0, 2.0, 5);
    CHECK(raw.interval_length(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(raw.interval_length(2) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(raw.interval_length(3) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    for (int m = 1; m <= 5; ++m)
        CHECK(raw.gains[m - 1] == doctest::Approx(2.0 * m).epsilon(1e-12));

    const auto s = steering_schedule(2.0, 0.2, 1.0, 40);
    CHECK(s.breakpoints.front() == doctest::Approx(0.2));
    CHECK(s.breakpoints[1] == doctest::Approx(1.2942688).epsilon(1e-6));
    CHECK(s.breakpoints.back() < 2.0); // partial Basel sums stay below the limit
    for (int m = 1; m < 40; ++m) {
        CHECK(s.breakpoints[m] < s.breakpoints[m + 1]);
        CHECK(s.gains[m] / s.gains[m - 1] == doctest::Approx((m + 1.0) / m).epsilon(1e-12));
    }
    // the partition exhausts (eps, T) as the schedule lengthens
    CHECK(steering_schedule(2.0, 0.2, 1.0, 400).breakpoints.back() >
          s.breakpoints.back());

    CHECK_THROWS_AS(steering_schedule(1.0, 1.0, 1.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(steering_schedule(1.0, 0.1, -1.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(steering_schedule(1.0, 0.1, 1.0, 0), std::invalid_argument);
}

TEST_CASE("feedback law reduces to the stabilizer at the target") {
    const auto g = Grid::uniform(120);
    const auto f = normalize(project("bimodal:0.3:0.7:0.15", g));
    const auto vstab = gradient_log_drift(f);
    for (double gain : {0.5, 3.0, 40.0}) {
        const auto fb = feedback_drift(f, f, gain, 1e-8);
        CHECK_FALSE(fb.floored);
        for (size_t j = 0; j < fb.v.size(); ++j)
            CHECK(fb.v.values[j] == doctest::Approx(vstab.values[j]).epsilon(1e-12));
    }

    // floor flag trips on (numerically) vanishing density
    auto tiny = f;
    tiny.values[60] = 1e-12;
    CHECK(feedback_drift(tiny, f, 1.0, 1e-8).floored);
}

TEST_CASE("steer started at the target returns to it") {
    // phase 1 is pure diffusion, so f is not a literal fixed point of the
    // full controller; the later phases must contract the excursion away
    const auto g = Grid::uniform(80);
    const auto f = normalize(project("sine:0.5:1", g));
    SteerConfig cfg;
    cfg.m_max = 10;
    cfg.dt = 2e-3;
    const auto res = steer(f, f, 1.0, cfg);
    double excursion = 0.0;
    for (const auto& y : res.trajectory.states) {
        GridFunction d = y;
        for (size_t i = 0; i < d.size(); ++i) d.values[i] -= f.values[i];
        excursion = std::max(excursion, norm(d, NormKind::l2()));
    }
    CHECK(excursion > 0.01); // the diffusion phase really does move away
    CHECK(res.terminal_error < 0.1 * excursion);
    CHECK_FALSE(res.floor_activated);
    CHECK(res.trajectory.max_mass_drift() <= 1e-12);
}

TEST_CASE("steer drives a generic start toward the target") {
    const auto g = Grid::uniform(80);
    const auto y0 = normalize(project("gaussian_bump:0.3:0.12", g));
    const auto f = normalize(project("sine:0.5:1", g));
    SteerConfig cfg;
    cfg.m_max = 12;
    cfg.dt = 2e-3;
    const auto res = steer(y0, f, 1.0, cfg);

    GridFunction d0 = y0;
    for (size_t i = 0; i < d0.size(); ++i) d0.values[i] -= f.values[i];
    CHECK(res.terminal_error < 0.05 * norm(d0, NormKind::l2()));
    CHECK(res.intervals_run == 12);
    CHECK(res.trajectory.min_value() > 0.0);
    CHECK(res.gap > 0.0);
    CHECK(res.alpha == doctest::Approx(1.0 / res.gap));

    // interval errors contract through the schedule
    CHECK(res.interval_error.back() < res.interval_error.front());
}

TEST_CASE("steer input validation") {
    const auto g = Grid::uniform(20);
    const auto f = normalize(project("sine:0.5:1", g));
    CHECK_THROWS_AS(steer(GridFunction::cell_constant(g, 2.0), f, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(steer(f, f, 0.0), std::invalid_argument);
    SteerConfig cfg;
    cfg.epsilon = 2.0;
    CHECK_THROWS_AS(steer(f, f, 1.0, cfg), std::invalid_argument);
}

TEST_CASE("gain-bound audit model sequence") {
    const auto s = steering_schedule(1.0, 0.1, 1.0, 40);
    const auto rep = euler_mascheroni_bound_audit(s, {});
    CHECK(rep.model_sequence[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    for (size_t m = 1; m < rep.model_sequence.size(); ++m)
        CHECK(rep.model_sequence[m] > rep.model_sequence[m - 1]); // increases toward e^{-gamma}
    CHECK(rep.s_final == doctest::Approx(40.0 * std::exp(-4.2785434)).epsilon(1e-6));
    CHECK(rep.model_converged);
    CHECK(rep.s_final < std::exp(-0.5772156649)); // still below the limit

    // flat envelope passes, a trending one is flagged
    std::vector<double> flat(12, 3.0);
    CHECK(euler_mascheroni_bound_audit(s, flat).envelope_bounded);
    std::vector<double> rising(12);
    for (int i = 0; i < 12; ++i) rising[i] = 1.0 + double(i) * i;
    CHECK_FALSE(euler_mascheroni_bound_audit(s, rising).envelope_bounded);
    // a mild drift proportional to the model sequence is not growth
    std::vector<double> model_like(12);
    for (int i = 0; i < 12; ++i) model_like[i] = 3.0 * (1.0 + 0.01 * i);
    CHECK(euler_mascheroni_bound_audit(s, model_like).envelope_bounded);
}
