#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fpsteer/control.hpp"
#include "fpsteer/density.hpp"
#include "fpsteer/fokker_planck.hpp"
#include "test_util.hpp"

using namespace fpsteer;
using std::numbers::pi;

namespace {

// Independent oracle for the v = 0 solver: the discrete Neumann Laplacian has
// exact eigenpairs (cos(m pi x_i), -(2/h^2)(1 - cos(m pi h))), so the heat
// solution follows by explicit eigenexpansion.
GridFunction heat_oracle(const GridFunction& y0, double t) {
    const int n = y0.grid.n;
    const double h = y0.grid.h;
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    for (int m = 0; m < n; ++m) {
        double coeff = 0.0, nrm = 0.0;
        for (int i = 0; i < n; ++i) {
            const double phi = std::cos(m * pi * y0.grid.center(i));
            coeff += y0.values[i] * phi;
            nrm += phi * phi;
        }
        coeff /= nrm;
        const double lambda = -(2.0 / (h * h)) * (1.0 - std::cos(m * pi * h));
        const double amp = coeff * std::exp(lambda * t);
        for (int i = 0; i < n; ++i) out[i] += amp * std::cos(m * pi * y0.grid.center(i));
    }
    return GridFunction::cell(y0.grid, std::move(out));
}

} // namespace

TEST_CASE("fp operator with zero drift is the Neumann 3-point Laplacian") {
    const auto g = Grid::uniform(4);
    const auto L = assemble_fp_operator(GridFunction::edge_constant(g, 0.0), g);
    const double ih2 = 1.0 / (g.h * g.h);
    CHECK(L.diag[0] == doctest::Approx(-ih2));
    CHECK(L.sup[0] == doctest::Approx(ih2));
    CHECK(L.sub[1] == doctest::Approx(ih2));
    CHECK(L.diag[1] == doctest::Approx(-2.0 * ih2));
    CHECK(L.sup[1] == doctest::Approx(ih2));
    CHECK(L.diag[3] == doctest::Approx(-ih2));
    CHECK(L.sub[3] == doctest::Approx(ih2));
}

TEST_CASE("fp operator column sums vanish for random drift") {
    testutil::Rng rng{3};
    const auto g = Grid::uniform(37);
    for (int it = 0; it < 10; ++it) {
        const auto v = testutil::random_edge(g, rng, -5.0, 5.0);
        const double scale = 1.0 / (g.h * g.h); // entry magnitude
        for (double c : assemble_fp_operator(v, g).column_sums())
            CHECK(std::abs(c) < 1e-13 * scale);
    }
}

TEST_CASE("exponential fitting makes f the exact discrete kernel") {
    const auto g = Grid::uniform(64);
    const auto f = normalize(project("sine:0.5:1", g));
    const auto L = assemble_fp_operator(gradient_log_drift(f), g);
    const auto r = L.apply(f.values);
    for (double x : r) CHECK(std::abs(x) < 1e-8); // entries are O(1/h^2), residual round-off
}

TEST_CASE("theta step basics") {
    const auto g = Grid::uniform(8);
    const auto y = normalize(project("sine:0.5:1", g));
    const auto L0 = TridiagonalOperator::zero(8);
    for (auto scheme : {Scheme::BackwardEuler, Scheme::CrankNicolson}) {
        const auto y1 = step(y, L0, 0.1, scheme);
        for (size_t i = 0; i < y.size(); ++i)
            CHECK(y1.values[i] == doctest::Approx(y.values[i]).epsilon(1e-14));
    }

    // uniform density is stationary for the Neumann heat operator
    const auto L = assemble_fp_operator(GridFunction::edge_constant(g, 0.0), g);
    const auto u1 = step(GridFunction::cell_constant(g, 1.0), L, 0.05, Scheme::CrankNicolson);
    for (double v : u1.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));

    CHECK_THROWS_AS(step(y, L, 0.0, Scheme::BackwardEuler), std::invalid_argument);
}

TEST_CASE("stationary target with matched drift stays put") {
    const auto g = Grid::uniform(100);
    const auto f = normalize(project("sine:0.5:1", g));
    const auto L = assemble_fp_operator(gradient_log_drift(f), g);
    GridFunction y = f;
    for (int k = 0; k < 100; ++k) y = step(y, L, 1e-2, Scheme::CrankNicolson);
    for (size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.values[i] - f.values[i]) < 1e-12);
}

TEST_CASE("zero-drift solve matches the eigenexpansion oracle") {
    const auto g = Grid::uniform(100);
    const auto y0 = normalize(project("step:0.2:1.8:0.5", g));
    const auto drift = DriftField::constant(GridFunction::edge_constant(g, 0.0));

    const auto traj = solve(y0, drift, 0.3, 1e-3, Scheme::CrankNicolson);
    const auto exact = heat_oracle(y0, 0.3);
    CHECK(testutil::l2_diff(traj.final_state(), exact) < 1e-4);

    // long stiff horizon: Backward Euler damps the ringing modes CN leaves
    const auto late = solve(y0, drift, 5.0, 1e-2, Scheme::BackwardEuler);
    for (double v : late.final_state().values) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trajectories conserve mass and respect breakpoints") {
    const auto g = Grid::uniform(50);
    const auto y0 = normalize(project("gaussian_bump:0.3:0.1", g));
    DriftField drift;
    drift.push(0.0, GridFunction::edge_constant(g, 1.0));
    drift.push(0.137, GridFunction::edge_constant(g, -1.0)); // not a multiple of dt
    const auto traj = solve(y0, drift, 0.4, 1e-2, Scheme::CrankNicolson);

    CHECK(traj.max_mass_drift() <= 1e-12);
    bool hit = false;
    for (double t : traj.times)
        if (std::abs(t - 0.137) < 1e-14) hit = true;
    CHECK(hit);
}

TEST_CASE("solve rejects bad inputs") {
    const auto g = Grid::uniform(10);
    const auto drift = DriftField::constant(GridFunction::edge_constant(g, 0.0));
    auto neg = GridFunction::cell_constant(g, 1.0);
    neg.values[0] = -0.1;
    neg.values[1] = 1.1; // keep unit mass
    CHECK_THROWS_AS(solve(neg, drift, 1.0, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(solve(GridFunction::cell_constant(g, 2.0), drift, 1.0, 1e-2),
                    std::invalid_argument);
    DriftField outside;
    outside.push(0.0, GridFunction::edge_constant(g, 0.0));
    outside.push(2.0, GridFunction::edge_constant(g, 0.0));
    CHECK_THROWS_AS(solve(GridFunction::cell_constant(g, 1.0), outside, 1.0, 1e-2),
                    std::invalid_argument);
}

TEST_CASE("Backward Euler keeps strictly positive data positive") {
    const auto g = Grid::uniform(200);
    const auto f = normalize(project("sine:0.25:1", g));
    const auto y0 = GridFunction::cell_constant(g, 1.0);
    const auto drift = DriftField::constant(gradient_log_drift(f));
    const auto traj = solve(y0, drift, 1.0, 1e-3, Scheme::BackwardEuler);
    CHECK(traj.min_value() > 0.0);
    CHECK(traj.min_value() >= 0.5 * y0.min()); // empirical floor at n=200, dt=1e-3
}

TEST_CASE("heat kernel floor") {
    const auto g = Grid::uniform(100);
    const auto one = GridFunction::cell_constant(g, 1.0);

    // worst case x has all mass at squared distance <= 1, giving the cited
    // pi^{-1/2} e^{-1} value at t = 1/4
    const double floor_quarter = heat_kernel_floor(0.25, one);
    CHECK(floor_quarter >= 1.0 / std::sqrt(pi) * std::exp(-1.0));
    CHECK(floor_quarter <= 1.0);

    // decays monotonically for large t (prefactor (4 pi t)^{-1/2} wins)
    CHECK(heat_kernel_floor(1.0, one) > heat_kernel_floor(4.0, one));
    CHECK(heat_kernel_floor(4.0, one) > heat_kernel_floor(16.0, one));

    CHECK_THROWS_AS(heat_kernel_floor(0.0, one), std::invalid_argument);
    CHECK_THROWS_AS(heat_kernel_floor(-1.0, one), std::invalid_argument);
}

TEST_CASE("solved density beats the kernel floor") {
    const auto g = Grid::uniform(200);
    const auto y0 = normalize(project("step:2:0:0.5", g)); // half-support mass 1
    const double floor01 = heat_kernel_floor(0.1, y0);
    CHECK(floor01 > 0.0);
    const auto drift = DriftField::constant(GridFunction::edge_constant(g, 0.0));
    const auto traj = solve(y0, drift, 0.1, 1e-3, Scheme::CrankNicolson);
    CHECK(traj.final_state().min() >= floor01 - 1e-3);
}
