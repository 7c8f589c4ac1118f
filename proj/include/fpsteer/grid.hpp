#pragma once

// Uniform cell-centered discretization of (0,1): function storage,
// quadrature and the norms used by the convergence estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpsteer {

struct Grid {
    int n = 0;      // cell count
    double h = 0.0; // cell width, h*n == 1

    static Grid uniform(int n) {
        if (n < 4)
            throw std::invalid_argument("Grid: need n >= 4, got " + std::to_string(n));
        return Grid{n, 1.0 / n};
    }

    double center(int i) const { return (i + 0.5) * h; }
    double edge(int i) const { return i * h; }

    bool operator==(const Grid&) const = default;
};

enum class Placement { Cell, Edge };

// Values per cell (densities) or per edge (fluxes/drifts).
struct GridFunction {
    Grid grid;
    Placement placement = Placement::Cell;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(Grid g, Placement p, std::vector<double> v)
        : grid(g), placement(p), values(std::move(v)) {
        check_shape();
    }

    static GridFunction cell(Grid g, std::vector<double> v) {
        return GridFunction(g, Placement::Cell, std::move(v));
    }
    static GridFunction edge(Grid g, std::vector<double> v) {
        return GridFunction(g, Placement::Edge, std::move(v));
    }
    static GridFunction cell_constant(Grid g, double c) {
        return cell(g, std::vector<double>(static_cast<size_t>(g.n), c));
    }
    static GridFunction edge_constant(Grid g, double c) {
        return edge(g, std::vector<double>(static_cast<size_t>(g.n) + 1, c));
    }

    size_t size() const { return values.size(); }
    double operator[](size_t i) const { return values[i]; }
    double& operator[](size_t i) { return values[i]; }

    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }

    void check_shape() const {
        const size_t want = placement == Placement::Cell
                                ? static_cast<size_t>(grid.n)
                                : static_cast<size_t>(grid.n) + 1;
        if (values.size() != want)
            throw std::invalid_argument("GridFunction: value count does not match placement");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("GridFunction: non-finite value");
    }
};

struct NormKind {
    enum Tag { L2, Linf, H1, H2, WeightedL2 } tag = L2;
    std::vector<double> weight; // cell weights, WeightedL2 only

    static NormKind l2() { return {L2, {}}; }
    static NormKind linf() { return {Linf, {}}; }
    static NormKind h1() { return {H1, {}}; }
    static NormKind h2() { return {H2, {}}; }
    static NormKind weighted_l2(const GridFunction& w) {
        if (w.min() <= 0.0)
            throw std::invalid_argument("NormKind: weight must be strictly positive");
        return {WeightedL2, w.values};
    }
};

// Midpoint rule, h * sum(values). Exact mass bookkeeping for cell data.
inline double mass(const GridFunction& y) {
    if (y.placement != Placement::Cell)
        throw std::invalid_argument("mass: cell placement required");
    double s = 0.0;
    for (double v : y.values) s += v;
    return y.grid.h * s;
}

inline GridFunction normalize(const GridFunction& y) {
    const double m = mass(y);
    if (!(m > 0.0))
        throw std::invalid_argument("normalize: nonpositive mass");
    GridFunction out = y;
    for (double& v : out.values) v /= m;
    return out;
}

// Cell -> edge central differences; boundary edges follow the zero-flux
// convention and are set to boundary_value (default 0).
inline GridFunction derivative(const GridFunction& y, double boundary_value = 0.0) {
    if (y.placement != Placement::Cell)
        throw std::invalid_argument("derivative: cell placement required");
    const int n = y.grid.n;
    std::vector<double> d(static_cast<size_t>(n) + 1, boundary_value);
    for (int j = 1; j < n; ++j)
        d[j] = (y.values[j] - y.values[j - 1]) / y.grid.h;
    return GridFunction::edge(y.grid, std::move(d));
}

inline double norm(const GridFunction& y, const NormKind& kind) {
    const double h = y.grid.h;
    auto l2_cells = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(h * s);
    };
    auto l2_edges = [&](const std::vector<double>& v) {
        // trapezoid over the n+1 edge points
        double s = 0.5 * (v.front() * v.front() + v.back() * v.back());
        for (size_t j = 1; j + 1 < v.size(); ++j) s += v[j] * v[j];
        return std::sqrt(h * s);
    };
    switch (kind.tag) {
    case NormKind::L2:
        return y.placement == Placement::Cell ? l2_cells(y.values) : l2_edges(y.values);
    case NormKind::Linf: {
        double m = 0.0;
        for (double v : y.values) m = std::max(m, std::abs(v));
        return m;
    }
    case NormKind::H1: {
        if (y.placement != Placement::Cell)
            throw std::invalid_argument("norm: H1 needs cell placement");
        const double a = norm(y, NormKind::l2());
        const double b = norm(derivative(y), NormKind::l2());
        return std::sqrt(a * a + b * b);
    }
    case NormKind::H2: {
        if (y.placement != Placement::Cell)
            throw std::invalid_argument("norm: H2 needs cell placement");
        // second central differences on interior cells; diagnostics only
        double s = 0.0;
        for (int i = 1; i + 1 < y.grid.n; ++i) {
            const double d2 = (y.values[i + 1] - 2.0 * y.values[i] + y.values[i - 1]) / (h * h);
            s += d2 * d2;
        }
        const double a = norm(y, NormKind::h1());
        return std::sqrt(a * a + h * s);
    }
    case NormKind::WeightedL2: {
        if (y.placement != Placement::Cell || kind.weight.size() != y.values.size())
            throw std::invalid_argument("norm: weight length mismatch");
        double s = 0.0;
        for (size_t i = 0; i < y.values.size(); ++i)
            s += y.values[i] * y.values[i] * kind.weight[i];
        return std::sqrt(h * s);
    }
    }
    throw std::logic_error("norm: unreachable");
}

// Weighted inner product <p,q>_w = h * sum p q w.
inline double weighted_inner(const GridFunction& p, const GridFunction& q,
                             const GridFunction& w) {
    if (p.size() != q.size() || p.size() != w.size())
        throw std::invalid_argument("weighted_inner: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < p.size(); ++i) s += p[i] * q[i] * w[i];
    return p.grid.h * s;
}

} // namespace fpsteer
