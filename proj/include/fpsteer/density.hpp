#pragma once

// DensitySpec mini-language:
//   "uniform"
//   "sine:<a>:<k>"                 1 + a*sin(2*pi*k*x)
//   "gaussian_bump:<mu>:<sigma>"   exp(-(x-mu)^2/(2 sigma^2)), normalize after projection
//   "bimodal:<mu1>:<mu2>:<sigma>"  sum of two bumps
//   "step:<lo>:<hi>:<split>"       lo below split, hi above

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpsteer/grid.hpp"

namespace fpsteer {

struct DensitySpec {
    std::string name;
    std::vector<double> params;

    static DensitySpec parse(const std::string& text) {
        DensitySpec spec;
        size_t pos = text.find(':');
        spec.name = text.substr(0, pos);
        while (pos != std::string::npos) {
            const size_t next = text.find(':', pos + 1);
            const std::string tok = text.substr(pos + 1, next == std::string::npos
                                                             ? std::string::npos
                                                             : next - pos - 1);
            try {
                size_t used = 0;
                spec.params.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw std::invalid_argument("DensitySpec: bad parameter '" + tok + "' in '" +
                                            text + "'");
            }
            pos = next;
        }
        spec.evaluator(); // validates name/arity
        return spec;
    }

    std::function<double(double)> evaluator() const {
        using std::numbers::pi;
        auto need = [&](size_t k) {
            if (params.size() != k)
                throw std::invalid_argument("DensitySpec: '" + name + "' expects " +
                                            std::to_string(k) + " parameters");
        };
        if (name == "uniform") {
            need(0);
            return [](double) { return 1.0; };
        }
        if (name == "sine") {
            need(2);
            const double a = params[0], k = params[1];
            return [=](double x) { return 1.0 + a * std::sin(2.0 * pi * k * x); };
        }
        if (name == "gaussian_bump") {
            need(2);
            const double mu = params[0], sigma = params[1];
            return [=](double x) {
                const double z = (x - mu) / sigma;
                return std::exp(-0.5 * z * z);
            };
        }
        if (name == "bimodal") {
            need(3);
            const double mu1 = params[0], mu2 = params[1], sigma = params[2];
            return [=](double x) {
                const double z1 = (x - mu1) / sigma, z2 = (x - mu2) / sigma;
                return std::exp(-0.5 * z1 * z1) + std::exp(-0.5 * z2 * z2);
            };
        }
        if (name == "step") {
            need(3);
            const double lo = params[0], hi = params[1], split = params[2];
            return [=](double x) { return x < split ? lo : hi; };
        }
        throw std::invalid_argument("DensitySpec: unknown preset '" + name + "'");
    }
};

// Sample at cell centers. Not normalized; callers decide.
inline GridFunction project(const DensitySpec& spec, Grid grid) {
    const auto f = spec.evaluator();
    std::vector<double> v(static_cast<size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) v[i] = f(grid.center(i));
    return GridFunction::cell(grid, std::move(v));
}

inline GridFunction project(const std::string& spec, Grid grid) {
    return project(DensitySpec::parse(spec), grid);
}

} // namespace fpsteer
