#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/grid.hpp"
#include "rotstar/legendre.hpp"
#include "rotstar/potential.hpp"
#include "test_util.hpp"

namespace testutil {

struct Envelope {
    double slope = 0.0;
    double C_small = 0.0;  ///< sup remainder / |h|^p for |h| < 1e-3
    double C_large = 0.0;  ///< same for |h| >= 1e-3
};

/// Samples u, h with |u|, |u + h| <= 2. Half of the draws put u within a few
/// |h| of the kink at 0, where the remainder is largest. The slope is fitted
/// through the largest remainder in each half-decade of |h|.
inline Envelope sample_envelope(const std::function<double(double, double)>& remainder, double p,
                                unsigned seed, int samples) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::map<int, std::pair<double, double>> bins;
    Envelope env;
    for (int k = 0; k < samples; ++k) {
        const double ah = std::pow(10.0, -5.0 + 5.0 * U(rng));
        const double h = U(rng) < 0.5 ? ah : -ah;
        double u;
        if (k % 2 == 0) u = (6.0 * U(rng) - 3.0) * ah;
        else u = -2.0 + 4.0 * U(rng);
        u = std::clamp(u, -2.0 - std::min(h, 0.0), 2.0 - std::max(h, 0.0));
        const double R = remainder(u, h);
        double& C = ah < 1e-3 ? env.C_small : env.C_large;
        C = std::max(C, R / std::pow(ah, p));
        auto& b = bins[static_cast<int>(std::floor(2.0 * std::log10(ah)))];
        if (R > b.second) b = {ah, R};
    }
    std::vector<double> x, y;
    for (const auto& [key, v] : bins)
        if (v.second > 0.0) {
            x.push_back(v.first);
            y.push_back(v.second);
        }
    env.slope = loglog_slope(x, y);
    return env;
}

/// |f(u + h) - f(u) - f'(u) h| for the polytrope of index nu.
inline Envelope density_remainder_envelope(double nu, unsigned seed, int samples) {
    const auto eos = rotstar::EquationOfState::polytrope_from_nu(nu);
    auto R = [&eos](double u, double h) {
        return std::abs(rotstar::f_of_u(u + h, eos, 1.0) - rotstar::f_of_u(u, eos, 1.0) -
                        rotstar::fprime_of_u(u, eos, 1.0) * h);
    };
    return sample_envelope(R, std::min(nu, 2.0), seed, samples);
}

/// |f'(u + h) - f'(u)|.
inline Envelope fprime_holder_envelope(double nu, unsigned seed, int samples) {
    const auto eos = rotstar::EquationOfState::polytrope_from_nu(nu);
    auto R = [&eos](double u, double h) {
        return std::abs(rotstar::fprime_of_u(u + h, eos, 1.0) - rotstar::fprime_of_u(u, eos, 1.0));
    };
    return sample_envelope(R, std::min(nu - 1.0, 1.0), seed, samples);
}

struct FlatOrigin {
    double grad = 0.0;   ///< sup |grad K f (0)| / ||f||_1
    double curve = 0.0;  ///< sup |K f(r) - K f(0)| / (r^2 ||f||_1) on the first nodes
};

/// Random combinations of equatorially symmetric sources regular at the origin.
inline FlatOrigin flat_origin(unsigned seed, int samples) {
    using namespace rotstar;
    auto grid = AxiGrid::create(
        clustered_nodes(48, 2.0, 1.0, ClusterOptions{.ratio_center = 16.0, .ratio_origin = 64.0}), 8, 6);
    std::vector<SourceFn> basis{
        [](double r, double) { return r <= 1.0 ? 1.0 : 0.0; },
        [](double r, double) { return std::exp(-r * r); },
        [](double r, double z) { return std::exp(-r) * legendre(2, z) * r * r; },
        [](double r, double z) { return r <= 1.0 ? (1.0 - r) * (1.0 + r * r * z * z) : 0.0; },
        [](double r, double z) { return std::pow(std::max(0.0, 1.5 - r), 1.5) * (1.0 + 0.5 * std::pow(r * z, 4)); },
        [](double r, double z) { return std::cos(r) * std::cos(r) * (2.0 - r * r * z * z); },
    };
    std::vector<AxiField> K;
    std::vector<double> norm1;
    const auto& rule = grid->rule();
    for (const auto& f : basis) {
        K.push_back(apply_K_multipole(grid, f));
        double n = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
            for (int j = 0; j < grid->n_zeta(); ++j)
                n += 2.0 * std::numbers::pi * rule.w[q] * grid->zeta_weights()[j] * rule.s[q] * rule.s[q] *
                     std::abs(f(rule.s[q], grid->zeta()[j]));
        norm1.push_back(n);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    FlatOrigin out;
    AxiField sum = AxiField::zeros(grid);
    for (int k = 0; k < samples; ++k) {
        sum.values.setZero();
        double n1 = 0.0;
        for (std::size_t b = 0; b < K.size(); ++b) {
            const double c = N(rng);
            sum.values += c * K[b].values;
            n1 += std::abs(c) * norm1[b];
        }
        out.grad = std::max(out.grad, std::abs(grad_at_origin(sum)) / n1);
        for (int i = 1; i < 4; ++i) {
            const double r = grid->r()[i];
            for (int j = 0; j < grid->n_zeta(); ++j)
                out.curve = std::max(out.curve, std::abs(sum.values(i, j) - sum.values(0, j)) / (r * r * n1));
        }
    }
    return out;
}

}  // namespace testutil
