#pragma once

#include <span>
#include <vector>

namespace rotstar {

struct GaussRule {
    std::vector<double> nodes;    ///< ascending
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
GaussRule gauss_legendre(int n);
/// n-point Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);

/// P_0..P_lmax at x by the three-term recurrence.
void legendre_all(int lmax, double x, std::span<double> out);
double legendre(int l, double x);

/// Integral of P_l over [x, 1].
double legendre_tail_integral(int l, double x);

}  // namespace rotstar
