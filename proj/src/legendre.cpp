#include "rotstar/legendre.hpp"

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>

#include "rotstar/error.hpp"

namespace rotstar {

GaussRule gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("Gauss rule needs at least one node");
    // boost returns the nonnegative zeros of P_n in ascending order
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    GaussRule rule;
    rule.nodes.reserve(n);
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
        if (*it != 0.0) rule.nodes.push_back(-*it);
    for (double z : zeros) rule.nodes.push_back(z);
    for (double x : rule.nodes) {
        const double dp = boost::math::legendre_p_prime(n, x);
        rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    }
    return rule;
}

GaussRule gauss_legendre(int n, double a, double b) {
    GaussRule rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (auto& x : rule.nodes) x = mid + half * x;
    for (auto& w : rule.weights) w *= half;
    return rule;
}

void legendre_all(int lmax, double x, std::span<double> out) {
    out[0] = 1.0;
    if (lmax == 0) return;
    out[1] = x;
    for (int l = 1; l < lmax; ++l)
        out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1);
}

double legendre(int l, double x) {
    std::vector<double> p(l + 1);
    legendre_all(l, x, p);
    return p[l];
}

double legendre_tail_integral(int l, double x) {
    if (l == 0) return 1.0 - x;
    // (2l+1) P_l = d/dx (P_{l+1} - P_{l-1}) and P_{l+1}(1) = P_{l-1}(1)
    std::vector<double> p(l + 2);
    legendre_all(l + 1, x, p);
    return (p[l - 1] - p[l + 1]) / (2 * l + 1);
}

}  // namespace rotstar
