#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sohb {

// J_n(x) by the ascending series. Restricted to |x| <= 2, where PLL ripple
// arguments live; terms fall off fast enough that 30 terms reach 1e-16.
inline double bessel_j(int n, double x) {
    if (n < 0) throw std::domain_error("bessel_j: negative order");
    if (!(std::abs(x) <= 2.0)) throw std::domain_error("bessel_j: |x| = " + std::to_string(std::abs(x)) + " exceeds 2");
    const double h = 0.5 * x;
    double term = 1.0;
    for (int i = 1; i <= n; ++i) term *= h / i;
    double sum = term;
    const double q = -h * h;
    for (int m = 1; m < 40; ++m) {
        term *= q / (static_cast<double>(m) * (m + n));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace sohb
