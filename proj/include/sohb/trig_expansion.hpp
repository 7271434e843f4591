#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "bessel.hpp"
#include "spectrum.hpp"

namespace sohb {

inline constexpr int kMaxThetaOrder = 2;

struct TrigFactors {
    Spectrum cos_factor;
    Spectrum sin_factor;
};

// Spectra of cos(2M cos(n ws t + A)) and sin(2M cos(n ws t + A)) through J0..J2.
inline TrigFactors ripple_trig_factors(const Spectrum& theta0, int n) {
    if (theta0.kind() != Kind::DC) throw grid_error("theta0 must be DC-type");
    if (n < 1 || n > theta0.order()) throw std::out_of_range("ripple index " + std::to_string(n) + " outside 1..order");
    const PolarCoeff p = theta0.polar(0, n);
    const double x = 2.0 * p.M;
    const cplx e = std::polar(1.0, p.A);
    TrigFactors f{Spectrum(Kind::DC, theta0.order(), theta0.base()), Spectrum(Kind::DC, theta0.order(), theta0.base())};
    f.cos_factor.set(0, 0, bessel_j(0, x));
    f.cos_factor.set(0, 2 * n, -bessel_j(2, x) * e * e);
    f.sin_factor.set(0, n, bessel_j(1, x) * e);
    return f;
}

struct TrigPair {
    Spectrum cos;
    Spectrum sin;
    double spill_ratio = 0.0;
};

// cos(w1 t + theta0(t)) and sin(...) as AC spectra. The DC offset gives the
// fundamental phasor; each ripple order rotates it by one angle-addition step.
inline TrigPair theta_trig_spectra(const Spectrum& theta0, double spill_limit = 1e-6) {
    if (theta0.kind() != Kind::DC) throw grid_error("theta0 must be DC-type");
    for (int n = kMaxThetaOrder + 1; n <= theta0.span(); ++n)
        if (theta0(0, n) != cplx{}) throw std::invalid_argument("theta0 ripple above order 2");

    const double m0 = theta0(0, 0).real();
    TrigPair out{Spectrum(Kind::AC, theta0.order(), theta0.base()), Spectrum(Kind::AC, theta0.order(), theta0.base())};
    out.cos.set(1, 0, 0.5 * std::polar(1.0, m0));
    out.sin.set(1, 0, 0.5 * std::polar(1.0, m0) / cplx(0.0, 1.0));

    double spill = 0.0;
    const int top = std::min(kMaxThetaOrder, theta0.order());
    for (int n = 1; n <= top; ++n) {
        if (theta0(0, n) == cplx{}) continue;
        const TrigFactors f = ripple_trig_factors(theta0, n);
        Spectrum cc = toeplitz_product(out.cos, f.cos_factor);
        Spectrum ss = toeplitz_product(out.sin, f.sin_factor);
        Spectrum sc = toeplitz_product(out.sin, f.cos_factor);
        Spectrum cs = toeplitz_product(out.cos, f.sin_factor);
        spill += cc.spill() + ss.spill() + sc.spill() + cs.spill();
        out.cos = cc - ss;
        out.sin = sc + cs;
    }
    const double total = out.cos.energy() + out.sin.energy();
    out.spill_ratio = total > 0.0 ? spill / total : 0.0;
    if (out.spill_ratio > spill_limit)
        throw std::runtime_error("trig expansion spill " + std::to_string(out.spill_ratio) + " above limit");
    return out;
}

}  // namespace sohb
