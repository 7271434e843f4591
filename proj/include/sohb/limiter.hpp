#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectrum.hpp"

namespace sohb {

struct LimiterSpec {
    double upper = 500.0;
    double lower = -500.0;
};

enum class TriggerMode { None, UpperOnly, LowerOnly, Bilateral };

inline const char* to_string(TriggerMode m) {
    switch (m) {
        case TriggerMode::None: return "none";
        case TriggerMode::UpperOnly: return "upper";
        case TriggerMode::LowerOnly: return "lower";
        case TriggerMode::Bilateral: return "bilateral";
    }
    return "?";
}

class limiter_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline TriggerMode classify_trigger(double M0, double M1, const LimiterSpec& lim) {
    const bool up = M0 + 2.0 * M1 > lim.upper;
    const bool low = M0 - 2.0 * M1 < lim.lower;
    if (up && low) return TriggerMode::Bilateral;
    if (up) return TriggerMode::UpperOnly;
    if (low) return TriggerMode::LowerOnly;
    return TriggerMode::None;
}

inline TriggerMode classify_trigger(const Spectrum& ipp, const LimiterSpec& lim) {
    const double M1 = ipp.order() >= 1 ? std::abs(ipp(0, 1)) : 0.0;
    return classify_trigger(ipp(0, 0).real(), M1, lim);
}

// Crossings of M0 + 2 M1 cos(psi) with the bounds, psi measured from the
// first-harmonic peak. Saturation holds on |psi| < half_up (upper) and
// |psi| > half_low (lower).
struct Crossings {
    TriggerMode mode = TriggerMode::None;
    double A1 = 0.0;
    double half_up = 0.0;
    double half_low = kPi;
    std::vector<double> phases;
};

inline Crossings segment_moments(const Spectrum& ipp, const LimiterSpec& lim) {
    Crossings c;
    c.mode = classify_trigger(ipp, lim);
    if (c.mode == TriggerMode::None) return c;
    const double M0 = ipp(0, 0).real();
    const cplx s1 = ipp.order() >= 1 ? ipp(0, 1) : cplx{};
    const double M1 = std::abs(s1);
    if (M1 == 0.0) throw limiter_error("limiter saturated by a constant reference");
    c.A1 = std::arg(s1);
    auto cross = [&](double bound) {
        const double arg = (bound - M0) / (2.0 * M1);
        if (arg < -1.0 || arg > 1.0)
            throw limiter_error("arccos argument " + std::to_string(arg) + " outside [-1, 1]");
        return std::acos(arg);
    };
    if (c.mode == TriggerMode::UpperOnly || c.mode == TriggerMode::Bilateral) {
        c.half_up = cross(lim.upper);
        c.phases.push_back(-c.half_up);
        c.phases.push_back(c.half_up);
    }
    if (c.mode == TriggerMode::LowerOnly || c.mode == TriggerMode::Bilateral) {
        c.half_low = cross(lim.lower);
        c.phases.push_back(-c.half_low);
        c.phases.push_back(c.half_low);
    }
    if (c.half_up >= c.half_low) throw limiter_error("crossing phases out of order");
    std::sort(c.phases.begin(), c.phases.end());
    return c;
}

namespace detail {
// (1/2pi) * integral_a^b e^{j q psi} dpsi
inline cplx arc_moment(int q, double a, double b) {
    if (q == 0) return cplx((b - a) / kTwoPi, 0.0);
    const cplx jq(0.0, static_cast<double>(q));
    return (std::exp(jq * b) - std::exp(jq * a)) / (jq * kTwoPi);
}
}  // namespace detail

// Fourier coefficients of the clipped reference. Saturated arcs hold the bound,
// the rest carries the full order-N reconstruction; all integrals in closed form.
inline Spectrum clipped_fourier(const Spectrum& ipp, const LimiterSpec& lim, int order) {
    if (ipp.kind() != Kind::DC) throw grid_error("limiter input must be DC-type");
    if (order != ipp.order()) throw grid_error("limiter order mismatch");
    const Crossings c = segment_moments(ipp, lim);
    if (c.mode == TriggerMode::None) return ipp;

    const int N = order;
    // Coefficients in the psi frame: psi = ws t + A1.
    std::vector<cplx> sp(2 * N + 1);
    for (int p = -N; p <= N; ++p) sp[p + N] = ipp(0, p) * std::polar(1.0, -p * c.A1);

    struct Arc {
        double a, b;
        bool held;
        double level;
    };
    std::vector<Arc> arcs;
    const double au = c.half_up, al = c.half_low;
    if (al < kPi) {
        arcs.push_back({-kPi, -al, true, lim.lower});
        arcs.push_back({al, kPi, true, lim.lower});
    }
    if (au > 0.0) arcs.push_back({-au, au, true, lim.upper});
    arcs.push_back({-al, -au, false, 0.0});
    arcs.push_back({au, al, false, 0.0});

    Spectrum out(Kind::DC, N, ipp.base());
    for (int m = 0; m <= N; ++m) {
        cplx cm{};
        for (const Arc& arc : arcs) {
            if (arc.held) {
                cm += arc.level * detail::arc_moment(-m, arc.a, arc.b);
            } else {
                for (int p = -N; p <= N; ++p) cm += sp[p + N] * detail::arc_moment(p - m, arc.a, arc.b);
            }
        }
        out.set(0, m, cm * std::polar(1.0, m * c.A1));
    }
    return out;
}

}  // namespace sohb
