#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "params.hpp"
#include "spectrum.hpp"
#include "trig_expansion.hpp"

namespace sohb {

enum class Signal { ModIndex, PccVoltage, DcVoltage, PllAngle, CurrentRef, OscFrequency };
enum class Part { Re, Im, Mag, Ang, Scalar };

inline const char* to_string(Signal s) {
    switch (s) {
        case Signal::ModIndex: return "m_a";
        case Signal::PccVoltage: return "u_ga";
        case Signal::DcVoltage: return "u_dc";
        case Signal::PllAngle: return "theta0";
        case Signal::CurrentRef: return "i_pp";
        case Signal::OscFrequency: return "f_s";
    }
    return "?";
}

inline const char* to_string(Part p) {
    switch (p) {
        case Part::Re: return "R";
        case Part::Im: return "I";
        case Part::Mag: return "M";
        case Part::Ang: return "A";
        case Part::Scalar: return "";
    }
    return "?";
}

struct Coord {
    Signal sig;
    int k;
    int n;
    Part part;

    std::string label() const {
        if (sig == Signal::OscFrequency) return "f_s";
        return std::string(to_string(part)) + "(" + to_string(sig) + "<" + std::to_string(k) + "," + std::to_string(n) +
               ">)";
    }
};

// Ordered real unknowns. m_a and u_ga are rectangular over n = -N..N of the
// k = 1 block (I(u_ga<1>) excluded), u_dc rectangular over n >= 0, theta0 polar
// over n <= min(N, 2) with A(theta0<s>) fixed at zero, the pre-limit current
// reference polar over n <= N when the limiter is active, then f_s.
class UnknownLayout {
public:
    UnknownLayout(int order, bool limiter_active) : order_(order), limiter_(limiter_active) {
        const int N = order;
        for (int n = -N; n <= N; ++n) {
            coords_.push_back({Signal::ModIndex, 1, n, Part::Re});
            coords_.push_back({Signal::ModIndex, 1, n, Part::Im});
        }
        for (int n = -N; n <= N; ++n) {
            coords_.push_back({Signal::PccVoltage, 1, n, Part::Re});
            if (n != 0) coords_.push_back({Signal::PccVoltage, 1, n, Part::Im});
        }
        coords_.push_back({Signal::DcVoltage, 0, 0, Part::Re});
        for (int n = 1; n <= N; ++n) {
            coords_.push_back({Signal::DcVoltage, 0, n, Part::Re});
            coords_.push_back({Signal::DcVoltage, 0, n, Part::Im});
        }
        coords_.push_back({Signal::PllAngle, 0, 0, Part::Mag});
        for (int n = 1; n <= theta_order(); ++n) {
            coords_.push_back({Signal::PllAngle, 0, n, Part::Mag});
            if (n >= 2) coords_.push_back({Signal::PllAngle, 0, n, Part::Ang});
        }
        if (limiter_) {
            coords_.push_back({Signal::CurrentRef, 0, 0, Part::Mag});
            for (int n = 1; n <= N; ++n) {
                coords_.push_back({Signal::CurrentRef, 0, n, Part::Mag});
                coords_.push_back({Signal::CurrentRef, 0, n, Part::Ang});
            }
        }
        if (N > 0) coords_.push_back({Signal::OscFrequency, 0, 0, Part::Scalar});
    }

    int order() const { return order_; }
    bool limiter_active() const { return limiter_; }
    int theta_order() const { return std::min(order_, kMaxThetaOrder); }
    int size() const { return static_cast<int>(coords_.size()); }
    const std::vector<Coord>& coords() const { return coords_; }
    const Coord& operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }

    int find(Signal s, int n, Part p) const {
        for (int i = 0; i < size(); ++i)
            if (coords_[i].sig == s && coords_[i].n == n && coords_[i].part == p) return i;
        return -1;
    }

private:
    int order_;
    bool limiter_;
    std::vector<Coord> coords_;
};

// The closed-form imaginary part of u_ga<1>: average source power equals the
// DC load power exactly because u_dc(0) is pinned to its reference.
inline double pcc_fundamental_imag(const SystemParams& p) {
    return p.omega1() * p.L_g * p.I_load * p.u_dc_ref / (6.0 * p.u_t_coeff());
}

struct SteadyState {
    int order = 0;
    double fs = 0.0;
    Spectrum m_a, u_ga, u_dc, theta0;
    std::optional<Spectrum> i_pp;
};

inline SteadyState decode(const UnknownLayout& L, const Eigen::VectorXd& x, const SystemParams& p) {
    const int N = L.order();
    SteadyState s;
    s.order = N;
    s.fs = 0.0;
    for (int i = 0; i < L.size(); ++i)
        if (L[i].sig == Signal::OscFrequency) s.fs = x(i);
    const BaseFreqs base{p.f_1, s.fs};
    s.m_a = Spectrum(Kind::AC, N, base);
    s.u_ga = Spectrum(Kind::AC, N, base);
    s.u_dc = Spectrum(Kind::DC, N, base);
    s.theta0 = Spectrum(Kind::DC, N, base);
    if (L.limiter_active()) s.i_pp = Spectrum(Kind::DC, N, base);

    std::vector<cplx> ma(2 * N + 1), uga(2 * N + 1), udc(N + 1);
    std::vector<double> thM(N + 1), thA(N + 1), ipM(N + 1), ipA(N + 1);
    uga[N] = cplx(0.0, pcc_fundamental_imag(p));
    auto put = [](cplx& z, Part part, double v) {
        if (part == Part::Re)
            z.real(v);
        else
            z.imag(v);
    };
    for (int i = 0; i < L.size(); ++i) {
        const Coord& c = L[i];
        const double v = x(i);
        switch (c.sig) {
            case Signal::ModIndex: put(ma[c.n + N], c.part, v); break;
            case Signal::PccVoltage: put(uga[c.n + N], c.part, v); break;
            case Signal::DcVoltage: put(udc[c.n], c.part, v); break;
            case Signal::PllAngle: (c.part == Part::Mag ? thM[c.n] : thA[c.n]) = v; break;
            case Signal::CurrentRef: (c.part == Part::Mag ? ipM[c.n] : ipA[c.n]) = v; break;
            case Signal::OscFrequency: break;
        }
    }
    for (int n = -N; n <= N; ++n) {
        s.m_a.set(1, n, ma[n + N]);
        s.u_ga.set(1, n, uga[n + N]);
    }
    for (int n = 0; n <= N; ++n) s.u_dc.set(0, n, udc[n]);
    // The DC terms of the polar signals are signed reals.
    s.theta0.set(0, 0, thM[0]);
    for (int n = 1; n <= L.theta_order(); ++n) s.theta0.set(0, n, std::polar(1.0, thA[n]) * thM[n]);
    if (s.i_pp) {
        s.i_pp->set(0, 0, ipM[0]);
        for (int n = 1; n <= N; ++n) s.i_pp->set(0, n, std::polar(1.0, ipA[n]) * ipM[n]);
    }
    return s;
}

// Inverse of decode for the coordinates present in the layout. Missing
// signals (for instance i_pp in limiter-free layouts) are ignored.
inline Eigen::VectorXd encode(const UnknownLayout& L, const SteadyState& s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L.size());
    for (int i = 0; i < L.size(); ++i) {
        const Coord& c = L[i];
        cplx v{};
        switch (c.sig) {
            case Signal::ModIndex: v = s.m_a(1, c.n); break;
            case Signal::PccVoltage: v = s.u_ga(1, c.n); break;
            case Signal::DcVoltage: v = s.u_dc(0, c.n); break;
            case Signal::PllAngle: v = s.theta0(0, c.n); break;
            case Signal::CurrentRef: v = s.i_pp ? (*s.i_pp)(0, c.n) : cplx{}; break;
            case Signal::OscFrequency: x(i) = s.fs; continue;
        }
        switch (c.part) {
            case Part::Re: x(i) = v.real(); break;
            case Part::Im: x(i) = v.imag(); break;
            // theta0<s> carries no angle coordinate, so its signed real part is kept.
            case Part::Mag:
                x(i) = (c.n == 0 || (c.sig == Signal::PllAngle && c.n == 1)) ? v.real() : std::abs(v);
                break;
            case Part::Ang: x(i) = std::arg(v); break;
            case Part::Scalar: break;
        }
    }
    return x;
}

// Shifts the time origin so that theta0<s> is real and nonnegative.
inline SteadyState gauge_aligned(const SteadyState& s) {
    if (s.order < 1 || s.theta0(0, 1) == cplx{}) return s;
    const double phi = std::arg(s.theta0(0, 1));
    auto rotate = [phi](const Spectrum& g) {
        Spectrum r(g.kind(), g.order(), g.base());
        for (int k = -1; k <= 1; ++k) {
            if (!g.allows(k)) continue;
            for (int n = -g.span(); n <= g.span(); ++n)
                if (g(k, n) != cplx{}) r.put(k, n, g(k, n) * std::polar(1.0, -n * phi));
        }
        return r;
    };
    SteadyState r = s;
    r.m_a = rotate(s.m_a);
    r.u_ga = rotate(s.u_ga);
    r.u_dc = rotate(s.u_dc);
    r.theta0 = rotate(s.theta0);
    if (s.i_pp) r.i_pp = rotate(*s.i_pp);
    return r;
}

// Re-expresses a steady state on another order, zero-filling new sidebands.
inline SteadyState reorder(const SteadyState& s, int order) {
    SteadyState r;
    r.order = order;
    r.fs = s.fs;
    r.m_a = s.m_a.truncated().regrid(order, s.fs).truncated();
    r.u_ga = s.u_ga.truncated().regrid(order, s.fs).truncated();
    r.u_dc = s.u_dc.truncated().regrid(order, s.fs).truncated();
    r.theta0 = s.theta0.truncated().regrid(order, s.fs).truncated();
    if (s.i_pp) r.i_pp = s.i_pp->truncated().regrid(order, s.fs).truncated();
    return r;
}

// Typical magnitudes, used for finite-difference steps and scan increments.
inline Eigen::VectorXd unknown_scales(const UnknownLayout& L, const SystemParams& p) {
    Eigen::VectorXd s(L.size());
    for (int i = 0; i < L.size(); ++i) {
        switch (L[i].sig) {
            case Signal::ModIndex: s(i) = 0.1; break;
            case Signal::PccVoltage: s(i) = 0.1 * p.u_t_coeff(); break;
            case Signal::DcVoltage: s(i) = 0.1 * p.u_dc_ref; break;
            case Signal::PllAngle: s(i) = L[i].part == Part::Ang ? 1.0 : 0.01; break;
            case Signal::CurrentRef: s(i) = L[i].part == Part::Ang ? 1.0 : 10.0; break;
            case Signal::OscFrequency: s(i) = 1.0; break;
        }
    }
    return s;
}

}  // namespace sohb
