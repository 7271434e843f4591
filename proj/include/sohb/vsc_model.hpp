#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "limiter.hpp"
#include "newton.hpp"
#include "params.hpp"
#include "spectrum.hpp"
#include "trig_expansion.hpp"
#include "unknowns.hpp"

namespace sohb {

class model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every derived spectrum of the balance equations. Primed quantities (the
// *_alt members) are the same signal computed along a second path.
struct IntermediateSet {
    Spectrum u_ta, u_ca, i_a;
    Spectrum e_a, e_a_alt;
    Spectrum i_dc, i_dc_alt;
    Spectrum cos_theta, sin_theta;
    Spectrum i_d, i_q, u_gq;
    Spectrum e_d, e_d_alt, e_q, e_q_alt;
    Spectrum theta_alt;
    Spectrum i_pp, i_pp_alt, i_ref;
    TriggerMode trigger = TriggerMode::None;
    double spill_ratio = 0.0;
    bool dc_undefined = false;
};

inline Spectrum source_spectrum(const SystemParams& p, int order, BaseFreqs base) {
    Spectrum u(Kind::AC, order, base);
    u.set(1, 0, p.u_t_coeff());
    return u;
}

// Inductor branches and the DC node.
inline void passive_relations(const SteadyState& s, const SystemParams& p, IntermediateSet& I) {
    const BaseFreqs base = s.u_ga.base();
    I.u_ta = source_spectrum(p, s.order, base);
    I.u_ca = s.u_ga;
    const double Lg = p.L_g;
    I.i_a = apply_frequency_gain(s.u_ga - I.u_ta, [Lg](double f) { return 1.0 / cplx(0.0, kTwoPi * f * Lg); }, true).out;
    I.e_a_alt = s.u_ga + p.L_f * apply_derivative_gain(I.i_a);
    I.i_dc_alt = -p.C_dc * apply_derivative_gain(s.u_dc);
    I.i_dc_alt.set(0, 0, p.I_load);
}

// Modulation products and Park projections.
inline void control_stage_products(const SteadyState& s, const SystemParams& p, const TrigPair& trig,
                                   IntermediateSet& I, double spill_limit = 1e-6) {
    I.cos_theta = trig.cos;
    I.sin_theta = trig.sin;
    double spill = 0.0, total = 0.0;
    auto mul = [&](const Spectrum& a, const Spectrum& b, double k) {
        Spectrum r = toeplitz_product(a, b);
        spill += r.spill() * k * k;
        r *= k;
        total += r.energy();
        return r;
    };
    I.e_a = mul(s.m_a, s.u_dc, 0.5);
    I.i_dc = mul(s.m_a, I.i_a, 1.5);
    I.i_d = mul(I.i_a, trig.cos, 2.0);
    I.i_q = mul(I.i_a, trig.sin, 2.0);
    I.u_gq = mul(s.u_ga, trig.sin, 2.0);
    I.e_d = mul(s.m_a, trig.cos, 2.0 / p.k_pwm);
    I.e_q = mul(s.m_a, trig.sin, 2.0 / p.k_pwm);
    I.spill_ratio = std::max(trig.spill_ratio, total > 0.0 ? spill / total : 0.0);
    if (I.spill_ratio > spill_limit)
        throw model_error("truncation spill " + std::to_string(I.spill_ratio) + " above limit");
}

// PI controllers. The DC slots they cannot produce are left at zero and
// filled by the zero-frequency constraints.
inline void pi_relations(const SteadyState& s, const SystemParams& p, IntermediateSet& I) {
    const double kp = p.kp_pll, ki = p.ki_pll;
    auto pll = apply_frequency_gain(
        I.u_gq,
        [kp, ki](double f) {
            const cplx jw(0.0, kTwoPi * f);
            return -(kp + ki / jw) / jw;
        },
        true);
    I.theta_alt = pll.out;
    auto dc = apply_pi_gain(s.u_dc, p.kp_dc, p.ki_dc);
    I.i_pp_alt = dc.out;
    I.dc_undefined = pll.dc_undefined || dc.dc_undefined;

    if (s.i_pp) {
        I.i_pp = *s.i_pp;
        I.trigger = classify_trigger(I.i_pp, p.lim);
        I.i_ref = clipped_fourier(I.i_pp, p.lim, s.order);
    } else {
        I.i_pp = I.i_pp_alt;
        I.i_pp.set(0, 0, I.i_d(0, 0));
        I.trigger = TriggerMode::None;
        I.i_ref = I.i_pp;
    }
    I.e_d_alt = apply_pi_gain(I.i_ref - I.i_d, p.kp_cc, p.ki_cc).out;
    Spectrum iq_ref(Kind::DC, s.order, s.u_dc.base());
    iq_ref.set(0, 0, p.i_q_ref);
    I.e_q_alt = apply_pi_gain(iq_ref - I.i_q, p.kp_cc, p.ki_cc).out;
}

inline IntermediateSet evaluate_intermediates(const SteadyState& s, const SystemParams& p) {
    IntermediateSet I;
    passive_relations(s, p, I);
    control_stage_products(s, p, theta_trig_spectra(s.theta0), I);
    pi_relations(s, p, I);
    return I;
}

// Zero-frequency closure: i_d*(0) = i_d(0), i_q*(0) = i_q(0), u_gq(0) = 0,
// u_dc(0) = u_dc_ref.
inline std::array<double, 4> dc_constraints(const IntermediateSet& I, const SteadyState& s, const SystemParams& p) {
    return {I.i_ref(0, 0).real() - I.i_d(0, 0).real(), p.i_q_ref - I.i_q(0, 0).real(), I.u_gq(0, 0).real(),
            s.u_dc(0, 0).real() - p.u_dc_ref};
}

struct EquationTally {
    int order = 0;
    bool limiter = false;
    int unknowns = 0;
    std::vector<std::pair<std::string, int>> rows;

    int total() const {
        int t = 0;
        for (const auto& r : rows) t += r.second;
        return t;
    }
    bool square() const { return total() == unknowns; }
    std::string to_string() const {
        std::ostringstream os;
        os << "N=" << order << (limiter ? " limiter-active" : " limiter-free") << ":";
        for (const auto& [name, n] : rows) os << " " << name << "=" << n;
        os << " | rows=" << total() << " unknowns=" << unknowns;
        return os.str();
    }
};

inline EquationTally equation_tally(const UnknownLayout& L) {
    const int N = L.order();
    EquationTally t;
    t.order = N;
    t.limiter = L.limiter_active();
    t.unknowns = L.size();
    t.rows = {
        {"converter-voltage", 2 * (2 * N + 1)},
        {"dc-node", 2 * N},
        {"d-current-loop", 2 * N},
        {"q-current-loop", 2 * N},
        {"pll", 2 * L.theta_order()},
        {"dc-constraints", L.limiter_active() ? 4 : 3},
    };
    if (L.limiter_active()) t.rows.push_back({"dc-voltage-loop", 2 * N});
    return t;
}

inline Eigen::VectorXd assemble_residuals(const UnknownLayout& L, const Eigen::VectorXd& x, const SystemParams& p) {
    const EquationTally tally = equation_tally(L);
    if (!tally.square()) throw model_error("non-square system: " + tally.to_string());
    const int N = L.order();
    const SteadyState s = decode(L, x, p);
    const IntermediateSet I = evaluate_intermediates(s, p);
    const auto dc = dc_constraints(I, s, p);

    Eigen::VectorXd r(L.size());
    int i = 0;
    auto cx = [&](cplx v) {
        r(i++) = v.real();
        r(i++) = v.imag();
    };
    for (int n = -N; n <= N; ++n) cx(I.e_a(1, n) - I.e_a_alt(1, n));
    for (int n = 1; n <= N; ++n) cx(I.i_dc(0, n) - I.i_dc_alt(0, n));
    if (L.limiter_active()) {
        for (int n = 1; n <= N; ++n) cx(I.i_pp(0, n) - I.i_pp_alt(0, n));
        r(i++) = dc[0];
    }
    r(i++) = dc[3];
    for (int n = 1; n <= N; ++n) cx(I.e_d(0, n) - I.e_d_alt(0, n));
    r(i++) = dc[1];
    for (int n = 1; n <= N; ++n) cx(I.e_q(0, n) - I.e_q_alt(0, n));
    r(i++) = dc[2];
    for (int n = 1; n <= L.theta_order(); ++n) cx(s.theta0(0, n) - I.theta_alt(0, n));
    if (i != L.size()) throw model_error("row count drifted from tally: " + tally.to_string());
    return r;
}

inline Eigen::VectorXd assemble_residuals(int order, TriggerMode mode, const Eigen::VectorXd& x, const SystemParams& p) {
    return assemble_residuals(UnknownLayout(order, mode != TriggerMode::None), x, p);
}

struct EquilibriumResult {
    SteadyState state;
    NewtonReport report;
};

// Fundamental-plus-DC operating point (N = 0).
inline EquilibriumResult equilibrium_solve(const SystemParams& p, const NewtonOptions& opt = {}) {
    p.validate();
    const UnknownLayout L(0, false);
    // Seed: PCC at the source voltage with the power-balance quadrature part.
    const cplx uga(p.u_t_coeff(), pcc_fundamental_imag(p));
    const cplx ia = (uga - p.u_t_coeff()) / cplx(0.0, p.omega1() * p.L_g);
    const cplx ea = uga + cplx(0.0, p.omega1() * p.L_f) * ia;
    SteadyState seed;
    seed.order = 0;
    const BaseFreqs base{p.f_1, 0.0};
    seed.m_a = Spectrum(Kind::AC, 0, base);
    seed.m_a.set(1, 0, 2.0 * ea / p.u_dc_ref);
    seed.u_ga = Spectrum(Kind::AC, 0, base);
    seed.u_ga.set(1, 0, uga);
    seed.u_dc = Spectrum(Kind::DC, 0, base);
    seed.u_dc.set(0, 0, p.u_dc_ref);
    seed.theta0 = Spectrum(Kind::DC, 0, base);
    seed.theta0.set(0, 0, std::arg(uga));

    NewtonOptions o = opt;
    o.scales = unknown_scales(L, p);
    NewtonReport rep = newton_solve([&](const Eigen::VectorXd& x) { return assemble_residuals(L, x, p); },
                                    encode(L, seed), o);
    if (!rep.converged()) throw model_error(std::string("equilibrium solve failed: ") + to_string(rep.status));
    return {decode(L, rep.x, p), rep};
}

}  // namespace sohb
