#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "limiter.hpp"
#include "linearization.hpp"
#include "modes.hpp"
#include "newton.hpp"
#include "params.hpp"
#include "unknowns.hpp"
#include "vsc_model.hpp"

namespace sohb {

struct SolveConfig {
    int order = 3;
    double tol = 1e-9;
    int max_iter = 50;
    double jacobian_step = 1e-7;
    // Scan increments and extents, as fractions of the base magnitudes.
    double scan_step = 0.01;
    double scan_extent = 0.40;
    // Skips staged initialization when present.
    std::optional<SteadyState> seed;
    // When no SO is found at the requested L_g, retry from an SO computed at
    // this grid inductance (without limits) and carry it over as the seed.
    bool allow_fallback = true;
    double fallback_L_g = 1e-3;
};

struct StageRecord {
    int order = 0;
    int attempts = 0;
    double seed_re_udc = 0.0;
    double seed_m_theta = 0.0;
    int iterations = 0;
    double residual_norm = 0.0;
    bool success = false;
    std::string note;
};

struct SolveReport {
    bool converged = false;
    bool so_found = false;
    int iterations = 0;
    double residual_norm = INFINITY;
    TriggerMode trigger = TriggerMode::None;
    std::optional<SteadyState> solution;
    SteadyState equilibrium;
    double fs0 = 0.0;
    std::vector<StageRecord> trace;
    std::vector<std::string> tallies;
    std::string message;
    double elapsed_s = 0.0;
};

class solver_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline NewtonOptions newton_options(const SolveConfig& cfg, const UnknownLayout& L, const SystemParams& p) {
    NewtonOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.rel_step = cfg.jacobian_step;
    o.scales = unknown_scales(L, p);
    return o;
}

struct SeededSolve {
    NewtonReport report;
    std::optional<SteadyState> state;
};

inline SeededSolve solve_from(const UnknownLayout& L, const SteadyState& seed, const SystemParams& p,
                              const SolveConfig& cfg) {
    SeededSolve r;
    r.report = newton_solve([&](const Eigen::VectorXd& x) { return assemble_residuals(L, x, p); }, encode(L, seed),
                            newton_options(cfg, L, p));
    if (r.report.converged()) r.state = decode(L, r.report.x, p);
    return r;
}

inline bool has_sidebands(const SteadyState& s, const SystemParams& p) {
    return s.order >= 1 && s.fs > 0.0 && std::abs(s.u_dc(0, 1)) > 1e-3 * p.u_dc_ref;
}

// Conventional analysis: the negative-damping zero of the equilibrium loop
// impedance. Its distance from f1 seeds f_s.
inline std::optional<double> conventional_oscillation_frequency(const SteadyState& eq, const SystemParams& p) {
    const LoopLinearization lin(operating_point(eq, p), p, 0);
    LoopModeOptions o;
    o.scan.f_lo = 0.0;
    o.scan.f_hi = 2.0 * p.f_1;
    auto z = dominant_unstable_zero(loop_modes(lin, o));
    if (!z) return std::nullopt;
    return std::abs(z->f_hz - p.f_1);
}

struct StagedResult {
    std::optional<SteadyState> state;
    SteadyState equilibrium;
    double fs0 = 0.0;
    std::vector<StageRecord> trace;
    std::string message;
};

inline std::vector<double> scan_fractions(double step, double extent, bool signed_values) {
    std::vector<double> v;
    const int n = static_cast<int>(std::floor(extent / step + 1e-9));
    for (int i = 1; i <= n; ++i) {
        v.push_back(i * step);
        if (signed_values) v.push_back(-i * step);
    }
    return v;
}

// Equilibrium, then f_s0 from the conventional mode, then the order-1 scan over
// R(u_dc<s>) (outer) and M(theta0<s>) (inner), then one scan per higher order
// over M(theta0<n s>).
inline StagedResult staged_initialization(const SystemParams& p, const SolveConfig& cfg) {
    StagedResult out;
    const EquilibriumResult eq = equilibrium_solve(p);
    out.equilibrium = eq.state;
    out.trace.push_back({0, 1, 0.0, 0.0, eq.report.iterations, eq.report.residual_norm, true, "equilibrium"});
    if (cfg.order == 0) {
        out.state = eq.state;
        return out;
    }
    const auto fs0 = conventional_oscillation_frequency(eq.state, p);
    if (!fs0) {
        out.message = "no negative-damping mode at the equilibrium; no SO seed";
        return out;
    }
    out.fs0 = *fs0;

    SteadyState base = reorder(eq.state, 1);
    base.fs = out.fs0;
    const UnknownLayout L1(1, false);
    const double udc0 = eq.state.u_dc(0, 0).real();
    const double th0 = eq.state.theta0(0, 0).real();
    StageRecord rec{1, 0, 0.0, 0.0, 0, 0.0, false, "order-1 scan"};
    std::optional<SteadyState> current;
    for (double fr : scan_fractions(cfg.scan_step, cfg.scan_extent, true)) {
        for (double fm : scan_fractions(cfg.scan_step, cfg.scan_extent, false)) {
            SteadyState seed = base;
            seed.u_dc.set(0, 1, fr * udc0);
            seed.theta0.set(0, 1, fm * th0);
            ++rec.attempts;
            SeededSolve r = solve_from(L1, seed, p, cfg);
            if (r.state && has_sidebands(*r.state, p)) {
                rec.seed_re_udc = fr * udc0;
                rec.seed_m_theta = fm * th0;
                rec.iterations = r.report.iterations;
                rec.residual_norm = r.report.residual_norm;
                rec.success = true;
                current = gauge_aligned(*r.state);
                break;
            }
        }
        if (current) break;
    }
    out.trace.push_back(rec);
    if (!current) {
        out.message = "SO not found from this seed; limiter likely required or reduce L_g";
        return out;
    }

    for (int n = 2; n <= cfg.order; ++n) {
        StageRecord rn{n, 0, 0.0, 0.0, 0, 0.0, false, "order-" + std::to_string(n) + " scan"};
        const UnknownLayout Ln(n, false);
        const SteadyState prev = reorder(*current, n);
        const double m1 = std::abs(prev.theta0(0, 1));
        std::optional<SteadyState> next;
        std::vector<double> fracs{0.0};
        if (n <= kMaxThetaOrder) fracs = scan_fractions(cfg.scan_step, cfg.scan_extent, false);
        for (double fm : fracs) {
            SteadyState seed = prev;
            if (n <= kMaxThetaOrder) seed.theta0.set(0, n, fm * m1);
            ++rn.attempts;
            SeededSolve r = solve_from(Ln, seed, p, cfg);
            if (r.state && has_sidebands(*r.state, p)) {
                rn.seed_m_theta = fm * m1;
                rn.iterations = r.report.iterations;
                rn.residual_norm = r.report.residual_norm;
                rn.success = true;
                next = gauge_aligned(*r.state);
                break;
            }
        }
        out.trace.push_back(rn);
        if (!next) {
            out.message = "order-" + std::to_string(n) + " refinement failed to converge";
            return out;
        }
        current = next;
    }
    out.state = current;
    return out;
}

// Pre-limit reference implied by a limiter-free state.
inline Spectrum prelimit_reference(const SteadyState& s, const SystemParams& p) {
    if (s.i_pp) return *s.i_pp;
    return evaluate_intermediates(s, p).i_pp;
}

inline SteadyState with_prelimit(const SteadyState& s, const SystemParams& p) {
    SteadyState r = s;
    r.i_pp = prelimit_reference(s, p);
    return r;
}

// Limiter-free solve, trigger test on the pre-limit reference, and a
// limiter-active re-solve seeded from the limiter-free state when triggered.
inline SolveReport solve_so(const SystemParams& p, const SolveConfig& cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    const int N = cfg.order;
    auto done = [&]() {
        rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    };

    std::optional<SteadyState> seed = cfg.seed;
    std::optional<SteadyState> free_state;
    const UnknownLayout Lfree(N, false);

    if (seed) {
        rep.equilibrium = equilibrium_solve(p).state;
        SteadyState s0 = gauge_aligned(reorder(*seed, N));
        s0.i_pp.reset();
        SeededSolve r = solve_from(Lfree, s0, p, cfg);
        StageRecord rec{N, 1, 0.0, 0.0, r.report.iterations, r.report.residual_norm, false, "seeded limiter-free"};
        if (r.state && (N == 0 || has_sidebands(*r.state, p))) {
            rec.success = true;
            free_state = r.state;
        }
        rep.trace.push_back(rec);
    } else {
        StagedResult st = staged_initialization(p, cfg);
        rep.equilibrium = st.equilibrium;
        rep.fs0 = st.fs0;
        rep.trace = st.trace;
        rep.message = st.message;
        free_state = st.state;
        if (!free_state && cfg.allow_fallback && N > 0 && p.L_g > cfg.fallback_L_g) {
            SystemParams q = p;
            q.L_g = cfg.fallback_L_g;
            q.lim = {1e12, -1e12};
            SolveConfig qc = cfg;
            qc.allow_fallback = false;
            StagedResult fb = staged_initialization(q, qc);
            for (auto& t : fb.trace) {
                t.note = "fallback L_g: " + t.note;
                rep.trace.push_back(t);
            }
            if (fb.state) {
                seed = fb.state;
                rep.message.clear();
            }
        }
    }

    if (N == 0) {
        if (!free_state) {
            rep.message = "equilibrium solve failed";
            return done();
        }
        rep.converged = true;
        rep.solution = free_state;
        rep.tallies.push_back(equation_tally(Lfree).to_string());
        return done();
    }

    std::optional<SteadyState> limiter_seed;
    TriggerMode trig = TriggerMode::None;
    if (free_state) {
        rep.tallies.push_back(equation_tally(Lfree).to_string());
        trig = classify_trigger(prelimit_reference(*free_state, p), p.lim);
        if (trig == TriggerMode::None) {
            rep.converged = rep.so_found = true;
            rep.trigger = trig;
            rep.solution = free_state;
            rep.residual_norm = rep.trace.back().residual_norm;
            rep.iterations = rep.trace.back().iterations;
            return done();
        }
        limiter_seed = with_prelimit(*free_state, p);
    } else if (seed) {
        const SteadyState s = gauge_aligned(reorder(*seed, N));
        limiter_seed = with_prelimit(s, p);
        trig = classify_trigger(*limiter_seed->i_pp, p.lim);
        if (trig == TriggerMode::None) {
            rep.message = "SO not found from this seed; limiter likely required or reduce L_g";
            return done();
        }
    } else {
        if (rep.message.empty()) rep.message = "SO not found from this seed; limiter likely required or reduce L_g";
        return done();
    }

    const UnknownLayout Llim(N, true);
    SeededSolve r = solve_from(Llim, *limiter_seed, p, cfg);
    StageRecord rec{N, 1, 0.0, 0.0, r.report.iterations, r.report.residual_norm, r.report.converged(),
                    std::string("limiter-active (") + to_string(trig) + ")"};
    if (!r.report.converged()) rec.note += ": " + std::string(to_string(r.report.status)) + " " + r.report.message;
    rep.trace.push_back(rec);
    if (!r.state || !has_sidebands(*r.state, p)) {
        rep.message = "limiter-active solve failed: " + std::string(to_string(r.report.status));
        return done();
    }
    const SteadyState sol = gauge_aligned(*r.state);
    rep.converged = rep.so_found = true;
    rep.iterations = r.report.iterations;
    rep.residual_norm = r.report.residual_norm;
    rep.trigger = classify_trigger(*sol.i_pp, p.lim);
    rep.solution = sol;
    rep.tallies.push_back(equation_tally(Llim).to_string());
    return done();
}

}  // namespace sohb
