#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linearization.hpp"
#include "spectrum.hpp"

namespace sohb {

enum class ModeKind { Zero, Pole };
enum class Damping { Positive, Negative, Neutral };

inline const char* to_string(ModeKind k) { return k == ModeKind::Zero ? "zero" : "pole"; }
inline const char* to_string(Damping d) {
    switch (d) {
        case Damping::Positive: return "positive";
        case Damping::Negative: return "negative";
        case Damping::Neutral: return "neutral";
    }
    return "?";
}

// lambda = alpha + j omega. Positive damping means alpha < 0.
struct Mode {
    ModeKind kind = ModeKind::Zero;
    double f_hz = 0.0;
    double alpha = 0.0;
    double alpha_slope = 0.0;
    bool confident = true;
    Damping damping = Damping::Positive;

    double omega() const { return kTwoPi * f_hz; }
    cplx lambda() const { return {alpha, omega()}; }
};

inline Damping classify_damping(double alpha, double neutral_band = 0.0) {
    if (std::abs(alpha) <= neutral_band) return Damping::Neutral;
    return alpha < 0.0 ? Damping::Positive : Damping::Negative;
}

// (dG/dw)/G by three-point differences on a possibly uneven grid; the end
// samples are dropped.
inline FrequencyResponse log_derivative(const FrequencyResponse& fr) {
    if (fr.size() < 3) throw std::invalid_argument("log_derivative needs at least 3 samples");
    FrequencyResponse d;
    d.quantity = "D_L(" + fr.quantity + ")";
    for (std::size_t i = 1; i + 1 < fr.size(); ++i) {
        const double h1 = kTwoPi * (fr.f[i] - fr.f[i - 1]);
        const double h2 = kTwoPi * (fr.f[i + 1] - fr.f[i]);
        if (!(h1 > 0.0 && h2 > 0.0)) throw std::invalid_argument("frequency grid must be strictly increasing");
        const cplx g = fr.value[i];
        if (std::abs(g) == 0.0) throw std::domain_error("zero-magnitude sample at " + std::to_string(fr.f[i]) + " Hz");
        const cplx dg = -h2 / (h1 * (h1 + h2)) * fr.value[i - 1] + (h2 - h1) / (h1 * h2) * g +
                        h1 / (h2 * (h1 + h2)) * fr.value[i + 1];
        d.push(fr.f[i], dg / g);
    }
    return d;
}

// A zero shows as an upward zero crossing of Re[D_L] at an extremum of
// Im[D_L] = -1/alpha; a pole flips both signs.
inline std::vector<Mode> identify_modes(const FrequencyResponse& dl) {
    std::vector<Mode> out;
    const std::size_t n = dl.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double r0 = dl.value[i].real(), r1 = dl.value[i + 1].real();
        if (!(r0 * r1 < 0.0 || (r0 == 0.0 && r1 != 0.0))) continue;
        const double w0 = kTwoPi * dl.f[i], w1 = kTwoPi * dl.f[i + 1];
        const double t = r0 / (r0 - r1);
        const double wc = w0 + t * (w1 - w0);
        const double imc = dl.value[i].imag() + t * (dl.value[i + 1].imag() - dl.value[i].imag());
        const double slope = (r1 - r0) / (w1 - w0);

        // Between two modes of one kind the crossing sits in a valley of |Im|,
        // larger on both sides. An under-resolved or skewed peak is larger on
        // at most one side.
        const double lo = i >= 1 ? std::abs(dl.value[i - 1].imag()) : 0.0;
        const double hi = i + 2 < n ? std::abs(dl.value[i + 2].imag()) : 0.0;
        if (std::abs(imc) < 0.98 * std::min(lo, hi)) continue;
        if (imc == 0.0) continue;

        Mode m;
        m.kind = slope > 0.0 ? ModeKind::Zero : ModeKind::Pole;
        m.f_hz = wc / kTwoPi;
        m.alpha = m.kind == ModeKind::Zero ? -1.0 / imc : 1.0 / imc;
        m.alpha_slope = std::copysign(1.0 / std::sqrt(std::abs(slope)), m.alpha);
        m.confident = std::abs(m.alpha_slope - m.alpha) <= 0.25 * std::abs(m.alpha);
        m.damping = classify_damping(m.alpha);
        out.push_back(m);
    }
    return out;
}

inline cplx mode_log_derivative(const Mode& m, double w) {
    const cplx term = cplx(0.0, 1.0) / (cplx(0.0, w) - m.lambda());
    return m.kind == ModeKind::Zero ? term : -term;
}

struct ModeScanOptions {
    double f_lo = -50.0;
    double f_hi = 150.0;
    double step = 0.25;
    int refine_factor = 10;
    double refine_halfwidth = 2.0;
    int deflation_passes = 6;
    // Probe frequencies closer than `guard` to these are moved off them.
    double line_f1 = 0.0;
    double line_fs = 0.0;
    double guard = 0.0;
};

namespace detail {
inline FrequencyResponse sample(const std::function<cplx(double)>& G, const std::vector<double>& grid) {
    FrequencyResponse fr;
    for (double f : grid) {
        try {
            const cplx v = G(f);
            if (std::isfinite(v.real()) && std::isfinite(v.imag()) && v != cplx{})
                fr.push(f, v);
            else
                fr.skipped.push_back(f);
        } catch (const std::runtime_error&) {
            fr.skipped.push_back(f);
        }
    }
    return fr;
}

inline std::optional<Mode> nearest(const std::vector<Mode>& ms, const Mode& ref) {
    std::optional<Mode> best;
    for (const Mode& m : ms) {
        if (m.kind != ref.kind) continue;
        if (!best || std::abs(m.f_hz - ref.f_hz) < std::abs(best->f_hz - ref.f_hz)) best = m;
    }
    return best;
}
}  // namespace detail

// Coarse scan, local refinement around each detection, then mutual
// correction: each mode is re-read from D_L with the other modes' exact
// contributions removed.
inline std::vector<Mode> scan_modes(const std::function<cplx(double)>& G, const ModeScanOptions& o) {
    auto grid = [&](double lo, double hi, double step) {
        auto g = linspace_step(lo, hi, step);
        return o.guard > 0.0 ? avoid_lines(g, o.line_f1, o.line_fs, o.guard) : g;
    };
    const FrequencyResponse coarse = detail::sample(G, grid(o.f_lo, o.f_hi, o.step));
    if (coarse.size() < 3) return {};
    const std::vector<Mode> found = identify_modes(log_derivative(coarse));

    struct Local {
        Mode mode;
        FrequencyResponse dl;
    };
    std::vector<Local> locals;
    for (const Mode& c : found) {
        // Refine until the grid resolves the mode's own width.
        std::optional<Mode> m = c;
        FrequencyResponse dl;
        double step = o.step;
        for (int round = 0; round < 3 && m; ++round) {
            const double width = std::abs(m->alpha) / kTwoPi;  // Hz
            const double next = std::max(std::min(o.step / o.refine_factor, width / 30.0), 1e-4);
            if (round > 0 && next >= 0.8 * step) break;
            step = next;
            const double half = std::min(o.refine_halfwidth, std::max(5.0 * width, 20.0 * step));
            const FrequencyResponse fine = detail::sample(G, grid(m->f_hz - half, m->f_hz + half, step));
            if (fine.size() < 3) {
                m.reset();
                break;
            }
            dl = log_derivative(fine);
            m = detail::nearest(identify_modes(dl), *m);
        }
        if (!m) continue;
        bool dup = false;
        for (const Local& l : locals)
            if (l.mode.kind == m->kind && std::abs(l.mode.f_hz - m->f_hz) < 2.0 * step) dup = true;
        if (!dup) locals.push_back({*m, std::move(dl)});
    }

    for (int pass = 0; pass < o.deflation_passes && locals.size() > 1; ++pass) {
        std::vector<Mode> next;
        for (std::size_t i = 0; i < locals.size(); ++i) {
            FrequencyResponse corrected = locals[i].dl;
            for (std::size_t k = 0; k < corrected.size(); ++k)
                for (std::size_t j = 0; j < locals.size(); ++j)
                    if (j != i) corrected.value[k] -= mode_log_derivative(locals[j].mode, kTwoPi * corrected.f[k]);
            auto m = detail::nearest(identify_modes(corrected), locals[i].mode);
            next.push_back(m ? *m : locals[i].mode);
        }
        for (std::size_t i = 0; i < locals.size(); ++i) locals[i].mode = next[i];
    }

    std::vector<Mode> out;
    for (const Local& l : locals) out.push_back(l.mode);
    std::sort(out.begin(), out.end(), [](const Mode& a, const Mode& b) { return a.f_hz < b.f_hz; });
    return out;
}

// Newton iteration for a root of an analytic function of s, derivative by
// central differences in the complex plane.
inline std::optional<cplx> polish_root(const std::function<cplx(cplx)>& g, cplx s0, int max_iter = 60) {
    cplx s = s0;
    for (int it = 0; it < max_iter; ++it) {
        const double h = 1e-6 * std::max(1.0, std::abs(s));
        cplx v, dv;
        try {
            v = g(s);
            dv = (g(s + h) - g(s - h)) / (2.0 * h);
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
        if (!std::isfinite(std::abs(v)) || !std::isfinite(std::abs(dv)) || dv == cplx{}) return std::nullopt;
        cplx step = v / dv;
        // Keep each step within a few Hz of the current estimate.
        const double cap = 2.0 * kTwoPi;
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        s -= step;
        if (std::abs(step) < 1e-11 * std::max(1.0, std::abs(s))) return s;
    }
    return std::nullopt;
}

// Loop-impedance modes: D_L detection on the real axis, then each estimate is
// polished as a complex root of Z (zeros) or 1/Z (poles).
struct LoopModeOptions {
    ModeScanOptions scan;
    bool polish = true;
    double neutral_band = 0.0;
};

inline std::vector<Mode> loop_modes(const LoopLinearization& lin, const LoopModeOptions& o) {
    auto G = [&lin](double f) { return lin.impedance(cplx(0.0, kTwoPi * f)); };
    std::vector<Mode> modes = scan_modes(G, o.scan);
    if (!o.polish) return modes;
    for (Mode& m : modes) {
        std::function<cplx(cplx)> g;
        if (m.kind == ModeKind::Zero)
            g = [&lin](cplx s) { return lin.impedance(s); };
        else
            g = [&lin](cplx s) { return lin.admittance(s); };
        if (auto root = polish_root(g, m.lambda())) {
            if (std::abs(root->imag() - m.omega()) < kTwoPi * 2.0) {
                m.alpha = root->real();
                m.f_hz = root->imag() / kTwoPi;
            }
        }
        m.damping = classify_damping(m.alpha, o.neutral_band);
    }
    return modes;
}

// Negative-damping zero nearest to f1 + fs for a conventional (equilibrium)
// analysis; its offset from f1 is the expected oscillation frequency.
inline std::optional<Mode> dominant_unstable_zero(const std::vector<Mode>& modes) {
    std::optional<Mode> best;
    for (const Mode& m : modes)
        if (m.kind == ModeKind::Zero && m.alpha > 0.0 && (!best || m.alpha > best->alpha)) best = m;
    return best;
}

}  // namespace sohb
