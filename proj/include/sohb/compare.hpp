#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "golden.hpp"
#include "params.hpp"
#include "spectrum.hpp"
#include "td_oracle.hpp"
#include "unknowns.hpp"
#include "vsc_model.hpp"

namespace sohb {

// Named spectra sharing one (f1, fs, N) grid, from either pipeline.
struct SignalSet {
    double f1 = 50.0;
    double fs = 0.0;
    int order = 0;
    std::map<std::string, Spectrum> spectra;

    bool has(const std::string& s) const { return spectra.count(s) != 0; }
};

// Solved unknowns plus the intermediates worth inspecting. i_pp is the
// reference before the hard limit, i_ref the one after it.
inline SignalSet solver_signals(const SteadyState& s, const SystemParams& p) {
    const IntermediateSet I = evaluate_intermediates(s, p);
    SignalSet out{p.f_1, s.fs, s.order, {}};
    auto add = [&](const std::string& name, const Spectrum& g) { out.spectra.emplace(name, g.truncated()); };
    add("m_a", s.m_a);
    add("u_ga", s.u_ga);
    add("u_dc", s.u_dc);
    add("theta0", s.theta0);
    add("i_pp", I.i_pp);
    add("i_ref", I.i_ref);
    add("i_a", I.i_a);
    add("e_a", I.e_a);
    add("i_d", I.i_d);
    add("i_q", I.i_q);
    add("u_gq", I.u_gq);
    add("i_dc", I.i_dc);
    return out;
}

inline SignalSet oracle_signals(const HarmonicEstimate& h) {
    SignalSet out;
    out.fs = h.fs;
    out.order = h.order;
    for (const auto& [name, s] : h.spectra) {
        out.f1 = s.f1();
        out.spectra.emplace(name, s);
    }
    return out;
}

inline std::optional<double> read_part(const SignalSet& set, const std::string& signal, Part part, int k, int n) {
    if (signal == "f_s") return set.fs;
    const auto it = set.spectra.find(signal);
    if (it == set.spectra.end()) return std::nullopt;
    if (std::abs(n) > it->second.order()) return std::nullopt;
    const cplx v = it->second(k, n);
    switch (part) {
        case Part::Re: return v.real();
        case Part::Im: return v.imag();
        case Part::Mag: return std::abs(v);
        case Part::Ang: return std::arg(v);
        case Part::Scalar: return std::nullopt;
    }
    return std::nullopt;
}

inline std::optional<double> read_part(const SignalSet& set, const golden::GoldenEntry& e) {
    return read_part(set, e.signal, e.part, e.k, e.n);
}

// Relative coefficient difference on the lines each signal carries. A line
// is dominant when it reaches `dominant_fraction` of the signal's largest line.
struct DiffRow {
    std::string signal;
    int k = 0;
    int n = 0;
    cplx a, b;
    double rel = 0.0;
    bool dominant = false;
    bool pass = true;
};

inline const std::vector<std::string>& table_signals() {
    static const std::vector<std::string> v{"m_a", "u_ga", "u_dc", "theta0", "i_pp"};
    return v;
}

inline std::vector<DiffRow> diff_sets(const SignalSet& a, const SignalSet& b, const std::vector<std::string>& signals,
                                      double dominant_fraction, double tol) {
    std::vector<DiffRow> rows;
    const int N = std::min(a.order, b.order);
    for (const auto& name : signals) {
        if (!a.has(name) || !b.has(name)) continue;
        const Spectrum& sa = a.spectra.at(name);
        const Spectrum& sb = b.spectra.at(name);
        const int k = sa.kind() == Kind::AC ? 1 : 0;
        const int lo = k == 1 ? -N : 0;
        double peak = 0.0;
        for (int n = lo; n <= N; ++n) peak = std::max(peak, std::abs(sb(k, n)));
        for (int n = lo; n <= N; ++n) {
            DiffRow r{name, k, n, sa(k, n), sb(k, n)};
            const double ref = std::abs(r.b);
            r.rel = ref > 0.0 ? std::abs(r.a - r.b) / ref : std::abs(r.a);
            r.dominant = ref >= dominant_fraction * peak;
            r.pass = !r.dominant || r.rel <= tol;
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_signal_set_csv(std::ostream& os, const SignalSet& s) {
    os << "# sohb-spectrum v1\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "# f1=%.17g fs=%.17g order=%d\n", s.f1, s.fs, s.order);
    os << buf;
    os << "signal,k,n,freq_hz,re,im,mag,ang\n";
    for (const auto& [name, g] : s.spectra) write_spectrum_csv(os, name, g);
}

inline SignalSet read_signal_set_csv(std::istream& is) {
    SignalSet s;
    std::string line;
    if (!std::getline(is, line) || line != "# sohb-spectrum v1") throw std::runtime_error("not a sohb-spectrum v1 file");
    if (!std::getline(is, line) || std::sscanf(line.c_str(), "# f1=%lf fs=%lf order=%d", &s.f1, &s.fs, &s.order) != 3)
        throw std::runtime_error("spectrum file lacks its grid line");
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string name, cell;
        std::vector<double> v;
        std::getline(row, name, ',');
        while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != 7) throw std::runtime_error("malformed spectrum row: " + line);
        const int k = static_cast<int>(v[0]), n = static_cast<int>(v[1]);
        auto it = s.spectra.find(name);
        if (it == s.spectra.end())
            it = s.spectra.emplace(name, Spectrum(k == 0 ? Kind::DC : Kind::AC, s.order, {s.f1, s.fs})).first;
        it->second.put(k, n, {v[3], v[4]});
    }
    return s;
}

// Time-origin shift: the n-th sideband turns by n phi.
inline SignalSet rotated(const SignalSet& s, double phi) {
    SignalSet r = s;
    for (auto& [name, g] : r.spectra)
        for (int k = -1; k <= 1; ++k) {
            if (!g.allows(k)) continue;
            for (int n = -g.span(); n <= g.span(); ++n)
                if (g(k, n) != cplx{}) g.put(k, n, g(k, n) * std::polar(1.0, n * phi));
        }
    return r;
}

// Golden values are rounded to four decimals, so half a unit of the last
// printed digit is always tolerated on top of the relative bound.
inline constexpr double kGoldenRounding = 0.5e-4;

struct GoldenRow {
    std::string label;
    double ours = 0.0;
    double ref = 0.0;
    double tol = 0.0;
    bool pass = true;
};

inline std::vector<GoldenRow> diff_golden(const SignalSet& s, const golden::GoldenTable& t, int column, double rel_tol) {
    std::vector<GoldenRow> rows;
    for (const auto& e : *t.entries) {
        if (column >= static_cast<int>(e.values.size()) || !e.values[column]) continue;
        const auto v = read_part(s, e);
        if (!v) continue;
        GoldenRow r{golden::label(e), *v, *e.values[column]};
        r.tol = std::max(rel_tol * std::abs(r.ref), kGoldenRounding);
        double d = r.ours - r.ref;
        if (e.part == Part::Ang) d = std::remainder(d, kTwoPi);
        r.pass = std::abs(d) <= r.tol;
        rows.push_back(r);
    }
    return rows;
}

// Reference angle that best aligns the Re/Im golden entries with `s`, found
// by a coarse sweep then golden-section refinement.
inline double fit_gauge(const SignalSet& s, const golden::GoldenTable& t, int column) {
    auto cost = [&](double phi) {
        const SignalSet r = rotated(s, phi);
        double c = 0.0;
        for (const auto& e : *t.entries) {
            if (e.n == 0 || (e.part != Part::Re && e.part != Part::Im)) continue;
            if (column >= static_cast<int>(e.values.size()) || !e.values[column]) continue;
            if (const auto v = read_part(r, e)) {
                const double rel = (*v - *e.values[column]) / std::max(std::abs(*e.values[column]), 1e-3);
                c += rel * rel;
            }
        }
        return c;
    };
    constexpr int kCoarse = 720;
    double best = 0.0, best_c = cost(0.0);
    for (int i = 1; i < kCoarse; ++i) {
        const double phi = -kPi + kTwoPi * i / kCoarse;
        const double c = cost(phi);
        if (c < best_c) best_c = c, best = phi;
    }
    double a = best - kTwoPi / kCoarse, b = best + kTwoPi / kCoarse;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        const double x1 = b - g * (b - a), x2 = a + g * (b - a);
        if (cost(x1) < cost(x2))
            b = x2;
        else
            a = x1;
    }
    return std::remainder(0.5 * (a + b), kTwoPi);
}

// Inverse of solver_signals for the unknowns, so a saved solve can seed or
// feed the linearization.
inline SteadyState state_from_signals(const SignalSet& s, bool with_prelimit) {
    auto need = [&](const char* name) -> const Spectrum& {
        if (!s.has(name)) throw std::runtime_error(std::string("missing signal ") + name);
        return s.spectra.at(name);
    };
    SteadyState st;
    st.order = s.order;
    st.fs = s.fs;
    st.m_a = need("m_a");
    st.u_ga = need("u_ga");
    st.u_dc = need("u_dc");
    st.theta0 = need("theta0");
    if (with_prelimit) st.i_pp = need("i_pp");
    return st;
}

}  // namespace sohb
