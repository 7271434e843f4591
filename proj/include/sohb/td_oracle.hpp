#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "linearization.hpp"
#include "newton.hpp"
#include "params.hpp"
#include "spectrum.hpp"

namespace sohb {

class oracle_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Average model in the frame rotating at w1, space vectors with peak phase
// magnitude. States: i (re, im), u_dc, theta0, PLL integrator, DC-voltage
// integrator, d and q current integrators.
using OdeState = std::array<double, 8>;

struct OdeSignals {
    cplx i, u_g, u_t, m, e;
    double u_dc = 0.0, theta0 = 0.0;
    double i_d = 0.0, i_q = 0.0, u_gq = 0.0;
    double i_pp = 0.0, i_ref = 0.0, i_dc = 0.0;
};

inline OdeState ode_rhs(const SystemParams& p, const OdeState& x, cplx u_t, OdeSignals* sig = nullptr) {
    const cplx i(x[0], x[1]);
    const double u_dc = x[2], th = x[3];
    const double L = p.L_f + p.L_g;
    const cplx rot(std::cos(th), -std::sin(th));
    const cplx i_dq = i * rot;
    const double i_d = i_dq.real(), i_q = -i_dq.imag();
    const double i_pp = p.kp_dc * (u_dc - p.u_dc_ref) + x[5];
    const double i_ref = std::clamp(i_pp, p.lim.lower, p.lim.upper);
    const double e_d = p.kp_cc * (i_ref - i_d) + x[6];
    const double e_q = p.kp_cc * (p.i_q_ref - i_q) + x[7];
    const cplx m = p.k_pwm * cplx(e_d, -e_q) * std::conj(rot);
    const cplx e = 0.5 * m * u_dc;
    const cplx u_g = u_t + p.L_g * (e - u_t) / L;
    const double u_gq = -(u_g * rot).imag();
    const double i_dc = 0.75 * (m * std::conj(i)).real();
    const cplx di = (e - u_t) / L - cplx(0.0, p.omega1()) * i;
    if (sig) *sig = {i, u_g, u_t, m, e, u_dc, th, i_d, i_q, u_gq, i_pp, i_ref, i_dc};
    return {di.real(), di.imag(), (p.I_load - i_dc) / p.C_dc, -(p.kp_pll * u_gq + x[4]),
            p.ki_pll * u_gq, p.ki_dc * (u_dc - p.u_dc_ref), p.ki_cc * (i_ref - i_d), p.ki_cc * (p.i_q_ref - i_q)};
}

// Stationary point of the ODE, found independently of the harmonic solver.
inline OdeState ode_equilibrium(const SystemParams& p) {
    const double U = p.u_t_peak();
    const double i0 = 2.0 * p.u_dc_ref * p.I_load / (3.0 * U);
    Eigen::VectorXd x0(8);
    x0 << i0, 0.0, p.u_dc_ref, std::atan2(p.omega1() * p.L_g * i0, U), 0.0, i0, U, 0.0;
    auto f = [&](const Eigen::VectorXd& v) {
        OdeState s;
        for (int k = 0; k < 8; ++k) s[k] = v(k);
        const OdeState d = ode_rhs(p, s, cplx(U, 0.0));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(d.data(), 8));
    };
    NewtonOptions o;
    o.tol = 1e-9;
    o.scales = Eigen::VectorXd::Ones(8);
    const NewtonReport r = newton_solve(f, x0, o);
    if (!r.converged()) throw oracle_error(std::string("ODE equilibrium failed: ") + to_string(r.status));
    OdeState s;
    for (int k = 0; k < 8; ++k) s[k] = r.x(k);
    return s;
}

struct Event {
    double t = 0.0;
    std::string key;
    double value = 0.0;
};

// Series voltage tone at the grid source, as a fraction of its peak.
struct Probe {
    double f_hz = 0.0;
    double amplitude = 0.01;
};

struct Scenario {
    SystemParams initial;
    std::vector<Event> events;
    double duration = 70.0;
    double step = 20e-6;
    double sample_period = 1e-3;
    std::optional<Probe> probe;
    // Starting state; the ODE equilibrium of `initial` when empty.
    std::optional<OdeState> start;

    void validate() const {
        initial.validate();
        if (!(step > 0.0 && step <= 50e-6)) throw config_error("integration step must be in (0, 50 us]");
        if (!(duration > 0.0)) throw config_error("duration must be positive");
        if (!(sample_period >= step)) throw config_error("sample period must not be below the step");
        for (std::size_t k = 1; k < events.size(); ++k)
            if (events[k].t < events[k - 1].t) throw config_error("events must be time-ordered");
    }
};

// L_g starts at 0.1 mH and switches to the configured value at t = 2 s.
inline Scenario default_scenario(const SystemParams& p) {
    Scenario sc;
    sc.initial = p;
    sc.initial.L_g = 0.1e-3;
    sc.events.push_back({2.0, "L_g", p.L_g});
    return sc;
}

// [scenario] duration/step/sample_period, [initial] parameter overrides in
// force before the first event, [events] entries `key@time = value`.
inline Scenario scenario_from_tree(const ConfigTree& tree) {
    const SystemParams p = params_from_tree(tree);
    Scenario sc;
    const auto ev = tree.get_child_optional("events");
    if (!ev) {
        sc = default_scenario(p);
    } else {
        sc.initial = p;
        if (auto init = tree.get_child_optional("initial"))
            for (const auto& [key, node] : *init) set_param(sc.initial, key, detail::parse_number(key, node.data()));
        for (const auto& [key, node] : *ev) {
            const auto at = key.find('@');
            if (at == std::string::npos) throw config_error("event key '" + key + "' must read name@time");
            Event e{detail::parse_number(key, key.substr(at + 1)), key.substr(0, at), detail::parse_number(key, node.data())};
            SystemParams check = sc.initial;
            set_param(check, e.key, e.value);
            sc.events.push_back(e);
        }
        std::stable_sort(sc.events.begin(), sc.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    if (auto s = tree.get_child_optional("scenario")) {
        for (const auto& [key, node] : *s) {
            const double v = detail::parse_number(key, node.data());
            if (key == "duration")
                sc.duration = v;
            else if (key == "step")
                sc.step = v;
            else if (key == "sample_period")
                sc.sample_period = v;
            else
                throw config_error("unknown [scenario] key '" + key + "'");
        }
    }
    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_tree(read_config_tree(path)); }

struct TimeSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> data;
    std::optional<double> diverged_at;
    OdeState final_state{};
    SystemParams final_params;

    std::size_t samples() const { return data.empty() ? 0 : data.front().size(); }
    double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
    bool has(const std::string& name) const { return std::find(names.begin(), names.end(), name) != names.end(); }
    const std::vector<double>& channel(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw oracle_error("missing channel '" + name + "'");
        return data[static_cast<std::size_t>(it - names.begin())];
    }
};

// Real channels: DC-type signals directly, AC-type as their a-phase waveform.
inline const std::vector<std::string>& dc_channels() {
    static const std::vector<std::string> v{"u_dc", "theta0", "i_d", "i_q", "u_gq", "i_pp", "i_ref", "i_dc"};
    return v;
}
inline const std::vector<std::string>& ac_channels() {
    static const std::vector<std::string> v{"u_ga", "i_a", "m_a", "e_a"};
    return v;
}

namespace detail {
inline std::vector<double> sample_row(const OdeSignals& s, double t, double w1) {
    const cplx ph = std::polar(1.0, w1 * t);
    return {s.u_dc, s.theta0, s.i_d, s.i_q, s.u_gq, s.i_pp, s.i_ref, s.i_dc,
            (s.u_g * ph).real(), (s.i * ph).real(), (s.m * ph).real(), (s.e * ph).real()};
}

inline cplx probe_source(const SystemParams& p, const std::optional<Probe>& pr, double t) {
    const double U = p.u_t_peak();
    if (!pr) return {U, 0.0};
    return U * (1.0 + pr->amplitude * std::polar(1.0, kTwoPi * (pr->f_hz - p.f_1) * t));
}

inline OdeState axpy(const OdeState& x, double h, const OdeState& k) {
    OdeState r;
    for (int i = 0; i < 8; ++i) r[i] = x[i] + h * k[i];
    return r;
}

// Fixed-step classic RK4. The callback sees every step-boundary state; it
// returns false to stop early.
inline std::optional<double> integrate(const Scenario& sc,
                                       const std::function<bool(std::size_t, double, const OdeState&, const SystemParams&)>& on_step,
                                       OdeState& x, SystemParams& p) {
    sc.validate();
    p = sc.initial;
    x = sc.start ? *sc.start : ode_equilibrium(sc.initial);
    const double h = sc.step;
    const std::size_t steps = static_cast<std::size_t>(std::llround(sc.duration / h));
    std::size_t next_event = 0;
    for (std::size_t k = 0;; ++k) {
        const double t = h * static_cast<double>(k);
        while (next_event < sc.events.size() && sc.events[next_event].t <= t + 0.5 * h) {
            set_param(p, sc.events[next_event].key, sc.events[next_event].value);
            ++next_event;
        }
        if (!on_step(k, t, x, p)) return std::nullopt;
        if (k == steps) break;
        const cplx u0 = probe_source(p, sc.probe, t);
        const cplx um = probe_source(p, sc.probe, t + 0.5 * h);
        const cplx u1 = probe_source(p, sc.probe, t + h);
        const OdeState k1 = ode_rhs(p, x, u0);
        const OdeState k2 = ode_rhs(p, axpy(x, 0.5 * h, k1), um);
        const OdeState k3 = ode_rhs(p, axpy(x, 0.5 * h, k2), um);
        const OdeState k4 = ode_rhs(p, axpy(x, h, k3), u1);
        for (int i = 0; i < 8; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        bool finite = true;
        for (double v : x) finite = finite && std::isfinite(v);
        if (!finite || std::abs(x[2]) > 10.0 * p.u_dc_ref) return t + h;
    }
    return std::nullopt;
}

inline std::size_t decimation(const Scenario& sc) {
    const double r = sc.sample_period / sc.step;
    const auto d = static_cast<std::size_t>(std::llround(r));
    if (d == 0 || std::abs(r - static_cast<double>(d)) > 1e-6 * r)
        throw config_error("sample period must be an integer multiple of the step");
    return d;
}
}  // namespace detail

// Runs the scenario and records every channel at the sample period. A
// blow-up stops the run and is reported through diverged_at.
inline TimeSeries simulate(const Scenario& sc) {
    TimeSeries ts;
    ts.dt = sc.sample_period;
    ts.names = dc_channels();
    ts.names.insert(ts.names.end(), ac_channels().begin(), ac_channels().end());
    ts.data.resize(ts.names.size());
    const std::size_t dec = detail::decimation(sc);
    const std::size_t expect = static_cast<std::size_t>(std::llround(sc.duration / sc.step)) / dec + 1;
    for (auto& c : ts.data) c.reserve(expect);
    OdeState x;
    SystemParams p;
    ts.diverged_at = detail::integrate(
        sc,
        [&](std::size_t k, double t, const OdeState& s, const SystemParams& q) {
            if (k % dec != 0) return true;
            OdeSignals sig;
            ode_rhs(q, s, detail::probe_source(q, sc.probe, t), &sig);
            const auto row = detail::sample_row(sig, t, q.omega1());
            for (std::size_t c = 0; c < row.size(); ++c) ts.data[c].push_back(row[c]);
            return true;
        },
        x, p);
    ts.final_state = x;
    ts.final_params = p;
    return ts;
}

// Binary dump: text header lines, then channel-major little-endian doubles.
inline void write_timeseries(std::ostream& os, const TimeSeries& ts) {
    os << "# sohb-timeseries v1\n";
    os << "channels";
    for (const auto& n : ts.names) os << ' ' << n;
    os << "\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "samples %zu dt %.17g t0 %.17g f1 %.17g\n", ts.samples(), ts.dt, ts.t0,
                  ts.final_params.f_1);
    os << buf;
    if (ts.diverged_at)
        std::snprintf(buf, sizeof buf, "diverged_at %.17g\n", *ts.diverged_at);
    else
        std::snprintf(buf, sizeof buf, "diverged_at none\n");
    os << buf << "data\n";
    for (const auto& c : ts.data) os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
}

inline TimeSeries read_timeseries(std::istream& is) {
    TimeSeries ts;
    std::string line;
    if (!std::getline(is, line) || line != "# sohb-timeseries v1") throw oracle_error("not a sohb-timeseries v1 dump");
    std::getline(is, line);
    std::istringstream ch(line);
    std::string word;
    ch >> word;
    if (word != "channels") throw oracle_error("malformed dump header");
    while (ch >> word) ts.names.push_back(word);
    std::size_t n = 0;
    std::getline(is, line);
    if (std::sscanf(line.c_str(), "samples %zu dt %lf t0 %lf f1 %lf", &n, &ts.dt, &ts.t0, &ts.final_params.f_1) != 4)
        throw oracle_error("malformed dump header");
    std::getline(is, line);
    if (line != "diverged_at none") ts.diverged_at = std::stod(line.substr(line.find(' ') + 1));
    std::getline(is, line);
    if (line != "data") throw oracle_error("malformed dump header");
    ts.data.assign(ts.names.size(), std::vector<double>(n));
    for (auto& c : ts.data) {
        is.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw oracle_error("truncated dump");
    }
    return ts;
}

inline void write_timeseries_csv(std::ostream& os, const TimeSeries& ts) {
    os << "# sohb-timeseries-csv v1\n";
    os << "t";
    for (const auto& n : ts.names) os << ',' << n;
    os << "\n";
    char buf[64];
    for (std::size_t k = 0; k < ts.samples(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9g", ts.time(k));
        os << buf;
        for (const auto& c : ts.data) {
            std::snprintf(buf, sizeof buf, ",%.12g", c[k]);
            os << buf;
        }
        os << "\n";
    }
}

struct HarmonicEstimate {
    double fs = 0.0;
    double window_start = 0.0;
    double window_length = 0.0;
    double resolution = 0.0;
    int order = 3;
    std::map<std::string, Spectrum> spectra;
};

// Hann-weighted Fourier coefficient at frequency f, amplitude-corrected so a
// tone 2M cos(2 pi f t + A) returns M e^{jA}.
class HannWindow {
public:
    HannWindow(const TimeSeries& ts, double start, double length) : ts_(ts) {
        if (ts.samples() == 0) throw oracle_error("empty time series");
        const double end = start + length;
        if (start < ts.t0 - 1e-9 || end > ts.time(ts.samples() - 1) + ts.dt * 0.5 + 1e-9)
            throw oracle_error("window lies outside the time series");
        first_ = static_cast<std::size_t>(std::llround((start - ts.t0) / ts.dt));
        count_ = static_cast<std::size_t>(std::llround(length / ts.dt));
        first_ = std::min(first_, ts.samples() - count_);
        w_.resize(count_);
        double sum = 0.0;
        for (std::size_t k = 0; k < count_; ++k) {
            w_[k] = 0.5 - 0.5 * std::cos(kTwoPi * (static_cast<double>(k) + 0.5) / static_cast<double>(count_));
            sum += w_[k];
        }
        for (double& v : w_) v /= sum;
    }

    cplx coefficient(const std::vector<double>& x, double f) const {
        cplx acc{};
        const cplx step = std::polar(1.0, -kTwoPi * f * ts_.dt);
        cplx ph = std::polar(1.0, -kTwoPi * f * ts_.time(first_));
        for (std::size_t k = 0; k < count_; ++k) {
            acc += w_[k] * x[first_ + k] * ph;
            ph *= step;
            if ((k & 1023) == 1023) ph /= std::abs(ph);
        }
        return f == 0.0 ? cplx(acc.real(), 0.0) : acc;
    }

    double length() const { return static_cast<double>(count_) * ts_.dt; }

private:
    const TimeSeries& ts_;
    std::size_t first_ = 0, count_ = 0;
    std::vector<double> w_;
};

struct FftOptions {
    double f_lo = 0.5;
    double f_hi = 25.0;
    int order = 3;
    // Minimum sideband amplitude, relative to the mean of u_dc.
    double detect_floor = 1e-4;
};

// f_s from the dominant u_dc sideband by log-parabolic interpolation on the
// 1/T grid, then every channel read at its SO lines and phase-aligned so that
// A(theta0<s>) = 0.
inline HarmonicEstimate fft_extract(const TimeSeries& ts, double window_start, double window_length = 40.0,
                                    const FftOptions& o = {}) {
    const HannWindow win(ts, window_start, window_length);
    const double T = win.length();
    const double df = 1.0 / T;
    const auto& udc = ts.channel("u_dc");
    const double mean = std::abs(win.coefficient(udc, 0.0));
    const int k_lo = static_cast<int>(std::ceil(o.f_lo / df)), k_hi = static_cast<int>(std::floor(o.f_hi / df));
    std::vector<double> mag;
    for (int k = k_lo; k <= k_hi; ++k) mag.push_back(std::abs(win.coefficient(udc, k * df)));
    if (mag.size() < 3) throw oracle_error("search band too narrow");
    const auto it = std::max_element(mag.begin() + 1, mag.end() - 1);
    const std::size_t i = static_cast<std::size_t>(it - mag.begin());
    if (*it < o.detect_floor * mean) throw oracle_error("no SO detected");
    const double a = std::log(mag[i - 1]), b = std::log(mag[i]), c = std::log(mag[i + 1]);
    const double den = a - 2.0 * b + c;
    const double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;

    HarmonicEstimate h;
    h.fs = (k_lo + static_cast<double>(i) + delta) * df;
    h.window_start = window_start;
    h.window_length = T;
    h.resolution = df;
    h.order = o.order;
    const BaseFreqs base{ts.final_params.f_1, h.fs};
    const double f1 = base.f1;
    const double phi = std::arg(win.coefficient(ts.channel("theta0"), h.fs));
    const int N = o.order;
    for (const auto& name : dc_channels()) {
        if (!ts.has(name)) continue;
        const auto& x = ts.channel(name);
        Spectrum s(Kind::DC, N, base);
        s.set(0, 0, win.coefficient(x, 0.0).real());
        for (int n = 1; n <= N; ++n) s.set(0, n, win.coefficient(x, n * h.fs) * std::polar(1.0, -n * phi));
        h.spectra.emplace(name, s);
    }
    for (const auto& name : ac_channels()) {
        if (!ts.has(name)) continue;
        const auto& x = ts.channel(name);
        Spectrum s(Kind::AC, N, base);
        for (int n = -N; n <= N; ++n) s.set(1, n, win.coefficient(x, f1 + n * h.fs) * std::polar(1.0, -n * phi));
        h.spectra.emplace(name, s);
    }
    return h;
}

struct ScanOptions {
    double amplitude = 0.01;
    // Settling time after the probe switches on, then the analysis window,
    // at least 20 periods of the smallest spacing to an SO line.
    double settle = 10.0;
    double min_window = 10.0;
    double max_window = 40.0;
    double guard = 0.25;
    double step = 20e-6;
    unsigned threads = 0;
};

// Probes whose spacing to f1 + n fs (|n| <= 20) falls below the guard.
inline double line_separation(double f, double f1, double fs) {
    if (fs <= 0.0) return std::abs(f - f1);
    const double n = std::round((f - f1) / fs);
    return std::abs(f - (f1 + n * fs));
}

// Single-tone series injection at the source, run next to an unperturbed
// twin from the same state so the SO lines cancel. Z = U_p / (-I_p) with both
// read in the stationary frame at the probe frequency.
inline cplx scan_point(const SystemParams& p, const OdeState& start, double fs, double f_probe, const ScanOptions& o) {
    const double sep = line_separation(f_probe, p.f_1, fs);
    if (sep < o.guard) throw oracle_error("probe at " + std::to_string(f_probe) + " Hz collides with an SO line");
    const double window = std::clamp(20.0 / sep, o.min_window, o.max_window);
    Scenario sc;
    sc.initial = p;
    sc.start = start;
    sc.step = o.step;
    sc.duration = o.settle + window;
    sc.probe = Probe{f_probe, o.amplitude};
    const std::size_t first = static_cast<std::size_t>(std::llround(o.settle / sc.step));
    const std::size_t count = static_cast<std::size_t>(std::llround(window / sc.step));

    auto run = [&](bool with_probe) {
        Scenario s = sc;
        if (!with_probe) s.probe.reset();
        std::vector<cplx> cur(count), src(count);
        OdeState x;
        SystemParams q;
        const double w1 = p.omega1();
        const auto div = detail::integrate(
            s,
            [&](std::size_t k, double t, const OdeState& st, const SystemParams&) {
                if (k < first || k >= first + count) return true;
                const cplx ph = std::polar(1.0, w1 * t);
                cur[k - first] = cplx(st[0], st[1]) * ph;
                src[k - first] = detail::probe_source(p, s.probe, t) * ph;
                return true;
            },
            x, q);
        if (div) throw oracle_error("probe run diverged at t = " + std::to_string(*div));
        return std::make_pair(cur, src);
    };
    const auto [ip, up] = run(true);
    const auto [i0, u0] = run(false);
    cplx di{}, du{};
    for (std::size_t k = 0; k < count; ++k) {
        const double t = (first + k) * sc.step;
        const double w = 0.5 - 0.5 * std::cos(kTwoPi * (k + 0.5) / static_cast<double>(count));
        const cplx ph = std::polar(w, -kTwoPi * f_probe * t);
        di += (ip[k] - i0[k]) * ph;
        du += (up[k] - u0[k]) * ph;
    }
    return du / (-di);
}

inline FrequencyResponse frequency_scan(const SystemParams& p, const OdeState& start, double fs,
                                        const std::vector<double>& freqs, const ScanOptions& o = {}) {
    FrequencyResponse fr;
    fr.quantity = "Z_scan";
    std::vector<std::optional<cplx>> out(freqs.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned nt = o.threads ? o.threads : hw;
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < nt; ++t)
        jobs.push_back(std::async(std::launch::async, [&]() {
            for (std::size_t i = next++; i < freqs.size(); i = next++) {
                try {
                    out[i] = scan_point(p, start, fs, freqs[i], o);
                } catch (const oracle_error&) {
                    out[i].reset();
                }
            }
        }));
    for (auto& j : jobs) j.get();
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (out[i])
            fr.push(freqs[i], *out[i]);
        else
            fr.skipped.push_back(freqs[i]);
    }
    return fr;
}

}  // namespace sohb
