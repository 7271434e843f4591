#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sohb/sohb.hpp"

namespace fs = std::filesystem;
using namespace sohb;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kNoSo = 2;

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return is;
}

// "a:b" or "a:b:step".
std::vector<double> parse_range(const std::string& text, int parts) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ':')) v.push_back(detail::parse_number("range", cell));
    if (static_cast<int>(v.size()) != parts) throw config_error("range '" + text + "' needs " + std::to_string(parts) + " fields");
    return v;
}

std::string preset_of(const std::string& config) {
    const ConfigTree t = read_config_tree(config);
    return t.get<std::string>("system.preset", "");
}

void print_report(const SolveReport& r) {
    for (const auto& t : r.trace)
        std::fprintf(stderr, "  %-34s N=%d attempts=%d iter=%d |F|=%.3g %s\n", t.note.c_str(), t.order, t.attempts,
                     t.iterations, t.residual_norm, t.success ? "ok" : "failed");
    if (r.solution) std::printf("f_s = %.6f Hz, trigger %s\n", r.solution->fs, to_string(r.trigger));
    if (!r.message.empty()) std::printf("%s\n", r.message.c_str());
}

struct SolveArgs {
    std::string config;
    int order = 3;
    std::string out = "out/solve";
    std::string seed;
};

int cmd_solve(const SolveArgs& a) {
    RunManifest man("solve", a.config, a.out);
    const SystemParams p = load_params(a.config);
    man.set_params(p);
    man.set("order", a.order);
    man.set("preset", preset_of(a.config));
    man.write();
    SolveConfig cfg;
    cfg.order = a.order;
    if (!a.seed.empty()) {
        auto is = open_in(a.seed);
        const SignalSet s = read_signal_set_csv(is);
        cfg.seed = state_from_signals(s, false);
    }
    const SolveReport r = solve_so(p, cfg);
    man.lap("solve");
    print_report(r);
    open_out(fs::path(a.out) / "report.json") << solve_report_json(r, p, a.order).dump(2) << "\n";
    if (r.solution) {
        auto os = open_out(fs::path(a.out) / "spectra.csv");
        write_signal_set_csv(os, solver_signals(*r.solution, p));
    }
    const bool no_so = r.message.rfind("SO not found", 0) == 0 || r.message.rfind("no negative-damping", 0) == 0;
    const int code = r.converged ? kOk : (no_so ? kNoSo : kError);
    man.finalize(code);
    return code;
}

struct SimulateArgs {
    std::string config;
    double duration = 70.0;
    double window = 40.0;
    int order = 3;
    std::string out = "out/simulate";
    bool csv = false;
};

int cmd_simulate(const SimulateArgs& a) {
    RunManifest man("simulate", a.config, a.out);
    Scenario sc = load_scenario(a.config);
    sc.duration = a.duration;
    sc.validate();
    man.set_params(sc.initial);
    man.set("duration", sc.duration);
    man.set("step", sc.step);
    man.write();
    const TimeSeries ts = simulate(sc);
    man.lap("simulate");
    {
        auto os = open_out(fs::path(a.out) / "timeseries.bin", true);
        write_timeseries(os, ts);
    }
    if (a.csv) {
        auto os = open_out(fs::path(a.out) / "timeseries.csv");
        write_timeseries_csv(os, ts);
    }
    if (ts.diverged_at) {
        std::fprintf(stderr, "simulation diverged at t = %.4f s\n", *ts.diverged_at);
        man.finalize(kError);
        return kError;
    }
    const double len = std::min(a.window, sc.duration);
    FftOptions fo;
    fo.order = a.order;
    try {
        const HarmonicEstimate h = fft_extract(ts, sc.duration - len, len, fo);
        auto os = open_out(fs::path(a.out) / "spectra.csv");
        write_signal_set_csv(os, oracle_signals(h));
        std::printf("f_s = %.6f Hz (bin %.4f Hz)\n", h.fs, h.resolution);
    } catch (const oracle_error& e) {
        std::printf("%s\n", e.what());
        man.finalize(kNoSo);
        return kNoSo;
    }
    man.lap("fft");
    man.finalize(kOk);
    return kOk;
}

struct FftArgs {
    std::string dump;
    std::string window = "30:70";
    int order = 3;
    std::string out;
};

int cmd_fft(const FftArgs& a) {
    auto is = open_in(a.dump, true);
    const TimeSeries ts = read_timeseries(is);
    const auto w = parse_range(a.window, 2);
    FftOptions fo;
    fo.order = a.order;
    HarmonicEstimate h;
    try {
        h = fft_extract(ts, w[0], w[1] - w[0], fo);
    } catch (const oracle_error& e) {
        std::printf("%s\n", e.what());
        return kNoSo;
    }
    std::printf("f_s = %.6f Hz (bin %.4f Hz)\n", h.fs, h.resolution);
    if (a.out.empty()) {
        write_signal_set_csv(std::cout, oracle_signals(h));
    } else {
        auto os = open_out(a.out);
        write_signal_set_csv(os, oracle_signals(h));
    }
    return kOk;
}

struct ScanArgs {
    std::string config;
    std::string freqs = "-50:150:5";
    double amp = 0.01;
    double guard = 0.25;
    double max_window = 40.0;
    unsigned threads = 0;
    std::string out = "out/scan/response.csv";
};

// Runs the configured scenario to its end, then probes from the final state.
int cmd_scan(const ScanArgs& a) {
    RunManifest man("scan", a.config, fs::path(a.out).parent_path());
    Scenario sc = load_scenario(a.config);
    man.set_params(sc.initial);
    man.set("freqs", a.freqs);
    man.set("amplitude", a.amp);
    man.write();
    const TimeSeries ts = simulate(sc);
    if (ts.diverged_at) throw std::runtime_error("settling run diverged");
    double fs = 0.0;
    try {
        fs = fft_extract(ts, std::max(0.0, sc.duration - 40.0), std::min(40.0, sc.duration)).fs;
        std::printf("settled on an SO at f_s = %.6f Hz\n", fs);
    } catch (const oracle_error&) {
        std::printf("settled on the equilibrium\n");
    }
    man.lap("settle");
    const auto r = parse_range(a.freqs, 3);
    ScanOptions o;
    o.amplitude = a.amp;
    o.guard = a.guard;
    o.max_window = a.max_window;
    o.threads = a.threads;
    const FrequencyResponse fr = frequency_scan(ts.final_params, ts.final_state, fs, linspace_step(r[0], r[1], r[2]), o);
    man.lap("scan");
    for (double f : fr.skipped) std::fprintf(stderr, "skipped %.4f Hz\n", f);
    auto os = open_out(a.out);
    write_response_csv(os, fr);
    man.set("skipped", fr.skipped);
    man.finalize(kOk);
    return kOk;
}

struct ModesArgs {
    std::string response;
    std::string out;
};

int cmd_modes(const ModesArgs& a) {
    auto is = open_in(a.response);
    const FrequencyResponse fr = read_response_csv(is);
    const auto modes = identify_modes(log_derivative(fr));
    const std::string text = modes_json(modes).dump(2);
    if (a.out.empty())
        std::cout << text << "\n";
    else
        open_out(a.out) << text << "\n";
    return kOk;
}

struct ZloopArgs {
    std::string config;
    int order = 3;
    int np = kDefaultPerturbationOrder;
    std::string grid = "-50:150:0.25";
    bool equilibrium = false;
    std::string out = "out/zloop.csv";
};

int cmd_zloop(const ZloopArgs& a) {
    const SystemParams p = load_params(a.config);
    SolveConfig cfg;
    cfg.order = a.order;
    SteadyState op;
    if (a.equilibrium) {
        op = equilibrium_solve(p).state;
    } else {
        const SolveReport r = solve_so(p, cfg);
        if (!r.solution) {
            print_report(r);
            return kNoSo;
        }
        if (r.trigger != TriggerMode::None) throw std::runtime_error("loop response of limiter-active states is not supported");
        op = *r.solution;
    }
    const auto g = parse_range(a.grid, 3);
    const FrequencyResponse fr = build_loop_response(op, p, linspace_step(g[0], g[1], g[2]), a.equilibrium ? 0 : a.np);
    auto os = open_out(a.out);
    write_response_csv(os, fr);
    return kOk;
}

struct CompareArgs {
    std::string solve_dir;
    std::string oracle_dir;
    double tol = 0.005;
    double dominant = 0.05;
    double golden_tol = 0.02;
    std::string golden;
    bool gauge_fit = false;
};

SignalSet read_set(const fs::path& dir) {
    auto is = open_in(dir / "spectra.csv");
    return read_signal_set_csv(is);
}

bool print_golden(const char* who, const SignalSet& s, const golden::GoldenTable& t, int column, const CompareArgs& a) {
    SignalSet view = s;
    if (a.gauge_fit) {
        const double phi = fit_gauge(s, t, column);
        view = rotated(s, phi);
        std::printf("%s: reference angle fitted to %s, phi = %.4f rad\n", who, t.name.c_str(), phi);
    }
    bool ok = true;
    std::printf("%s vs %s column %d (tol %.1f%%)\n", who, t.name.c_str(), column, 100.0 * a.golden_tol);
    for (const auto& r : diff_golden(view, t, column, a.golden_tol)) {
        std::printf("  %-22s %12.4f %12.4f  %s\n", r.label.c_str(), r.ours, r.ref, r.pass ? "pass" : "FAIL");
        ok = ok && r.pass;
    }
    return ok;
}

int cmd_compare(const CompareArgs& a) {
    const SignalSet s = read_set(a.solve_dir);
    const SignalSet o = read_set(a.oracle_dir);
    if (std::abs(s.f1 - o.f1) > 1e-9) throw std::runtime_error("mismatched grids: f1 differs");
    for (const auto& name : table_signals())
        if (!s.has(name) || !o.has(name)) throw std::runtime_error("missing channel " + name);
    bool ok = true;
    std::printf("f_s solver %.6f oracle %.6f diff %.4f Hz\n", s.fs, o.fs, s.fs - o.fs);
    std::printf("%-8s %3s %3s %24s %24s %9s\n", "signal", "k", "n", "solver", "oracle", "rel");
    for (const auto& r : diff_sets(s, o, table_signals(), a.dominant, a.tol)) {
        if (!r.dominant) continue;
        std::printf("%-8s %3d %3d %11.4f %+11.4fj %11.4f %+11.4fj %8.3f%% %s\n", r.signal.c_str(), r.k, r.n, r.a.real(),
                    r.a.imag(), r.b.real(), r.b.imag(), 100.0 * r.rel, r.pass ? "pass" : "FAIL");
        ok = ok && r.pass;
    }
    std::string preset = a.golden;
    if (preset.empty() && fs::exists(fs::path(a.solve_dir) / "manifest.json")) {
        auto is = open_in(fs::path(a.solve_dir) / "manifest.json");
        preset = nlohmann::json::parse(is).value("preset", "");
    }
    if (const auto* t = golden::table_for(preset)) {
        const int col = t->preset == "test1" ? golden::column_for_order(s.order) : (s.order == 3 ? golden::Iter3 : -1);
        if (col >= 0) ok = print_golden("solver", s, *t, col, a) && ok;
        ok = print_golden("oracle", o, *t, golden::Measured, a) && ok;
    }
    std::printf("%s\n", ok ? "all rows pass" : "some rows fail");
    return ok ? kOk : kError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sustained-oscillation harmonic balance toolkit"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Harmonic balance solve of the periodic steady state");
    solve->add_option("config", sa.config, "Config file")->required()->check(CLI::ExistingFile);
    solve->add_option("--order", sa.order, "Harmonic order N")->check(CLI::Range(0, 12));
    solve->add_option("--out", sa.out, "Output directory");
    solve->add_option("--seed", sa.seed, "Spectrum CSV used as the initial guess")->check(CLI::ExistingFile);

    SimulateArgs ma;
    auto* sim = app.add_subcommand("simulate", "Time-domain reference simulation");
    sim->add_option("config", ma.config, "Config file")->required()->check(CLI::ExistingFile);
    sim->add_option("--duration", ma.duration, "Simulated time in s");
    sim->add_option("--window", ma.window, "Trailing FFT window in s");
    sim->add_option("--order", ma.order, "Harmonic order of the extracted spectra");
    sim->add_option("--out", ma.out, "Output directory");
    sim->add_flag("--csv", ma.csv, "Also write the samples as CSV");

    FftArgs fa;
    auto* fft = app.add_subcommand("fft", "Harmonic extraction from a simulation dump");
    fft->add_option("dump", fa.dump, "timeseries.bin")->required()->check(CLI::ExistingFile);
    fft->add_option("--window", fa.window, "Window a:b in s");
    fft->add_option("--order", fa.order, "Harmonic order");
    fft->add_option("--out", fa.out, "Spectrum CSV (stdout when omitted)");

    ScanArgs ca;
    auto* scan = app.add_subcommand("scan", "Small-signal frequency scan of the simulated system");
    scan->add_option("config", ca.config, "Config file")->required()->check(CLI::ExistingFile);
    scan->add_option("--freqs", ca.freqs, "Probe grid lo:hi:step in Hz");
    scan->add_option("--amp", ca.amp, "Probe amplitude relative to the source peak");
    scan->add_option("--guard", ca.guard, "Skip probes this close to an SO line, Hz");
    scan->add_option("--max-window", ca.max_window, "Longest analysis window in s");
    scan->add_option("--threads", ca.threads, "Worker threads (0: all cores)");
    scan->add_option("--out", ca.out, "Response CSV");

    ModesArgs da;
    auto* modes = app.add_subcommand("modes", "Zeros and poles of a frequency response");
    modes->add_option("response", da.response, "Response CSV")->required()->check(CLI::ExistingFile);
    modes->add_option("--out", da.out, "Mode JSON (stdout when omitted)");

    ZloopArgs za;
    auto* zloop = app.add_subcommand("zloop", "Analytic loop impedance about the solved steady state");
    zloop->add_option("config", za.config, "Config file")->required()->check(CLI::ExistingFile);
    zloop->add_option("--order", za.order, "Harmonic order N of the steady state");
    zloop->add_option("--np", za.np, "Perturbation order");
    zloop->add_option("--grid", za.grid, "Frequency grid lo:hi:step in Hz");
    zloop->add_flag("--equilibrium", za.equilibrium, "Linearize about the equilibrium instead");
    zloop->add_option("--out", za.out, "Response CSV");

    CompareArgs xa;
    auto* cmp = app.add_subcommand("compare", "Solver vs oracle vs golden coefficient diff");
    cmp->add_option("solve_dir", xa.solve_dir, "Output of solve")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("oracle_dir", xa.oracle_dir, "Output of simulate")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("--tol", xa.tol, "Relative tolerance on dominant coefficients");
    cmp->add_option("--dominant", xa.dominant, "Dominance threshold relative to the signal maximum");
    cmp->add_option("--golden-tol", xa.golden_tol, "Relative tolerance against golden values");
    cmp->add_option("--golden", xa.golden, "Golden table preset (default: from the solve manifest)");
    cmp->add_flag("--gauge-fit", xa.gauge_fit, "Fit the reference angle to the golden table first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kError;
    }
    try {
        if (*solve) return cmd_solve(sa);
        if (*sim) return cmd_simulate(ma);
        if (*fft) return cmd_fft(fa);
        if (*scan) return cmd_scan(ca);
        if (*modes) return cmd_modes(da);
        if (*zloop) return cmd_zloop(za);
        if (*cmp) return cmd_compare(xa);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kError;
    }
    return kError;
}
