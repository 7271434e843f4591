#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hb_solver.hpp"
#include "linearization.hpp"
#include "modes.hpp"
#include "params.hpp"

namespace sohb {

inline constexpr const char* kToolVersion = "0.1.0";

inline nlohmann::ordered_json params_json(const SystemParams& p) {
    return {{"L_g", p.L_g},         {"L_f", p.L_f},       {"C_dc", p.C_dc},     {"U_t", p.U_t},
            {"I_load", p.I_load},   {"u_dc_ref", p.u_dc_ref}, {"i_q_ref", p.i_q_ref}, {"f_1", p.f_1},
            {"kp_dc", p.kp_dc},     {"ki_dc", p.ki_dc},   {"kp_cc", p.kp_cc},   {"ki_cc", p.ki_cc},
            {"kp_pll", p.kp_pll},   {"ki_pll", p.ki_pll}, {"k_pwm", p.k_pwm},   {"i_up", p.lim.upper},
            {"i_low", p.lim.lower}};
}

inline nlohmann::ordered_json cplx_json(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

// Scalars only; spectra go to the CSV next to it. Timing lives in the run
// manifest so the report itself is reproducible byte for byte.
inline nlohmann::ordered_json solve_report_json(const SolveReport& r, const SystemParams& p, int order) {
    nlohmann::ordered_json j;
    j["format"] = "sohb-solve v1";
    j["order"] = order;
    j["converged"] = r.converged;
    j["so_found"] = r.so_found;
    j["iterations"] = r.iterations;
    j["residual_norm"] = std::isfinite(r.residual_norm) ? nlohmann::ordered_json(r.residual_norm) : nullptr;
    j["trigger"] = to_string(r.trigger);
    j["message"] = r.message;
    j["f_s0"] = r.fs0;
    if (r.solution) {
        const SteadyState& s = *r.solution;
        j["f_s"] = s.fs;
        j["u_dc_0"] = s.u_dc(0, 0).real();
        j["theta0_0"] = s.theta0(0, 0).real();
        j["u_ga_1"] = cplx_json(s.u_ga(1, 0));
        if (s.order >= 1) {
            j["u_dc_s"] = cplx_json(s.u_dc(0, 1));
            j["theta0_s"] = cplx_json(s.theta0(0, 1));
        }
        if (s.i_pp) j["i_pp_s"] = cplx_json((*s.i_pp)(0, std::min(1, s.order)));
    } else {
        j["f_s"] = nullptr;
    }
    j["equations"] = r.tallies;
    auto& tr = j["trace"] = nlohmann::ordered_json::array();
    for (const StageRecord& t : r.trace)
        tr.push_back({{"stage", t.note},
                      {"order", t.order},
                      {"attempts", t.attempts},
                      {"seed_re_udc", t.seed_re_udc},
                      {"seed_m_theta", t.seed_m_theta},
                      {"iterations", t.iterations},
                      {"residual_norm", std::isfinite(t.residual_norm) ? nlohmann::ordered_json(t.residual_norm) : nullptr},
                      {"success", t.success}});
    j["params"] = params_json(p);
    return j;
}

inline nlohmann::ordered_json modes_json(const std::vector<Mode>& modes) {
    nlohmann::ordered_json j;
    j["format"] = "sohb-modes v1";
    auto& arr = j["modes"] = nlohmann::ordered_json::array();
    for (const Mode& m : modes)
        arr.push_back({{"kind", to_string(m.kind)},
                       {"f_hz", m.f_hz},
                       {"alpha", m.alpha},
                       {"alpha_slope", m.alpha_slope},
                       {"confidence", m.confident ? "high" : "low"},
                       {"damping", to_string(m.damping)}});
    return j;
}

inline FrequencyResponse read_response_csv(std::istream& is) {
    FrequencyResponse fr;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# sohb-response v1", 0) != 0)
        throw std::runtime_error("not a sohb-response v1 file");
    fr.quantity = line.size() > 19 ? line.substr(19) : "response";
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double f, re, im;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &f, &re, &im) != 3)
            throw std::runtime_error("malformed response row: " + line);
        if (fr.size() && !(f > fr.f.back())) throw std::runtime_error("response frequencies must increase");
        fr.push(f, {re, im});
    }
    return fr;
}

// Written when a command starts and rewritten with timings when it ends.
class RunManifest {
public:
    RunManifest(std::string command, std::string config, std::filesystem::path out_dir)
        : out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        j_["format"] = "sohb-manifest v1";
        j_["command"] = std::move(command);
        j_["config"] = std::move(config);
        j_["output_dir"] = out_dir_.string();
        j_["tool_version"] = kToolVersion;
        j_["status"] = "running";
    }

    void set_params(const SystemParams& p) { j_["parameters"] = params_json(p); }
    void set(const std::string& key, nlohmann::ordered_json v) { j_[key] = std::move(v); }
    void lap(const std::string& name) {
        j_["timings_s"][name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void write() const {
        if (!out_dir_.empty()) std::filesystem::create_directories(out_dir_);
        std::ofstream(out_dir_ / "manifest.json") << j_.dump(2) << "\n";
    }
    void finalize(int exit_code) {
        j_["status"] = "finished";
        j_["exit_code"] = exit_code;
        lap("total");
        write();
    }

private:
    std::filesystem::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    nlohmann::ordered_json j_;
};

}  // namespace sohb
