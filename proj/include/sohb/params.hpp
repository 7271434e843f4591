#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "limiter.hpp"
#include "spectrum.hpp"

namespace sohb {

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Physical and control constants. SI units; U_t is the line-to-line RMS
// source voltage, k_pwm maps volts of e_ref to modulation index.
struct SystemParams {
    double L_g = 1e-3;
    double L_f = 0.55e-3;
    double C_dc = 5e-3;
    double U_t = 380.0;
    double I_load = 66.66;
    double u_dc_ref = 750.0;
    double i_q_ref = 0.0;
    double f_1 = 50.0;
    double kp_dc = 0.1, ki_dc = 100.0;
    double kp_cc = 0.1, ki_cc = 10.0;
    double kp_pll = 3.0, ki_pll = 100.0;
    double k_pwm = 2.0 / 750.0;
    LimiterSpec lim{};

    double omega1() const { return kTwoPi * f_1; }
    // Phase peak voltage of the source.
    double u_t_peak() const { return U_t * std::sqrt(2.0) / std::sqrt(3.0); }
    // Two-sided coefficient of the source at f1.
    double u_t_coeff() const { return 0.5 * u_t_peak(); }

    void validate() const {
        if (!(L_g > 0 && L_f > 0 && C_dc > 0)) throw config_error("inductances and capacitance must be positive");
        if (!(U_t > 0 && u_dc_ref > 0 && f_1 > 0)) throw config_error("U_t, u_dc_ref and f_1 must be positive");
        if (!(k_pwm > 0)) throw config_error("k_pwm must be positive");
        if (!(lim.lower < lim.upper)) throw config_error("limiter lower bound must be below upper bound");
    }
};

inline SystemParams preset(const std::string& name) {
    SystemParams p;
    if (name == "test1") return p;
    if (name == "test2") {
        p.lim = {200.0, -500.0};
        return p;
    }
    if (name == "test3") {
        p.L_g = 1.5e-3;
        p.lim = {200.0, -500.0};
        return p;
    }
    if (name == "test4") {
        p.L_g = 1.5e-3;
        p.lim = {200.0, 0.0};
        return p;
    }
    if (name == "stable") {
        p.L_g = 0.1e-3;
        return p;
    }
    throw config_error("unknown preset '" + name + "'");
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"test1", "test2", "test3", "test4", "stable"};
    return names;
}

namespace detail {
inline double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse '" + text + "' as a number");
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw config_error("key '" + key + "': trailing characters in '" + text + "'");
    return v;
}
}  // namespace detail

inline void set_param(SystemParams& p, const std::string& key, double v) {
    static const std::map<std::string, double SystemParams::*> fields{
        {"L_g", &SystemParams::L_g},       {"L_f", &SystemParams::L_f},       {"C_dc", &SystemParams::C_dc},
        {"U_t", &SystemParams::U_t},       {"I_load", &SystemParams::I_load}, {"u_dc_ref", &SystemParams::u_dc_ref},
        {"i_q_ref", &SystemParams::i_q_ref}, {"f_1", &SystemParams::f_1},     {"kp_dc", &SystemParams::kp_dc},
        {"ki_dc", &SystemParams::ki_dc},   {"kp_cc", &SystemParams::kp_cc},   {"ki_cc", &SystemParams::ki_cc},
        {"kp_pll", &SystemParams::kp_pll}, {"ki_pll", &SystemParams::ki_pll}, {"k_pwm", &SystemParams::k_pwm},
    };
    if (key == "i_up") {
        p.lim.upper = v;
        return;
    }
    if (key == "i_low") {
        p.lim.lower = v;
        return;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw config_error("unknown parameter '" + key + "'");
    p.*(it->second) = v;
}

using ConfigTree = boost::property_tree::ptree;

inline ConfigTree read_config_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    ConfigTree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error(path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return tree;
}

// [system] section: optional `preset`, then overrides keyed by parameter name.
// k_pwm follows u_dc_ref unless given explicitly.
inline SystemParams params_from_tree(const ConfigTree& tree) {
    SystemParams p;
    const auto sys = tree.get_child_optional("system");
    if (!sys) throw config_error("config lacks a [system] section");
    if (auto pre = sys->get_optional<std::string>("preset")) p = preset(*pre);
    bool explicit_kpwm = false;
    for (const auto& [key, node] : *sys) {
        if (key == "preset") continue;
        set_param(p, key, detail::parse_number(key, node.data()));
        if (key == "k_pwm") explicit_kpwm = true;
    }
    if (!explicit_kpwm) p.k_pwm = 2.0 / p.u_dc_ref;
    p.validate();
    return p;
}

inline SystemParams load_params(const std::string& path) { return params_from_tree(read_config_tree(path)); }

inline std::string describe(const SystemParams& p) {
    std::ostringstream os;
    os.precision(10);
    os << "L_g=" << p.L_g << " L_f=" << p.L_f << " C_dc=" << p.C_dc << " U_t=" << p.U_t << " I_load=" << p.I_load
       << " u_dc_ref=" << p.u_dc_ref << " i_q_ref=" << p.i_q_ref << " f_1=" << p.f_1 << " kp_dc=" << p.kp_dc
       << " ki_dc=" << p.ki_dc << " kp_cc=" << p.kp_cc << " ki_cc=" << p.ki_cc << " kp_pll=" << p.kp_pll
       << " ki_pll=" << p.ki_pll << " k_pwm=" << p.k_pwm << " i_up=" << p.lim.upper << " i_low=" << p.lim.lower;
    return os.str();
}

}  // namespace sohb
