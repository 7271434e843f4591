#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "params.hpp"
#include "spectrum.hpp"
#include "unknowns.hpp"
#include "vsc_model.hpp"

namespace sohb {

struct FrequencyResponse {
    std::string quantity;
    std::vector<double> f;
    std::vector<cplx> value;
    std::vector<double> skipped;

    std::size_t size() const { return f.size(); }
    void push(double fr, cplx v) {
        f.push_back(fr);
        value.push_back(v);
    }
};

// Steady-state spectra the small-signal cascade is linearized about.
struct OperatingPoint {
    int order = 0;
    double f1 = 50.0;
    double fs = 0.0;
    Spectrum m_a, u_ga, u_dc, i_a, cos_theta, sin_theta, e_d, e_q;
};

inline OperatingPoint operating_point(const SteadyState& s, const SystemParams& p) {
    if (s.i_pp) throw std::invalid_argument("linearization of limiter-active states is not supported");
    const IntermediateSet I = evaluate_intermediates(s, p);
    return {s.order, p.f_1, s.fs, s.m_a, s.u_ga, s.u_dc, I.i_a, I.cos_theta, I.sin_theta, I.e_d, I.e_q};
}

// Perturbation on the grid (s - j w1) + j(k w1 + n ws), k in {-1,0,1}, |n| <= Np.
// A unit source perturbation at (k=1, n=0) drives the linearized network; the
// return value is the a-phase current response at the same slot.
class LoopLinearization {
public:
    LoopLinearization(OperatingPoint op, const SystemParams& p, int Np) : op_(std::move(op)), p_(p), Np_(Np) {
        if (op_.order == 0) Np_ = 0;
        G_ = 2 * Np_ + 1;
        static const char* ac[] = {"ia", "uga", "ea", "m", "cos", "sin"};
        static const char* dc[] = {"udc", "idc", "th", "id", "iq", "ugq", "ipp", "ed", "eq"};
        int at = 0;
        for (const char* a : ac)
            for (int k : {-1, 1}) off_[{a, k}] = (at++) * G_;
        for (const char* d : dc) off_[{d, 0}] = (at++) * G_;
        size_ = at * G_;
    }

    int perturbation_order() const { return Np_; }
    int dimension() const { return size_; }

    Eigen::MatrixXcd system_matrix(cplx s) const {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(size_, size_);
        const double w1 = kTwoPi * op_.f1, ws = kTwoPi * op_.fs;
        auto sk = [&](int k) {
            Eigen::VectorXcd v(G_);
            for (int i = 0; i < G_; ++i) v(i) = s + cplx(0.0, (k - 1) * w1 + (i - Np_) * ws);
            return v;
        };
        const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(G_, G_);
        int row = 0;
        auto put = [&](const std::string& sig, int k, const Eigen::MatrixXcd& M) {
            A.block(row, off_.at({sig, k}), G_, G_) += M;
        };
        auto diag = [](const Eigen::VectorXcd& v) { return Eigen::MatrixXcd(v.asDiagonal()); };
        const double kp = p_.k_pwm;

        for (int k : {-1, 1}) {
            const Eigen::VectorXcd s_k = sk(k);
            put("ia", k, diag(s_k * p_.L_g));
            put("uga", k, -I);
            row += G_;
            put("ea", k, I);
            put("uga", k, -I);
            put("ia", k, -diag(s_k * p_.L_f));
            row += G_;
            put("ea", k, I);
            put("udc", 0, -0.5 * T(op_.m_a, k, 0));
            put("m", k, -0.5 * T(op_.u_dc, k, k));
            row += G_;
            put("cos", k, I);
            put("th", 0, T(op_.sin_theta, k, 0));
            row += G_;
            put("sin", k, I);
            put("th", 0, -T(op_.cos_theta, k, 0));
            row += G_;
            put("m", k, I);
            put("ed", 0, -kp * T(op_.cos_theta, k, 0));
            put("eq", 0, -kp * T(op_.sin_theta, k, 0));
            put("cos", k, -kp * T(op_.e_d, k, k));
            put("sin", k, -kp * T(op_.e_q, k, k));
            row += G_;
        }
        const Eigen::VectorXcd s0 = sk(0);
        put("idc", 0, I);
        for (int k : {-1, 1}) {
            put("ia", k, -1.5 * T(op_.m_a, 0, k));
            put("m", k, -1.5 * T(op_.i_a, 0, k));
        }
        row += G_;
        put("udc", 0, diag(s0 * p_.C_dc));
        put("idc", 0, I);
        row += G_;
        put("id", 0, I);
        for (int k : {-1, 1}) {
            put("ia", k, -2.0 * T(op_.cos_theta, 0, k));
            put("cos", k, -2.0 * T(op_.i_a, 0, k));
        }
        row += G_;
        put("iq", 0, I);
        for (int k : {-1, 1}) {
            put("ia", k, -2.0 * T(op_.sin_theta, 0, k));
            put("sin", k, -2.0 * T(op_.i_a, 0, k));
        }
        row += G_;
        put("ugq", 0, I);
        for (int k : {-1, 1}) {
            put("uga", k, -2.0 * T(op_.sin_theta, 0, k));
            put("sin", k, -2.0 * T(op_.u_ga, 0, k));
        }
        row += G_;
        // Integrator rows are multiplied through by s so DC slots stay finite.
        const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(G_);
        put("th", 0, diag(s0.cwiseProduct(s0)));
        put("ugq", 0, diag(p_.kp_pll * s0 + p_.ki_pll * ones));
        row += G_;
        put("ipp", 0, diag(s0));
        put("udc", 0, -diag(p_.kp_dc * s0 + p_.ki_dc * ones));
        row += G_;
        const Eigen::MatrixXcd pic = diag(p_.kp_cc * s0 + p_.ki_cc * ones);
        put("ed", 0, diag(s0));
        put("ipp", 0, -pic);
        put("id", 0, pic);
        row += G_;
        put("eq", 0, diag(s0));
        put("iq", 0, pic);
        row += G_;
        return A;
    }

    // Current response per unit source perturbation at complex frequency s
    // (s = j 2 pi f_p for a real probe frequency f_p).
    cplx current_response(cplx s) const {
        const Eigen::MatrixXcd A = system_matrix(s);
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(size_);
        b(kSourceRowBlock * G_ + Np_) = -1.0;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        const Eigen::VectorXcd x = lu.solve(b);
        const cplx ia = x(off_.at({"ia", 1}) + Np_);
        if (!std::isfinite(ia.real()) || !std::isfinite(ia.imag())) throw std::runtime_error("singular loop system");
        return ia;
    }

    cplx impedance(cplx s) const { return -1.0 / current_response(s); }
    cplx admittance(cplx s) const { return -current_response(s); }

private:
    // Rows are emitted k = -1 first (six blocks), so the k = 1 source row follows.
    static constexpr int kSourceRowBlock = 6;

    Eigen::MatrixXcd T(const Spectrum& g, int ko, int ki) const { return toeplitz_block(g, ko, ki, Np_); }

    OperatingPoint op_;
    SystemParams p_;
    int Np_;
    int G_ = 1;
    int size_ = 0;
    std::map<std::pair<std::string, int>, int> off_;
};

inline constexpr int kDefaultPerturbationOrder = 6;

inline FrequencyResponse build_loop_response(const SteadyState& s, const SystemParams& p, const std::vector<double>& f_grid,
                                             int Np = kDefaultPerturbationOrder) {
    const LoopLinearization lin(operating_point(s, p), p, Np);
    FrequencyResponse fr;
    fr.quantity = "Z_loop";
    for (double f : f_grid) {
        try {
            const cplx z = lin.impedance(cplx(0.0, kTwoPi * f));
            if (std::isfinite(z.real()) && std::isfinite(z.imag()))
                fr.push(f, z);
            else
                fr.skipped.push_back(f);
        } catch (const std::runtime_error&) {
            fr.skipped.push_back(f);
        }
    }
    return fr;
}

inline std::vector<double> linspace_step(double lo, double hi, double step) {
    std::vector<double> v;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) v.push_back(lo + i * step);
    return v;
}

// Shifts grid points that land within `guard` Hz of an SO line f1 + n fs.
inline std::vector<double> avoid_lines(std::vector<double> grid, double f1, double fs, double guard) {
    if (fs <= 0.0) return grid;
    for (double& f : grid) {
        const double n = std::round((f - f1) / fs);
        const double line = f1 + n * fs;
        if (std::abs(f - line) < guard) f = line + (f >= line ? guard : -guard);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline void write_response_csv(std::ostream& os, const FrequencyResponse& fr) {
    os << "# sohb-response v1 " << fr.quantity << "\n";
    os << "f_hz,re,im,mag_db,phase_deg\n";
    char buf[200];
    for (std::size_t i = 0; i < fr.size(); ++i) {
        const cplx v = fr.value[i];
        std::snprintf(buf, sizeof buf, "%.10g,%.12g,%.12g,%.8g,%.8g\n", fr.f[i], v.real(), v.imag(),
                      20.0 * std::log10(std::abs(v)), std::arg(v) * 180.0 / kPi);
        os << buf;
    }
}

}  // namespace sohb
