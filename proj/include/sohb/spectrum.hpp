#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sohb {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// DC-type signals live at n*fs, AC-type at +-f1 + n*fs.
enum class Kind { DC, AC };

inline const char* to_string(Kind k) { return k == Kind::DC ? "DC" : "AC"; }

inline double wrap_angle(double a) {
    a = std::remainder(a, kTwoPi);
    if (a <= -kPi) a += kTwoPi;
    return a;
}

struct PolarCoeff {
    double M = 0.0;
    double A = 0.0;

    static PolarCoeff from(cplx z) {
        PolarCoeff p{std::abs(z), std::arg(z)};
        if (p.A <= -kPi) p.A = kPi;
        return p;
    }
    cplx rect() const { return std::polar(M, A); }
};

struct BaseFreqs {
    double f1 = 50.0;
    double fs = 0.0;
};

struct SpectrumEntry {
    int k;
    int n;
    cplx value;
};

class grid_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Two-sided Fourier coefficients over the padded grid k*f1 + n*fs with
// k in {-1,0,1} and |n| <= 2N. The outer N slots of each block are guard
// bands; products may fill them, anything past them is dropped and counted.
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(Kind kind, int order, BaseFreqs base)
        : kind_(kind), order_(order), base_(base),
          data_(3 * static_cast<std::size_t>(4 * order + 1)) {
        if (order < 0) throw std::invalid_argument("spectrum order must be nonnegative");
    }

    Kind kind() const { return kind_; }
    int order() const { return order_; }
    int span() const { return 2 * order_; }
    const BaseFreqs& base() const { return base_; }
    double f1() const { return base_.f1; }
    double fs() const { return base_.fs; }

    bool allows(int k) const { return kind_ == Kind::DC ? k == 0 : (k == 1 || k == -1); }
    double freq(int k, int n) const { return k * base_.f1 + n * base_.fs; }

    cplx operator()(int k, int n) const {
        if (k < -1 || k > 1 || n < -span() || n > span()) return {};
        return data_[idx(k, n)];
    }
    PolarCoeff polar(int k, int n) const { return PolarCoeff::from((*this)(k, n)); }

    // Writes (k, n) and its mirror (-k, -n).
    void set(int k, int n, cplx v) {
        check_slot(k, n);
        if (k == 0 && n == 0) v = {v.real(), 0.0};
        data_[idx(k, n)] = v;
        data_[idx(-k, -n)] = std::conj(v);
    }

    // Raw slot write, no mirroring. Used by kernels that fill both halves.
    void put(int k, int n, cplx v) {
        check_slot(k, n);
        data_[idx(k, n)] = v;
    }

    double spill() const { return spill_; }
    void set_spill(double e) { spill_ = e; }

    bool guards_clear() const {
        for (int k = -1; k <= 1; ++k)
            for (int n = -span(); n <= span(); ++n)
                if (std::abs(n) > order_ && data_[idx(k, n)] != cplx{}) return false;
        return true;
    }

    Spectrum truncated() const {
        Spectrum out = *this;
        for (int k = -1; k <= 1; ++k)
            for (int n = -span(); n <= span(); ++n)
                if (std::abs(n) > order_) out.data_[idx(k, n)] = {};
        return out;
    }

    // Same coefficients on a grid with a different fs or order.
    Spectrum regrid(int order, double fs) const {
        Spectrum out(kind_, order, {base_.f1, fs});
        int lim = std::min(span(), out.span());
        for (int k = -1; k <= 1; ++k)
            for (int n = -lim; n <= lim; ++n) out.data_[out.idx(k, n)] = data_[idx(k, n)];
        return out;
    }

    double energy() const {
        double e = 0.0;
        for (const auto& c : data_) e += std::norm(c);
        return e;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& c : data_) m = std::max(m, std::abs(c));
        return m;
    }

    bool conjugate_symmetric(double tol = 1e-12) const {
        for (int k = -1; k <= 1; ++k)
            for (int n = -span(); n <= span(); ++n)
                if (std::abs(data_[idx(k, n)] - std::conj(data_[idx(-k, -n)])) > tol) return false;
        return true;
    }

    bool same_grid(const Spectrum& o) const {
        return order_ == o.order_ && base_.f1 == o.base_.f1 && base_.fs == o.base_.fs;
    }

    // Peak-valued reconstruction at time t: sum_f g<f> e^{j2 pi f t}.
    double eval(double t) const {
        cplx acc{};
        for (int k = -1; k <= 1; ++k)
            for (int n = -span(); n <= span(); ++n) {
                cplx c = data_[idx(k, n)];
                if (c != cplx{}) acc += c * std::exp(cplx(0.0, kTwoPi * freq(k, n) * t));
            }
        return acc.real();
    }

    // Phase-p member of a balanced three-phase AC set (p = 0, 1, 2 for a, b, c).
    double eval_phase(double t, int p) const {
        cplx acc{};
        const cplx rot = std::polar(1.0, -kTwoPi * p / 3.0);
        for (int k = -1; k <= 1; ++k)
            for (int n = -span(); n <= span(); ++n) {
                cplx c = data_[idx(k, n)];
                if (c == cplx{}) continue;
                cplx r = k == 1 ? rot : (k == -1 ? std::conj(rot) : cplx{1.0});
                acc += c * r * std::exp(cplx(0.0, kTwoPi * freq(k, n) * t));
            }
        return acc.real();
    }

    Spectrum& operator+=(const Spectrum& o) { return combine(o, 1.0); }
    Spectrum& operator-=(const Spectrum& o) { return combine(o, -1.0); }
    Spectrum& operator*=(double s) {
        for (auto& c : data_) c *= s;
        return *this;
    }
    friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
    friend Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }
    friend Spectrum operator*(Spectrum a, double s) { return a *= s; }
    friend Spectrum operator*(double s, Spectrum a) { return a *= s; }
    Spectrum operator-() const { return *this * -1.0; }

    std::size_t idx(int k, int n) const {
        return static_cast<std::size_t>(k + 1) * (4 * order_ + 1) + (n + 2 * order_);
    }
    const std::vector<cplx>& raw() const { return data_; }
    std::vector<cplx>& raw() { return data_; }

private:
    void check_slot(int k, int n) const {
        if (k < -1 || k > 1 || n < -span() || n > span())
            throw grid_error("slot (" + std::to_string(k) + "," + std::to_string(n) + ") off the padded grid");
        if (!allows(k)) throw grid_error(std::string("kind purity: k=") + std::to_string(k) + " on " + to_string(kind_));
    }
    Spectrum& combine(const Spectrum& o, double s) {
        if (!same_grid(o) || kind_ != o.kind_) throw grid_error("incompatible grids");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    Kind kind_ = Kind::DC;
    int order_ = 0;
    BaseFreqs base_{};
    std::vector<cplx> data_ = std::vector<cplx>(3);
    double spill_ = 0.0;
};

inline Spectrum make_spectrum(Kind kind, int order, BaseFreqs base, const std::vector<SpectrumEntry>& entries) {
    Spectrum s(kind, order, base);
    std::vector<bool> written(s.raw().size(), false);
    for (const auto& e : entries) {
        if (e.k < -1 || e.k > 1 || std::abs(e.n) > order)
            throw grid_error("entry (" + std::to_string(e.k) + "," + std::to_string(e.n) + ") off the live grid");
        if (!s.allows(e.k)) throw grid_error("entry violates kind purity");
        if (e.k == 0 && e.n == 0 && std::abs(e.value.imag()) > 1e-12 * std::max(1.0, std::abs(e.value.real())))
            throw grid_error("DC coefficient at f = 0 must be real");
        const std::size_t mirror = s.idx(-e.k, -e.n);
        if (written[mirror] && std::abs(s.raw()[mirror] - std::conj(e.value)) > 1e-12 * std::max(1.0, std::abs(e.value)))
            throw grid_error("entry conflicts with its conjugate mirror");
        s.set(e.k, e.n, e.value);
        written[s.idx(e.k, e.n)] = true;
        written[mirror] = true;
    }
    return s;
}

inline Kind product_kind(Kind a, Kind b) { return a == b ? Kind::DC : Kind::AC; }

// Convolution on the padded grid. AC x AC keeps only the k = 0 block: the
// k = +-2 terms cancel in the three-phase sum, so the result is the spectrum of
// (1/3) sum_p a_p(t) b_p(t).
inline Spectrum toeplitz_product(const Spectrum& a, const Spectrum& b) {
    if (!a.same_grid(b)) throw grid_error("incompatible grids");
    const Kind kind = product_kind(a.kind(), b.kind());
    Spectrum out(kind, a.order(), a.base());
    const int P = a.span();
    const int W = 4 * P + 1;
    std::vector<cplx> full(3 * static_cast<std::size_t>(W));
    bool any_input = false;
    for (int ka = -1; ka <= 1; ++ka) {
        if (!a.allows(ka)) continue;
        for (int kb = -1; kb <= 1; ++kb) {
            if (!b.allows(kb)) continue;
            const int k = ka + kb;
            if (k < -1 || k > 1) continue;
            for (int na = -P; na <= P; ++na) {
                cplx va = a(ka, na);
                if (va == cplx{}) continue;
                for (int nb = -P; nb <= P; ++nb) {
                    cplx vb = b(kb, nb);
                    if (vb == cplx{}) continue;
                    any_input = true;
                    full[(k + 1) * W + (na + nb + 2 * P)] += va * vb;
                }
            }
        }
    }
    double spill = 0.0;
    bool any_kept = false;
    for (int k = -1; k <= 1; ++k)
        for (int n = -2 * P; n <= 2 * P; ++n) {
            cplx v = full[(k + 1) * W + (n + 2 * P)];
            if (v == cplx{}) continue;
            if (std::abs(n) > P) {
                spill += std::norm(v);
            } else {
                out.put(k, n, v);
                any_kept = true;
            }
        }
    if (any_input && !any_kept && spill > 0.0) throw grid_error("product leaves the representable grid");
    out.set_spill(spill);
    return out;
}

// Dense matrix realizing h -> toeplitz_product(g, h) on the stacked padded grid
// (blocks k = -1, 0, 1, each of length 4N+1).
inline Eigen::MatrixXcd toeplitz_matrix(const Spectrum& g) {
    const int P = g.span();
    const int W = 2 * P + 1;
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(3 * W, 3 * W);
    for (int ko = -1; ko <= 1; ++ko)
        for (int ki = -1; ki <= 1; ++ki) {
            const int kg = ko - ki;
            if (kg < -1 || kg > 1 || !g.allows(kg)) continue;
            for (int no = -P; no <= P; ++no)
                for (int ni = -P; ni <= P; ++ni) {
                    const int d = no - ni;
                    if (std::abs(d) <= P) T((ko + 1) * W + no + P, (ki + 1) * W + ni + P) = g(kg, d);
                }
        }
    return T;
}

inline Eigen::VectorXcd stack(const Spectrum& s) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.raw().size()));
    for (std::size_t i = 0; i < s.raw().size(); ++i) v(static_cast<Eigen::Index>(i)) = s.raw()[i];
    return v;
}

// Block of T(g) mapping perturbation block k_in to k_out over n in [-Np, Np].
inline Eigen::MatrixXcd toeplitz_block(const Spectrum& g, int k_out, int k_in, int Np) {
    const int G = 2 * Np + 1;
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(G, G);
    const int kg = k_out - k_in;
    if (kg < -1 || kg > 1 || !g.allows(kg)) return T;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            const int d = i - j;
            if (std::abs(d) <= g.span()) T(i, j) = g(kg, d);
        }
    return T;
}

// Multiplies each coefficient by gain(f). Slots at f == 0 are zeroed and
// reported through dc_undefined when skip_dc is set.
struct GainResult {
    Spectrum out;
    bool dc_undefined = false;
};

inline GainResult apply_frequency_gain(const Spectrum& g, const std::function<cplx(double)>& gain, bool skip_dc) {
    GainResult r{Spectrum(g.kind(), g.order(), g.base()), false};
    for (int k = -1; k <= 1; ++k) {
        if (!g.allows(k)) continue;
        for (int n = -g.span(); n <= g.span(); ++n) {
            const double f = g.freq(k, n);
            if (skip_dc && f == 0.0) {
                r.dc_undefined = true;
                continue;
            }
            cplx v = g(k, n);
            if (v != cplx{}) r.out.put(k, n, v * gain(f));
        }
    }
    return r;
}

inline Spectrum apply_derivative_gain(const Spectrum& g) {
    return apply_frequency_gain(g, [](double f) { return cplx(0.0, kTwoPi * f); }, false).out;
}

inline GainResult apply_pi_gain(const Spectrum& g, double kp, double ki) {
    return apply_frequency_gain(g, [kp, ki](double f) { return kp + ki / cplx(0.0, kTwoPi * f); }, true);
}

inline void write_spectrum_csv_header(std::ostream& os) {
    os << "# sohb-spectrum v1\n";
    os << "signal,k,n,freq_hz,re,im,mag,ang\n";
}

inline void write_spectrum_csv(std::ostream& os, const std::string& name, const Spectrum& s) {
    char buf[256];
    for (int k = -1; k <= 1; ++k) {
        if (!s.allows(k)) continue;
        for (int n = -s.order(); n <= s.order(); ++n) {
            const cplx v = s(k, n);
            const PolarCoeff p = PolarCoeff::from(v);
            std::snprintf(buf, sizeof buf, "%s,%d,%d,%.10g,%.12g,%.12g,%.12g,%.12g\n", name.c_str(), k, n, s.freq(k, n),
                          v.real(), v.imag(), p.M, p.A);
            os << buf;
        }
    }
}

}  // namespace sohb
