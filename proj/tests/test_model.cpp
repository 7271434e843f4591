#include <catch_amalgamated.hpp>

#include "sohb/hb_solver.hpp"
#include "sohb/td_oracle.hpp"

using namespace sohb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const SolveReport& test1_solution() {
    static const SolveReport r = solve_so(preset("test1"));
    return r;
}

const SolveReport& test4_solution() {
    static const SolveReport r = solve_so(preset("test4"));
    return r;
}

Eigen::MatrixXd central_jacobian(const UnknownLayout& L, const Eigen::VectorXd& x, const SystemParams& p) {
    const Eigen::VectorXd sc = unknown_scales(L, p);
    Eigen::MatrixXd J(L.size(), L.size());
    for (int i = 0; i < L.size(); ++i) {
        const double h = 1e-5 * std::max(std::abs(x(i)), sc(i));
        Eigen::VectorXd a = x, b = x;
        a(i) += h;
        b(i) -= h;
        J.col(i) = (assemble_residuals(L, a, p) - assemble_residuals(L, b, p)) / (2.0 * h);
    }
    return J;
}

void check_dc_constraints(const SteadyState& s, const SystemParams& p) {
    const IntermediateSet I = evaluate_intermediates(s, p);
    const auto dc = dc_constraints(I, s, p);
    // i_d*(0) = i_d(0) holds in both modes: the DC-voltage integrator settles
    // wherever the current loop needs it.
    CHECK(std::abs(dc[1]) < 1e-9);
    CHECK(std::abs(dc[2]) < 1e-9);
    CHECK(std::abs(dc[3]) < 1e-9);
    if (s.i_pp) CHECK(std::abs(dc[0]) < 1e-9);
}

}  // namespace

TEST_CASE("equation tally is square for every order and mode", "[model]") {
    for (int N = 0; N <= 6; ++N)
        for (bool lim : {false, true}) {
            if (N == 0 && lim) continue;
            const EquationTally t = equation_tally(UnknownLayout(N, lim));
            INFO(t.to_string());
            CHECK(t.square());
        }
}

TEST_CASE("encode and decode are inverse", "[model]") {
    const SteadyState& s = *test1_solution().solution;
    const UnknownLayout L(3, false);
    const Eigen::VectorXd x = encode(L, s);
    CHECK((encode(L, decode(L, x, preset("test1"))) - x).norm() < 1e-12 * x.norm());
}

TEST_CASE("equilibrium agrees with the independent ODE stationary point", "[model]") {
    for (const char* name : {"test1", "test3"}) {
        const SystemParams p = preset(name);
        const SteadyState eq = equilibrium_solve(p).state;
        const OdeState x = ode_equilibrium(p);
        CHECK_THAT(eq.theta0(0, 0).real(), WithinAbs(x[3], 1e-8));
        CHECK_THAT(eq.u_dc(0, 0).real(), WithinAbs(x[2], 1e-8));
        OdeSignals sig;
        ode_rhs(p, x, cplx(p.u_t_peak(), 0.0), &sig);
        // Peak space vector in the rotating frame = 2 x two-sided phasor.
        CHECK(std::abs(2.0 * eq.u_ga(1, 0) - sig.u_g) < 1e-6 * std::abs(sig.u_g));
        CHECK(std::abs(2.0 * eq.m_a(1, 0) - sig.m) < 1e-8);
    }
}

TEST_CASE("equilibrium regression at L_g = 1 mH", "[model]") {
    const SteadyState eq = equilibrium_solve(preset("test1")).state;
    CHECK_THAT(eq.theta0(0, 0).real(), WithinAbs(0.1097, 0.0005));  // [PAPER]
    CHECK(eq.u_dc(0, 0).real() == 750.0);
}

TEST_CASE("limiter-free Test 1 solve", "[model][solver]") {
    const SolveReport& r = test1_solution();
    REQUIRE(r.converged);
    REQUIRE(r.so_found);
    const SteadyState& s = *r.solution;
    CHECK(r.trigger == TriggerMode::None);
    CHECK_THAT(s.fs, WithinAbs(9.8926, 0.02));  // [PAPER]
    CHECK(s.theta0(0, 1).imag() == 0.0);        // gauge
    CHECK(s.theta0(0, 1).real() > 0.0);
    check_dc_constraints(s, preset("test1"));
    CHECK(r.trace.front().note == "equilibrium");
    for (const auto& t : r.tallies) CHECK(t.find("rows=") != std::string::npos);
}

TEST_CASE("limiter-active Test 4 solve", "[model][solver]") {
    const SolveReport& r = test4_solution();
    REQUIRE(r.converged);
    const SteadyState& s = *r.solution;
    REQUIRE(s.i_pp);
    CHECK(r.trigger == TriggerMode::Bilateral);
    check_dc_constraints(s, preset("test4"));
    const IntermediateSet I = evaluate_intermediates(s, preset("test4"));
    // The clipped reference stays inside the limits up to Gibbs ripple.
    double lo = 1e9, hi = -1e9;
    for (double t = 0.0; t < 1.0 / s.fs; t += 1e-3) {
        lo = std::min(lo, I.i_ref.eval(t));
        hi = std::max(hi, I.i_ref.eval(t));
    }
    CHECK(hi < 200.0 + 15.0);
    CHECK(lo > -15.0);
}

TEST_CASE("forward-difference Jacobian matches central differences", "[model]") {
    const SystemParams p = preset("test1");
    const UnknownLayout L(3, false);
    const Eigen::VectorXd x = encode(L, *test1_solution().solution);
    const Eigen::VectorXd r0 = assemble_residuals(L, x, p);
    const Eigen::MatrixXd Jf =
        fd_jacobian([&](const Eigen::VectorXd& v) { return assemble_residuals(L, v, p); }, x, r0, 1e-7, unknown_scales(L, p));
    const Eigen::MatrixXd Jc = central_jacobian(L, x, p);
    for (int j = 0; j < L.size(); ++j) {
        INFO(L[j].label());
        CHECK((Jf.col(j) - Jc.col(j)).norm() <= 1e-4 * std::max(Jc.col(j).norm(), 1e-8));
    }
}

TEST_CASE("stable grid has no SO seed", "[solver]") {
    const SolveReport r = solve_so(preset("stable"));
    CHECK_FALSE(r.converged);
    CHECK_FALSE(r.solution);
    CHECK(r.message.find("no negative-damping") != std::string::npos);
}

TEST_CASE("N = 0 solve returns the equilibrium", "[solver]") {
    SolveConfig cfg;
    cfg.order = 0;
    const SolveReport r = solve_so(preset("test1"), cfg);
    REQUIRE(r.converged);
    CHECK_FALSE(r.so_found);
    CHECK(r.solution->order == 0);
}

TEST_CASE("seeded solve reproduces the staged result", "[solver]") {
    SolveConfig cfg;
    cfg.seed = reorder(*test1_solution().solution, 2);
    const SolveReport r = solve_so(preset("test1"), cfg);
    REQUIRE(r.converged);
    CHECK_THAT(r.solution->fs, WithinRel(test1_solution().solution->fs, 1e-9));
}

TEST_CASE("scan fractions interleave signs in ascending magnitude", "[solver]") {
    const auto v = scan_fractions(0.01, 0.03, true);
    REQUIRE(v.size() == 6);
    CHECK(v[0] == 0.01);
    CHECK(v[1] == -0.01);
    CHECK_THAT(v[4], WithinAbs(0.03, 1e-15));
}
