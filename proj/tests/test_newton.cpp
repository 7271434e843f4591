#include <catch_amalgamated.hpp>

#include "sohb/newton.hpp"

using namespace sohb;
using Catch::Matchers::WithinAbs;

TEST_CASE("square root of two", "[newton]") {
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    const NewtonReport r = newton_solve(
        [](const Eigen::VectorXd& x) {
            Eigen::VectorXd f(1);
            f << x(0) * x(0) - 2.0;
            return f;
        },
        x0);
    REQUIRE(r.converged());
    CHECK_THAT(r.x(0), WithinAbs(std::sqrt(2.0), 1e-9));
    CHECK(r.iterations < 10);
}

TEST_CASE("two-equation system converges to the nearby root", "[newton]") {
    auto f = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(2);
        r << x(0) + x(1) - 3.0, x(0) * x(1) - 2.0;
        return r;
    };
    Eigen::VectorXd a(2), b(2);
    a << 0.6, 2.3;
    b << 2.4, 0.7;
    const NewtonReport ra = newton_solve(f, a), rb = newton_solve(f, b);
    REQUIRE(ra.converged());
    REQUIRE(rb.converged());
    CHECK_THAT(ra.x(0), WithinAbs(1.0, 1e-8));
    CHECK_THAT(ra.x(1), WithinAbs(2.0, 1e-8));
    CHECK_THAT(rb.x(0), WithinAbs(2.0, 1e-8));
}

TEST_CASE("non-square and non-finite systems report failure", "[newton]") {
    Eigen::VectorXd x0(2);
    x0 << 1.0, 1.0;
    const NewtonReport r = newton_solve([](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(3); }, x0);
    CHECK(r.status == NewtonStatus::EvaluationFailed);
    const NewtonReport s = newton_solve(
        [](const Eigen::VectorXd& x) {
            Eigen::VectorXd f(2);
            f << std::log(x(0) - 5.0), x(1);
            return f;
        },
        x0);
    CHECK_FALSE(s.converged());
}

TEST_CASE("singular Jacobian is detected", "[newton]") {
    Eigen::VectorXd x0(2);
    x0 << 1.0, 1.0;
    const NewtonReport r = newton_solve(
        [](const Eigen::VectorXd& x) {
            Eigen::VectorXd f(2);
            f << x(0) + x(1) - 1.0, 2.0 * (x(0) + x(1));
            return f;
        },
        x0);
    CHECK(r.status == NewtonStatus::SingularJacobian);
}

TEST_CASE("forward-difference Jacobian matches the analytic one", "[newton]") {
    auto f = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(2);
        r << std::sin(x(0)) * x(1), std::exp(x(0)) - x(1) * x(1);
        return r;
    };
    Eigen::VectorXd x(2);
    x << 0.3, 1.7;
    const Eigen::MatrixXd J = fd_jacobian(f, x, f(x), 1e-7);
    Eigen::MatrixXd A(2, 2);
    A << std::cos(0.3) * 1.7, std::sin(0.3), std::exp(0.3), -2.0 * 1.7;
    CHECK((J - A).norm() < 1e-6 * A.norm());
}
