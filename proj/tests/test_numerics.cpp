#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pulsefront/numerics.hpp"

using namespace pulsefront;
using Catch::Approx;

namespace {

// Dense reference solve for small systems.
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(A[r][k]) > std::abs(A[p][k])) p = r;
        std::swap(A[k], A[p]);
        std::swap(b[k], b[p]);
        for (int r = k + 1; r < n; ++r) {
            const double m = A[r][k] / A[k][k];
            for (int c = k; c < n; ++c) A[r][c] -= m * A[k][c];
            b[r] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (int k = n - 1; k >= 0; --k) {
        double s = b[k];
        for (int c = k + 1; c < n; ++c) s -= A[k][c] * x[c];
        x[k] = s / A[k][k];
    }
    return x;
}

} // namespace

TEST_CASE("tridiagonal and cyclic solvers against dense elimination") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + trial;
        std::vector<double> lo(n), di(n), up(n), rhs(n);
        for (int i = 0; i < n; ++i) {
            lo[i] = unif(rng);
            up[i] = unif(rng);
            di[i] = 4.0 + unif(rng); // diagonally dominant
            rhs[i] = unif(rng);
        }
        SECTION("plain, trial " + std::to_string(trial)) {
            std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
            for (int i = 0; i < n; ++i) {
                A[i][i] = di[i];
                if (i > 0) A[i][i - 1] = lo[i];
                if (i + 1 < n) A[i][i + 1] = up[i];
            }
            auto ref = dense_solve(A, rhs);
            TridiagonalSolver solver;
            solver.factor(lo, di, up);
            auto x = rhs;
            solver.solve(x);
            for (int i = 0; i < n; ++i) CHECK(x[i] == Approx(ref[i]).margin(1e-11));
        }
        SECTION("cyclic, trial " + std::to_string(trial)) {
            std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
            for (int i = 0; i < n; ++i) {
                A[i][i] = di[i];
                A[i][(i + n - 1) % n] = lo[i];
                A[i][(i + 1) % n] = up[i];
            }
            auto ref = dense_solve(A, rhs);
            CyclicTridiagonalSolver solver;
            solver.factor(lo, di, up);
            auto x = rhs;
            solver.solve(x);
            for (int i = 0; i < n; ++i) CHECK(x[i] == Approx(ref[i]).margin(1e-11));
        }
    }
}

TEST_CASE("trig interpolant reproduces trig polynomials and derivatives") {
    const double L = 2.0;
    auto f = [&](double x) { return 1.5 + 0.4 * std::cos(2 * M_PI * x / L) - 0.2 * std::sin(4 * M_PI * x / L); };
    auto df = [&](double x) {
        return -0.4 * (2 * M_PI / L) * std::sin(2 * M_PI * x / L) -
               0.2 * (4 * M_PI / L) * std::cos(4 * M_PI * x / L);
    };
    std::vector<double> samples(32);
    for (int i = 0; i < 32; ++i) samples[i] = f(L * i / 32.0);
    TrigInterpolant interp(samples, L);
    for (double x : {0.0, 0.1, 0.77, 1.31, 1.999}) {
        CHECK(interp(x) == Approx(f(x)).margin(1e-12));
        CHECK(interp.derivative(x) == Approx(df(x)).margin(1e-11));
    }
}

TEST_CASE("cubic interpolation is exact on cubics") {
    auto f = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x; };
    std::vector<double> y(12);
    for (int i = 0; i < 12; ++i) y[i] = f(0.5 * i);
    for (double x : {1.1, 2.7, 4.9}) CHECK(uniform_cubic_eval(y, 0.0, 0.5, x) == Approx(f(x)).margin(1e-13));
}

TEST_CASE("golden section and bisection") {
    auto f = [](double x) { return (x - 1.3) * (x - 1.3) + 2.0; };
    CHECK(golden_minimize(f, 0.0, 4.0, 1e-10) == Approx(1.3).margin(1e-8));
    auto g = [](double x) { return x * x - 2.0; };
    CHECK(bisect(g, 0.0, 2.0, 1e-12) == Approx(std::sqrt(2.0)).margin(1e-10));
    CHECK_THROWS_AS(bisect(g, 2.0, 3.0, 1e-12), BracketFailure);
}

TEST_CASE("drift fit recovers slope and log coefficient") {
    std::vector<double> t, y;
    for (int i = 0; i < 200; ++i) {
        const double ti = 5.0 + 0.25 * i;
        t.push_back(ti);
        y.push_back(2.1 * ti - 1.5 * std::log(ti) + 0.3);
    }
    auto fit = fit_drift(t, y);
    CHECK(fit.slope == Approx(2.1).margin(1e-10));
    CHECK(fit.log_coeff == Approx(-1.5).margin(1e-8));
    CHECK(fit.intercept == Approx(0.3).margin(1e-8));
}
