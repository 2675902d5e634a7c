#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/medium.hpp"
#include "pulsefront/numerics.hpp"
#include "pulsefront/profile.hpp"

namespace pulsefront {

/// Principal eigenpair of the exponentially weighted cell operator
///   L_lambda phi = -(a phi')' + 2 lambda a phi' + q phi'
///                  + [lambda a' - lambda q - lambda^2 a - f_u(x,0)] phi
/// on one period with periodic boundary conditions. phi is positive and
/// normalised to sup norm 1.
struct DispersionSample {
    double lambda = 0.0;
    double k = 0.0;
    std::vector<double> phi; // n samples on [0, L)
    double residual = 0.0;   // ||L phi - k phi||_inf with ||phi||_inf = 1
};

struct StabilityExponents {
    double mu0 = 0.0;
    double mu1 = 0.0;
    std::vector<double> psi0;
    std::vector<double> psi1;
};

/// Solution set of k(lambda) + c lambda = 0 over lambda > 0.
struct RootSet {
    double c = 0.0;
    std::vector<double> roots; // ascending, size 0..2
    bool tangent = false;      // near-double root collapsed to a singleton
};

struct SpeedC0 {
    double c0 = 0.0;
    double lambda_at_c0 = 0.0;
    std::vector<double> cert_lambda;        // sample points of the certificate
    std::vector<double> cert_k;             // k at those points
    double max_second_difference = 0.0;     // concavity certificate
};

namespace detail {

/// Cyclic tridiagonal bands of the weighted cell operator. `potential`
/// selects the zeroth-order coefficient.
struct CellOperator {
    std::vector<double> lower, diag, upper;

    static CellOperator assemble(const PeriodicMedium& med, int n, double lambda,
                                 bool linearize_at_one) {
        CellOperator op;
        op.lower.resize(n);
        op.diag.resize(n);
        op.upper.resize(n);
        const double L = med.period();
        const double h = L / n;
        const double q = med.advection();
        for (int i = 0; i < n; ++i) {
            const double x = h * i;
            const double a_m = med.diffusivity(x - 0.5 * h);
            const double a_p = med.diffusivity(x + 0.5 * h);
            const double a_i = med.diffusivity(x);
            const double drift = 2.0 * lambda * a_i + q;
            op.lower[i] = -a_m / (h * h) - drift / (2.0 * h);
            op.upper[i] = -a_p / (h * h) + drift / (2.0 * h);
            const double fu = linearize_at_one ? med.df_du(x, 1.0) : med.df_du(x, 0.0);
            op.diag[i] = (a_m + a_p) / (h * h) + lambda * med.diffusivity_derivative(x) -
                         lambda * q - lambda * lambda * a_i - fu;
        }
        return op;
    }

    void apply(const std::vector<double>& v, std::vector<double>& out) const {
        const long n = static_cast<long>(diag.size());
        for (long i = 0; i < n; ++i)
            out[i] = lower[i] * v[wrap_index(i - 1, n)] + diag[i] * v[i] +
                     upper[i] * v[wrap_index(i + 1, n)];
    }

    double gershgorin_lower() const {
        double g = diag[0] - std::abs(lower[0]) - std::abs(upper[0]);
        for (std::size_t i = 1; i < diag.size(); ++i)
            g = std::min(g, diag[i] - std::abs(lower[i]) - std::abs(upper[i]));
        return g;
    }
};

/// Inverse iteration for the principal (leftmost, positive-eigenfunction)
/// eigenpair. The shift trails the Rayleigh quotient by 1, which keeps the
/// resolvent positivity-preserving once the iterate is near the Perron
/// vector; if the iterate converges onto a sign-changing vector the shift is
/// restarted further left.
struct EigenResult {
    double value = 0.0;
    std::vector<double> vec;
    double residual = 0.0;
};

inline EigenResult principal_eigenpair(const CellOperator& op, double tol = 1e-12,
                                       int max_iter = 400) {
    const long n = static_cast<long>(op.diag.size());
    const double floor_shift = op.gershgorin_lower();
    // Rounding floor of the residual scales with the operator norm.
    double op_scale = 0.0;
    for (long i = 0; i < n; ++i)
        op_scale = std::max(op_scale,
                            std::abs(op.lower[i]) + std::abs(op.diag[i]) + std::abs(op.upper[i]));
    std::vector<double> v(n, 1.0), w(n), Tv(n);
    bool converged_sign_changing = false;
    double last_resid = std::numeric_limits<double>::infinity();

    for (int attempt = 0; attempt < 6; ++attempt) {
        double shift = attempt == 0 ? floor_shift - 1.0
                                    : floor_shift - std::pow(4.0, attempt);
        std::fill(v.begin(), v.end(), 1.0);
        double ray = 0.0;
        double resid = std::numeric_limits<double>::infinity();
        for (int it = 0; it < max_iter; ++it) {
            CyclicTridiagonalSolver solver;
            std::vector<double> lo = op.lower, di = op.diag, up = op.upper;
            for (long i = 0; i < n; ++i) di[i] -= shift;
            solver.factor(lo, di, up);
            w = v;
            solver.solve(w);
            // Normalise to sup norm 1 with a positive dominant entry.
            double big = 0.0;
            for (double x : w)
                if (std::abs(x) > std::abs(big)) big = x;
            if (big == 0.0) break;
            for (long i = 0; i < n; ++i) w[i] /= big;
            op.apply(w, Tv);
            double num = 0.0, den = 0.0;
            for (long i = 0; i < n; ++i) {
                num += w[i] * Tv[i];
                den += w[i] * w[i];
            }
            ray = num / den;
            resid = 0.0;
            for (long i = 0; i < n; ++i) resid = std::max(resid, std::abs(Tv[i] - ray * w[i]));
            v = w;
            const double tol_eff =
                std::max(tol * std::max(1.0, std::abs(ray)),
                         64.0 * std::numeric_limits<double>::epsilon() * op_scale);
            if (resid <= tol_eff) break;
            shift = ray - 1.0;
            if (attempt > 0) shift = std::min(shift, floor_shift - 0.5);
        }
        last_resid = resid;
        const double tol_acc =
            std::max(1e3 * tol * std::max(1.0, std::abs(ray)),
                     256.0 * std::numeric_limits<double>::epsilon() * op_scale);
        if (resid <= tol_acc) {
            double vmin = v[0];
            for (double x : v) vmin = std::min(vmin, x);
            if (vmin > 0.0) {
                EigenResult out;
                out.value = ray;
                out.vec = v;
                out.residual = resid;
                return out;
            }
            converged_sign_changing = true; // restart with a shift further left
        }
    }
    if (converged_sign_changing)
        throw NoPositiveEigenfunction("iterate keeps converging to a sign-changing vector");
    throw pulsefront::NonConvergence("inverse iteration stalled, residual " +
                                     std::to_string(last_resid));
}

} // namespace detail

/// k(lambda) with its positive periodic eigenfunction.
inline DispersionSample k_of_lambda(const PeriodicMedium& medium, int n, double lambda,
                                    double tol = 1e-12) {
    if (n < 32) throw ConfigError("cell resolution must be >= 32");
    if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
    const auto op = detail::CellOperator::assemble(medium, n, lambda, false);
    auto eig = detail::principal_eigenpair(op, tol);
    DispersionSample out;
    out.lambda = lambda;
    out.k = eig.value;
    out.phi = std::move(eig.vec);
    out.residual = eig.residual;
    return out;
}

/// mu0 = k(0) and mu1 from the linearisation at the state 1. Throws
/// MonostabilityViolation unless mu0 < 0 < mu1.
inline StabilityExponents stability_exponents(const PeriodicMedium& medium, int n,
                                              double tol = 1e-12) {
    auto s0 = k_of_lambda(medium, n, 0.0, tol);
    const auto op1 = detail::CellOperator::assemble(medium, n, 0.0, true);
    auto e1 = detail::principal_eigenpair(op1, tol);
    StabilityExponents out;
    out.mu0 = s0.k;
    out.mu1 = e1.value;
    out.psi0 = std::move(s0.phi);
    out.psi1 = std::move(e1.vec);
    if (!(out.mu0 < 0.0))
        throw MonostabilityViolation("mu0 = " + std::to_string(out.mu0) + " >= 0");
    if (!(out.mu1 > 0.0))
        throw MonostabilityViolation("mu1 = " + std::to_string(out.mu1) + " <= 0");
    return out;
}

/// Linear spreading speed c0 = inf_{lambda>0} (-k(lambda)/lambda), located by
/// a doubling bracket followed by golden-section refinement; k is concave so
/// the objective is strictly quasi-convex. Also emits a sampled concavity
/// certificate on [0, 2 lambda_min].
inline SpeedC0 compute_c0(const PeriodicMedium& medium, int n, double xtol = 1e-7) {
    const double mu0 = k_of_lambda(medium, n, 0.0).k;
    if (!(mu0 < 0.0))
        throw MonostabilityViolation("compute_c0 requires mu0 < 0, got " + std::to_string(mu0));
    auto objective = [&](double lam) { return -k_of_lambda(medium, n, lam).k / lam; };

    // Coarse geometric scan for a bracketing triple.
    std::vector<double> lams, vals;
    for (int j = -8; j <= 6; ++j) {
        const double lam = std::pow(2.0, j);
        lams.push_back(lam);
        vals.push_back(objective(lam));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
        if (vals[i] < vals[best]) best = i;
    if (best == 0 || best + 1 == vals.size())
        throw BracketFailure("no interior minimiser of -k/lambda below lambda=64");
    const double lam_min =
        golden_minimize(objective, lams[best - 1], lams[best + 1], xtol);

    SpeedC0 out;
    out.lambda_at_c0 = lam_min;
    out.c0 = objective(lam_min);
    const int m = 33;
    out.cert_lambda.resize(m);
    out.cert_k.resize(m);
    for (int i = 0; i < m; ++i) {
        const double lam = 2.0 * lam_min * static_cast<double>(i) / (m - 1);
        out.cert_lambda[i] = lam;
        out.cert_k[i] = (i == 0) ? mu0 : k_of_lambda(medium, n, lam).k;
    }
    out.max_second_difference = -std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < m; ++i)
        out.max_second_difference = std::max(
            out.max_second_difference, out.cert_k[i + 1] - 2.0 * out.cert_k[i] + out.cert_k[i - 1]);
    return out;
}

/// F_c = { lambda > 0 : k(lambda) + c lambda = 0 }. Concavity of k gives at
/// most two sign changes; a near-double root is reported as a flagged
/// singleton.
inline RootSet dispersion_roots(const PeriodicMedium& medium, int n, double c,
                                double xtol = 1e-10) {
    if (!(c > 0.0)) throw ConfigError("dispersion_roots requires c > 0");
    auto g = [&](double lam) { return k_of_lambda(medium, n, lam).k + c * lam; };

    RootSet out;
    out.c = c;

    std::vector<double> lams, vals;
    for (int j = -8; j <= 6; ++j) {
        const double lam = std::pow(2.0, j);
        lams.push_back(lam);
        vals.push_back(g(lam));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best]) best = i;
    double lo = best > 0 ? lams[best - 1] : lams[best] / 2.0;
    double hi = best + 1 < lams.size() ? lams[best + 1] : 64.0;
    const double lam_peak = golden_maximize(g, lo, hi, xtol);
    const double g_peak = g(lam_peak);

    const double tangent_tol = 1e-6 * std::max(1.0, c * lam_peak);
    if (g_peak < -tangent_tol) return out; // empty set: c below c0
    if (std::abs(g_peak) <= tangent_tol) {
        out.roots = {lam_peak};
        out.tangent = true;
        return out;
    }

    const double lam_left_anchor = 1e-10; // g there equals mu0 < 0
    const double r1 = bisect(g, lam_left_anchor, lam_peak, xtol);
    double hi2 = lam_peak;
    double span = std::max(lam_peak, 0.5);
    while (g(hi2 + span) > 0.0) {
        hi2 += span;
        span *= 2.0;
        if (hi2 > 64.0)
            throw BracketFailure("no upper dispersion root below lambda=64");
    }
    const double r2 = bisect(g, hi2, hi2 + span, xtol);
    out.roots = {r1, r2};
    return out;
}

// ---------------------------------------------------------------------------
// Kernel residual: phi_s solves the traveling-frame linearisation exactly,
// so applying the discrete operator to the extracted phi_s table measures
// profile quality. The operator acts along diagonals of the (s, x) table,
//   Lv = -D(a Dv) + q Dv - c v_s - f_u(x, phi) v,   D = d/ds + d/dx,
// which collapses to -(a v')' + (q - c) v' - f_u(x, phi) v for tables with a
// single column. Norms carry the tail weight rho(s) = 1 + exp(2 r s).
// ---------------------------------------------------------------------------

struct KernelResidualReport {
    double relative = 0.0;          // ||L phi_s||_rho / ||phi_s||_rho
    double operator_norm = 0.0;     // ||L phi_s||_rho
    double slope_norm = 0.0;        // ||phi_s||_rho
    double weight_rate = 0.0;       // r in rho(s) = 1 + e^{2 r s}
    double s_lo = 0.0, s_hi = 0.0;  // window actually used
};

inline KernelResidualReport kernel_residual(const FrontProfile& front,
                                            const PeriodicMedium& medium, double r,
                                            double lambda_star_plus) {
    if (front.ds * lambda_star_plus > 1.0 / 8.0)
        throw ProfileTooCoarse("fewer than 8 profile points per decay length 1/lambda*+");
    if (front.cols > 1 && std::abs(front.col_spacing() - front.ds) > 1e-9 * front.ds)
        throw ProfileTooCoarse("column spacing must match the s spacing for diagonal stencils");

    const int ns = front.ns, M = front.cols;
    const double h = front.ds;
    const double q = medium.advection();
    const double c = front.c;
    KernelResidualReport rep;
    rep.weight_rate = r;
    rep.s_lo = front.s_at(1);
    rep.s_hi = front.s_at(ns - 2);

    double num = 0.0, den = 0.0;
    for (int i = 1; i + 1 < ns; ++i) {
        const double s = front.s_at(i);
        const double w = 1.0 + std::exp(2.0 * r * s);
        for (int m = 0; m < M; ++m) {
            const int mp = static_cast<int>(wrap_index(m + 1, M));
            const int mm = static_cast<int>(wrap_index(m - 1, M));
            const double x = front.x_col(m);
            const double v = front.phi_s[front.idx(i, m)];
            const double v_pp = front.phi_s[front.idx(i + 1, mp)]; // s+h on the diagonal
            const double v_mm = front.phi_s[front.idx(i - 1, mm)];
            const double a_p = medium.diffusivity(x + 0.5 * h);
            const double a_m = medium.diffusivity(x - 0.5 * h);
            const double DaD = (a_p * (v_pp - v) - a_m * (v - v_mm)) / (h * h);
            const double Dv = (v_pp - v_mm) / (2.0 * h);
            const double v_s =
                (front.phi_s[front.idx(i + 1, m)] - front.phi_s[front.idx(i - 1, m)]) / (2.0 * h);
            const double fu = medium.df_du(x, front.phi[front.idx(i, m)]);
            const double Lv = -DaD + q * Dv - c * v_s - fu * v;
            num += w * Lv * Lv;
            den += w * v * v;
        }
    }
    rep.operator_norm = std::sqrt(num * h / M);
    rep.slope_norm = std::sqrt(den * h / M);
    if (rep.slope_norm == 0.0) throw TailUnderflow("phi_s vanishes on the window");
    rep.relative = rep.operator_norm / rep.slope_norm;
    return rep;
}

} // namespace pulsefront
