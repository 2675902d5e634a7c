#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pulsefront/asymptotics.hpp"
#include "pulsefront/errors.hpp"
#include "pulsefront/frontsim.hpp"
#include "pulsefront/medium.hpp"
#include "pulsefront/numerics.hpp"
#include "pulsefront/profile.hpp"
#include "pulsefront/spectral.hpp"

namespace pulsefront {

/// Spectral data shared by every comparison-function construction at a fixed
/// front speed: the two dispersion roots, their eigenfunctions, the
/// intermediate rate r with its eigenfunction, and the eigenfunction floors.
struct SpectralBundle {
    double c_star = 0.0;
    RootSet roots;
    double lambda_star = 0.0, lambda_star_plus = 0.0;
    double r = 0.0;   // min{(1+alpha) lambda*, (lambda* + lambda*+)/2}
    double k_r = 0.0; // k(r)
    DispersionSample eig_star, eig_star_plus, eig_r;
    StabilityExponents stab;
    HolderData holder;
    double kappa = 0.0, kappa_r = 0.0;
    double L = 1.0;

    double gap_r() const { return k_r + c_star * r; } // k(r) + c* r > 0
};

inline double min_of(const std::vector<double>& v) {
    double m = v[0];
    for (double x : v) m = std::min(m, x);
    return m;
}

inline SpectralBundle make_spectral_bundle(const PeriodicMedium& medium, int n, double c_star,
                                           const HolderData& holder) {
    SpectralBundle b;
    b.c_star = c_star;
    b.holder = holder;
    b.L = medium.period();
    b.roots = dispersion_roots(medium, n, c_star);
    if (b.roots.roots.size() != 2)
        throw ConditionUnsatisfiable("ladders need two dispersion roots; F_c has " +
                                     std::to_string(b.roots.roots.size()));
    b.lambda_star = b.roots.roots[0];
    b.lambda_star_plus = b.roots.roots[1];
    b.r = std::min((1.0 + holder.alpha) * b.lambda_star,
                   0.5 * (b.lambda_star + b.lambda_star_plus));
    b.eig_star = k_of_lambda(medium, n, b.lambda_star);
    b.eig_star_plus = k_of_lambda(medium, n, b.lambda_star_plus);
    b.eig_r = k_of_lambda(medium, n, b.r);
    b.k_r = b.eig_r.k;
    if (!(b.gap_r() > 0.0))
        throw ConditionUnsatisfiable("k(r) + c* r = " + std::to_string(b.gap_r()) + " <= 0");
    b.stab = stability_exponents(medium, n);
    b.kappa = std::min(min_of(b.eig_star.phi), min_of(b.eig_star_plus.phi));
    b.kappa_r = min_of(b.eig_r.phi);
    return b;
}

// ---------------------------------------------------------------------------
// Super/subsolution ladders. Rung n of the upper ladder is
//   ubar_n(s,x) = sum_{i<n} B_i e^{-l+ s} phi+ + ttheta_n e^{-l* s} phi*
//                 + theta_n e^{-r s} phi_r,
// the lower ladder is
//   ulow_n(s,x) = max{ (1 - sum_{i<n} B_i) e^{-l+ s} phi+ - theta_n e^{-r s} phi_r, 0 }.
// Coefficients follow the construction behind the tail bounds; the lower
// ladder's geometric sequence carries a prefactor beta chosen as the smallest
// value for which the rung ordering is provable, which also keeps
// 1 - sum B_i positive once sigma0 is large enough.
// ---------------------------------------------------------------------------

struct Ladder {
    enum class Kind { upper, lower } kind = Kind::upper;
    double sigma0 = 0.0;
    double sigma = 0.0; // rung spacing
    int n_max = 0;
    std::vector<double> B;           // B[0..n_max]
    std::vector<double> theta;       // theta[n], n = 1..n_max (index 0 unused)
    std::vector<double> theta_tilde; // upper ladder only
    double beta = 1.0;               // lower-ladder prefactor
    SpectralBundle spec;

    double sigma_n(int n) const { return sigma0 + n * sigma; }
    double coeff_sum(int n) const { // sum_{i<n} B_i
        double s = 0.0;
        for (int i = 0; i < n && i < static_cast<int>(B.size()); ++i) s += B[i];
        return s;
    }
    double B_bar() const { // full geometric sum for the upper ladder
        const double q = std::exp(-spec.holder.alpha * spec.lambda_star_plus * sigma);
        return 1.0 + 1.0 / (1.0 - q);
    }
    double B_lower() const { // 1 - sum_{i>=1} B_i for the lower ladder
        const double q = std::exp(-spec.holder.alpha * spec.lambda_star_plus * sigma);
        return 1.0 - beta / (1.0 - q);
    }

    double eig_plus(double x) const { return periodic_cubic_eval(spec.eig_star_plus.phi, spec.L, x); }
    double eig_star(double x) const { return periodic_cubic_eval(spec.eig_star.phi, spec.L, x); }
    double eig_r(double x) const { return periodic_cubic_eval(spec.eig_r.phi, spec.L, x); }

    double value(int n, double s, double x) const {
        const double lp = spec.lambda_star_plus, ls = spec.lambda_star, r = spec.r;
        if (kind == Kind::upper) {
            return coeff_sum(n) * std::exp(-lp * s) * eig_plus(x) +
                   theta_tilde[n] * std::exp(-ls * s) * eig_star(x) +
                   theta[n] * std::exp(-r * s) * eig_r(x);
        }
        const double v = (1.0 - coeff_sum(n)) * std::exp(-lp * s) * eig_plus(x) -
                         theta[n] * std::exp(-r * s) * eig_r(x);
        return std::max(v, 0.0);
    }
};

struct LadderConditionReport {
    double sigma0 = 0.0;
    bool smallness_value = false;  // tail value below gamma/3 (upper) or gamma (lower)
    bool smallness_incr = false;   // rung-increment domination
    bool theta_alpha = false;      // upper only
    bool coeff_positive = false;   // lower only: 1 - sum B_i > 0
    bool ok() const { return smallness_value && smallness_incr && theta_alpha && coeff_positive; }
};

namespace detail {

inline Ladder assemble_ladder(Ladder::Kind kind, const SpectralBundle& spec, int n_max,
                              double sigma0, LadderConditionReport* rep) {
    Ladder lad;
    lad.kind = kind;
    lad.spec = spec;
    lad.sigma0 = sigma0;
    lad.n_max = n_max;
    const double alpha = spec.holder.alpha, delta = spec.holder.delta, gamma = spec.holder.gamma;
    const double lp = spec.lambda_star_plus, ls = spec.lambda_star, r = spec.r;
    const double gap = spec.gap_r();
    const double kap = spec.kappa, kap_r = spec.kappa_r;

    lad.sigma = (kind == Ladder::Kind::upper) ? alpha * lp * sigma0 / (2.0 * (lp - ls))
                                              : alpha * lp * sigma0 / (2.0 * (lp - r));
    const double q = std::exp(-alpha * lp * lad.sigma);

    lad.B.assign(n_max + 1, 0.0);
    if (kind == Ladder::Kind::upper) {
        lad.B[0] = 1.0;
        for (int n = 1; n <= n_max; ++n)
            lad.B[n] = std::exp(-alpha * lp * (n - 1) * lad.sigma);
    } else {
        lad.beta = 2.0 * lad.sigma * delta * ((1.0 + alpha) * lp - r) *
                   std::exp(-0.5 * alpha * lp * sigma0) / (gap * kap_r * kap);
        lad.B[0] = 0.0;
        for (int n = 1; n <= n_max; ++n)
            lad.B[n] = lad.beta * std::exp(-alpha * lp * (n - 1) * lad.sigma);
    }

    lad.theta.assign(n_max + 1, 0.0);
    lad.theta_tilde.assign(n_max + 1, 0.0);
    for (int n = 1; n <= n_max; ++n) {
        const double snm1 = lad.sigma_n(n - 1);
        const double coeff = (kind == Ladder::Kind::upper) ? 3.0 * lad.coeff_sum(n)
                                                           : 1.0 - lad.coeff_sum(n);
        lad.theta[n] = delta * std::pow(coeff, 1.0 + alpha) / (gap * kap_r) *
                       std::exp(-((1.0 + alpha) * lp - r) * snm1);
        if (kind == Ladder::Kind::upper)
            lad.theta_tilde[n] = lad.theta[n] / kap * std::exp(-(r - ls) * snm1);
    }

    if (rep) {
        rep->sigma0 = sigma0;
        const double max_plus = 1.0; // sup-normalised eigenfunction
        if (kind == Ladder::Kind::upper) {
            const double Bbar = lad.B_bar();
            rep->smallness_value = Bbar * std::exp(-lp * sigma0) * max_plus <= gamma / 3.0;
            const double m = std::max({1.0, (1.0 + alpha) * lp - r, r - ls});
            rep->smallness_incr =
                3.0 * lad.sigma * delta * std::pow(3.0 * Bbar, 1.0 + alpha) * m *
                    std::exp(-0.5 * alpha * lp * sigma0) / (gap * kap_r * kap * kap) <=
                1.0;
            rep->theta_alpha = true;
            for (int n = 1; n <= n_max; ++n) {
                const double lhs = delta * std::pow(3.0, 1.0 + alpha) *
                                   std::pow(lad.theta[n], alpha) *
                                   std::exp(-alpha * r * lad.sigma_n(n - 1)) /
                                   std::pow(kap, 1.0 + alpha);
                if (lhs > gap * kap_r) rep->theta_alpha = false;
            }
            rep->coeff_positive = true;
        } else {
            rep->smallness_value = std::exp(-lp * sigma0) * max_plus <= gamma;
            const double m = std::max((1.0 + alpha) * std::exp(-alpha * lp * sigma0),
                                      lad.sigma * ((1.0 + alpha) * lp - r) *
                                          std::exp(-0.5 * alpha * lp * sigma0));
            rep->smallness_incr = delta * m / (gap * kap_r * kap) <= 0.5;
            rep->theta_alpha = true;
            rep->coeff_positive = lad.B_lower() >= 0.5;
        }
    }
    return lad;
}

} // namespace detail

/// Build a ladder at a fixed sigma0 without enforcing the smallness
/// conditions; used by tests probing the conditions themselves.
inline Ladder build_ladder_at(Ladder::Kind kind, const SpectralBundle& spec, int n_max,
                              double sigma0, LadderConditionReport* rep = nullptr) {
    LadderConditionReport local;
    return detail::assemble_ladder(kind, spec, n_max, sigma0, rep ? rep : &local);
}

/// Doubling scan over sigma0 until every smallness condition holds.
inline Ladder build_ladder(Ladder::Kind kind, const SpectralBundle& spec, int n_max,
                           double sigma0_start = 1.0, double sigma0_max = 1e4,
                           LadderConditionReport* rep_out = nullptr) {
    for (double s0 = sigma0_start; s0 <= sigma0_max; s0 *= 2.0) {
        LadderConditionReport rep;
        Ladder lad = detail::assemble_ladder(kind, spec, n_max, s0, &rep);
        if (rep.ok()) {
            if (rep_out) *rep_out = rep;
            return lad;
        }
    }
    throw ConditionUnsatisfiable("no sigma0 <= " + std::to_string(sigma0_max) +
                                 " satisfies the ladder smallness conditions");
}

inline Ladder build_upper_ladder(const SpectralBundle& spec, int n_max,
                                 LadderConditionReport* rep = nullptr) {
    return build_ladder(Ladder::Kind::upper, spec, n_max, 1.0, 1e4, rep);
}
inline Ladder build_lower_ladder(const SpectralBundle& spec, int n_max,
                                 LadderConditionReport* rep = nullptr) {
    return build_ladder(Ladder::Kind::lower, spec, n_max, 1.0, 1e4, rep);
}

// ---------------------------------------------------------------------------
// Discrete certificates: apply the traveling-frame operator
//   L u = -D(a D u) + q D u - c u_s - f(x, u),  D = d/ds + d/dx,
// to each rung on a grid and report the signed residual extrema. eps_grid is
// the Richardson estimate 4/3 |extreme(h) - extreme(h/2)| times a safety 2.
// ---------------------------------------------------------------------------

struct RungCertificate {
    int n = 0;
    double s_lo = 0.0, s_hi = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
    double eps_grid = 0.0;
    double worst_s = 0.0;
    double theta = 0.0, theta_tilde = 0.0, coeff_sum = 0.0;
};

struct LadderReport {
    std::vector<RungCertificate> rungs;
    bool monotone = true;
    double monotone_worst = 0.0; // most negative ordered gap
    double sigma0 = 0.0;
};

namespace detail {

/// Signed residual extrema of L applied to one rung over [s_lo, s_hi].
/// Residuals are evaluated only where the rung (and its stencil neighbours,
/// for the clipped lower rung) are strictly positive.
inline std::pair<double, double> rung_residual_extrema(const Ladder& lad, int n,
                                                       const PeriodicMedium& med, double s_lo,
                                                       double s_hi, double h, double* worst_s) {
    const double L = med.period();
    const int cols = med.constant_coefficients() ? 1 : static_cast<int>(std::llround(L / h));
    const double q = med.advection();
    const double c = lad.spec.c_star;
    const int ns = static_cast<int>(std::ceil((s_hi - s_lo) / h)) + 1;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    double at = s_lo;
    std::vector<double> row_m(cols), row_0(cols), row_p(cols);
    for (int i = 1; i + 1 < ns; ++i) {
        const double s = s_lo + h * i;
        for (int m = 0; m < cols; ++m) {
            const double x = cols == 1 ? 0.0 : L * m / cols;
            row_m[m] = lad.value(n, s - h, cols == 1 ? x : wrap(x - h, L));
            row_0[m] = lad.value(n, s, x);
            row_p[m] = lad.value(n, s + h, cols == 1 ? x : wrap(x + h, L));
        }
        for (int m = 0; m < cols; ++m) {
            const double x = cols == 1 ? 0.0 : L * m / cols;
            const double v = row_0[m];
            if (lad.kind == Ladder::Kind::lower &&
                (v <= 0.0 || row_m[m] <= 0.0 || row_p[m] <= 0.0))
                continue;
            const double vs_same =
                (lad.value(n, s + h, x) - lad.value(n, s - h, x)) / (2.0 * h);
            const double a_p = med.diffusivity(wrap(x + 0.5 * h, L));
            const double a_m = med.diffusivity(wrap(x - 0.5 * h, L));
            const double DaD = (a_p * (row_p[m] - v) - a_m * (v - row_m[m])) / (h * h);
            const double Dv = (row_p[m] - row_m[m]) / (2.0 * h);
            const double resid = -DaD + q * Dv - c * vs_same - med.f(wrap(x, L), v);
            if (resid < mn) {
                mn = resid;
                if (lad.kind == Ladder::Kind::upper) at = s;
            }
            if (resid > mx) {
                mx = resid;
                if (lad.kind == Ladder::Kind::lower) at = s;
            }
        }
    }
    if (worst_s) *worst_s = at;
    return {mn, mx};
}

} // namespace detail

inline LadderReport check_ladder(const Ladder& lad, const PeriodicMedium& medium, double s_hi,
                                 double h, bool throw_on_violation = true) {
    LadderReport rep;
    rep.sigma0 = lad.sigma0;
    for (int n = 1; n <= lad.n_max; ++n) {
        RungCertificate cert;
        cert.n = n;
        cert.s_lo = lad.sigma_n(n - 1);
        cert.s_hi = std::max(s_hi, cert.s_lo + 4.0);
        cert.theta = lad.theta[n];
        cert.theta_tilde = lad.kind == Ladder::Kind::upper ? lad.theta_tilde[n] : 0.0;
        cert.coeff_sum = lad.coeff_sum(n);
        double at_h = 0.0, at_2h = 0.0;
        const auto ex_h =
            detail::rung_residual_extrema(lad, n, medium, cert.s_lo, cert.s_hi, h, &at_h);
        const auto ex_2h =
            detail::rung_residual_extrema(lad, n, medium, cert.s_lo, cert.s_hi, 2.0 * h, &at_2h);
        cert.min_residual = ex_h.first;
        cert.max_residual = ex_h.second;
        const double diff = lad.kind == Ladder::Kind::upper
                                ? std::abs(ex_h.first - ex_2h.first)
                                : std::abs(ex_h.second - ex_2h.second);
        cert.eps_grid = 2.0 * (4.0 / 3.0) * diff + 1e-14;
        cert.worst_s = at_h;
        if (throw_on_violation) {
            if (lad.kind == Ladder::Kind::upper && cert.min_residual < -cert.eps_grid)
                throw SignViolation("upper rung " + std::to_string(n) + " residual " +
                                    std::to_string(cert.min_residual) + " at s=" +
                                    std::to_string(cert.worst_s));
            if (lad.kind == Ladder::Kind::lower && cert.max_residual > cert.eps_grid)
                throw SignViolation("lower rung " + std::to_string(n) + " residual " +
                                    std::to_string(cert.max_residual) + " at s=" +
                                    std::to_string(cert.worst_s));
        }
        rep.rungs.push_back(cert);
    }
    // Rung ordering on [sigma0, sigma_n].
    rep.monotone_worst = 0.0;
    const double L = medium.period();
    const int cols = medium.constant_coefficients() ? 1 : 16;
    for (int n = 1; n < lad.n_max; ++n) {
        const double a = lad.sigma0, b = lad.sigma_n(n);
        const int ns = 512;
        for (int i = 0; i <= ns; ++i) {
            const double s = a + (b - a) * i / ns;
            for (int m = 0; m < cols; ++m) {
                const double x = L * m / cols;
                const double gap = lad.kind == Ladder::Kind::upper
                                       ? lad.value(n + 1, s, x) - lad.value(n, s, x)
                                       : lad.value(n, s, x) - lad.value(n + 1, s, x);
                rep.monotone_worst = std::min(rep.monotone_worst, gap);
            }
        }
    }
    rep.monotone = rep.monotone_worst >= -1e-15;
    return rep;
}

/// Existence of finite shifts putting the profile tail under B_bar e^{-l+ s}
/// phi+ and above B_low e^{-l+ s} phi+.
struct SandwichReport {
    double tau_upper = 0.0;  // phi(s + tau) <= B_bar e^{-l+ s} phi+
    double eta_lower = 0.0;  // phi(s - eta) >= B_low e^{-l+ s} phi+
    double margin_upper = -1.0;
    double margin_lower = -1.0;
    double s_lo = 0.0, s_hi = 0.0;
};

inline SandwichReport check_sandwich(const FrontProfile& p, const Ladder& upper,
                                     const Ladder& lower) {
    SandwichReport rep;
    const double lp = upper.spec.lambda_star_plus;
    const double Bbar = upper.B_bar();
    const double Blow = lower.B_lower();
    const double sigma0 = std::max(upper.sigma0, lower.sigma0);
    rep.s_lo = sigma0;

    // Any large enough shift works (the tail decays at exactly lambda*+), so
    // the informative certificate is the smallest shift on the scan grid for
    // which the bound holds on the whole tabulated tail.
    auto scan = [&](bool upper_side) {
        for (double shift = -40.0; shift <= 40.0; shift += 0.25) {
            double margin = std::numeric_limits<double>::infinity();
            int used = 0;
            for (int i = 0; i < p.ns; ++i) {
                const double s_tab = p.s_at(i);
                const double s = upper_side ? s_tab - shift : s_tab + shift;
                if (s < sigma0) continue;
                for (int m = 0; m < p.cols; ++m) {
                    const double x = p.x_col(m);
                    const double bound =
                        (upper_side ? Bbar : Blow) * std::exp(-lp * s) *
                        (upper_side ? upper.eig_plus(x) : lower.eig_plus(x));
                    const double val = p.value(i, m);
                    if (val <= 0.0 || bound <= 0.0) continue;
                    const double g = upper_side ? (bound - val) / bound : (val - bound) / bound;
                    margin = std::min(margin, g);
                    ++used;
                }
            }
            if (used < 32) continue;
            if (margin > 0.0) return std::make_pair(shift, margin);
        }
        return std::make_pair(0.0, -1.0);
    };

    auto [tau, mup] = scan(true);
    rep.tau_upper = tau;
    rep.margin_upper = mup;
    auto [eta, mlo] = scan(false);
    rep.eta_lower = eta;
    rep.margin_lower = mlo;
    rep.s_hi = p.s_at(p.ns - 1);
    if (!(rep.margin_upper > 0.0) || !(rep.margin_lower > 0.0))
        throw SandwichFailure("no finite shift bounds the tail (upper margin " +
                              std::to_string(rep.margin_upper) + ", lower margin " +
                              std::to_string(rep.margin_lower) + ")");
    return rep;
}

// ---------------------------------------------------------------------------
// Stability envelopes: the drifting sub/supersolution pair
//   ulow(t,x) = max{ phi(s_low, x) - rho g(s_low + s0, x) e^{-eta t}, 0 },
//   uup(t,x)  = min{ phi(s_up, x) + rho g(s_up, x) e^{-eta t}, 1 },
// with s_low = x - c t + omega rho (1 - e^{-eta t}) + sigma0 and s_up its
// mirror image.
// ---------------------------------------------------------------------------

struct StabilityEnvelope {
    double lambda = 0.0; // rate in (lambda*, min{r_datum, lambda*+})
    double eta = 0.0;    // (k(lambda) + c* lambda) / 2
    double rho = 0.0;
    double omega = 0.0;
    double eps0 = 0.0; // rho * min psi1
    double s_star = 0.0, s0 = 0.0, s1 = 0.0, s2 = 0.0;
    double k_floor = 0.0;
    double M_bound = 0.0;
    double gamma3 = 0.0; // eta-Lipschitz band of f_u near the two states
    double norm_g = 0.0, norm_B = 0.0, norm_C = 0.0;
    double c = 0.0;
    double L = 1.0;
    DispersionSample eig_lambda;
    std::vector<double> psi1, dpsi1, deig;
    FrontProfile profile;

    // Quintic smoothstep between s*-1 and s*.
    double chi(double s) const {
        const double t = s - (s_star - 1.0);
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    }
    double chi_p(double s) const {
        const double t = s - (s_star - 1.0);
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return 30.0 * t * t * (1.0 + t * (-2.0 + t));
    }
    double chi_pp(double s) const {
        const double t = s - (s_star - 1.0);
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return 60.0 * t + t * t * (-180.0 + 120.0 * t);
    }

    double phi_lambda(double x) const { return periodic_cubic_eval(eig_lambda.phi, L, x); }
    double phi_lambda_p(double x) const { return periodic_cubic_eval(deig, L, x); }
    double psi1_at(double x) const { return periodic_cubic_eval(psi1, L, x); }
    double psi1_p(double x) const { return periodic_cubic_eval(dpsi1, L, x); }

    double g(double s, double x) const {
        const double h = chi(s);
        return phi_lambda(x) * std::exp(-lambda * s) * h + psi1_at(x) * (1.0 - h);
    }

    double B_fun(double s, double x, const PeriodicMedium& med, double mu1) const {
        const double e_ls = std::exp(-lambda * s);
        const double pl = phi_lambda(x), p1 = psi1_at(x);
        const double h = chi(s), hp = chi_p(s), hpp = chi_pp(s);
        const double a = med.diffusivity(x), ap = med.diffusivity_derivative(x);
        const double q = med.advection();
        double val = (med.df_du(x, 0.0) + eta) * pl * e_ls * h +
                     (med.df_du(x, 1.0) + mu1 - eta) * p1 * (1.0 - h);
        val += ((pl * e_ls - p1) * (c + q - ap) +
                2.0 * a * (-lambda * pl * e_ls - e_ls * phi_lambda_p(x) + psi1_p(x))) *
               hp;
        val -= (pl * e_ls - p1) * a * hpp;
        return val;
    }

    double C_fun(double s, double x) const {
        const double e_ls = std::exp(-lambda * s);
        return -lambda * phi_lambda(x) * e_ls * chi(s) +
               (phi_lambda(x) * e_ls - psi1_at(x)) * chi_p(s);
    }

    double s_low(double t, double x, double sigma0) const {
        return x - c * t + omega * rho * (1.0 - std::exp(-eta * t)) + sigma0;
    }
    double s_up(double t, double x, double sigma0) const {
        return x - c * t - omega * rho * (1.0 - std::exp(-eta * t)) - sigma0;
    }
    double lower(double t, double x, double sigma0) const {
        const double s = s_low(t, x, sigma0);
        const double v = profile.phi_at(s, x) - rho * g(s + s0, x) * std::exp(-eta * t);
        return std::max(v, 0.0);
    }
    double upper(double t, double x, double sigma0) const {
        const double s = s_up(t, x, sigma0);
        const double v = profile.phi_at(s, x) + rho * g(s, x) * std::exp(-eta * t);
        return std::min(v, 1.0);
    }
};

/// Assemble every constant of the drifting envelope from the relaxed profile
/// and the spectral data. r_datum is the decay rate of the initial data
/// (the admissible lambda must stay below it).
inline StabilityEnvelope build_stability_envelope(const FrontProfile& profile,
                                                  const PeriodicMedium& medium,
                                                  const SpectralBundle& spec, double r_datum,
                                                  int n_eig = 256) {
    StabilityEnvelope env;
    env.c = profile.c;
    env.L = medium.period();
    env.profile = profile;
    const double mu1 = spec.stab.mu1;

    // Admissible rate: lambda* < lambda < min{r_datum, lambda*+, r} with
    // 0 < k(lambda) + c* lambda < mu1. Pick the median feasible sample.
    const double lo = spec.lambda_star;
    const double hi = std::min({r_datum, spec.lambda_star_plus, spec.r});
    if (!(hi > lo)) throw NoAdmissibleLambda("empty rate interval");
    std::vector<double> feasible;
    for (int j = 1; j < 64; ++j) {
        const double lam = lo + (hi - lo) * j / 64.0;
        const double gap = k_of_lambda(medium, n_eig, lam).k + spec.c_star * lam;
        if (gap > 1e-10 && gap < mu1 - 1e-10) feasible.push_back(lam);
    }
    if (feasible.empty())
        throw NoAdmissibleLambda("no rate in (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                 ") has 0 < k(lambda) + c* lambda < mu1");
    env.lambda = feasible[feasible.size() / 2];
    env.eig_lambda = k_of_lambda(medium, n_eig, env.lambda);
    env.eta = 0.5 * (env.eig_lambda.k + spec.c_star * env.lambda);

    env.psi1 = spec.stab.psi1;
    const int np = static_cast<int>(env.psi1.size());
    env.dpsi1.resize(np);
    env.deig.resize(static_cast<int>(env.eig_lambda.phi.size()));
    const double hh = env.L / np;
    for (int i = 0; i < np; ++i)
        env.dpsi1[i] = (env.psi1[wrap_index(i + 1, np)] - env.psi1[wrap_index(i - 1, np)]) /
                       (2.0 * hh);
    const int ne = static_cast<int>(env.eig_lambda.phi.size());
    const double he = env.L / ne;
    for (int i = 0; i < ne; ++i)
        env.deig[i] = (env.eig_lambda.phi[wrap_index(i + 1, ne)] -
                       env.eig_lambda.phi[wrap_index(i - 1, ne)]) /
                      (2.0 * he);

    // Lipschitz band of f_u near both states at level eta.
    const double gmax = 0.45;
    auto band_ok = [&](double gamma) {
        const int nx = 64, nu = 64;
        for (int i = 0; i < nx; ++i) {
            const double x = env.L * i / nx;
            const double f1 = medium.df_du(x, 1.0), f0 = medium.df_du(x, 0.0);
            for (int j = 0; j <= nu; ++j) {
                const double u1 = 1.0 - gamma * j / nu;
                if (std::abs(f1 - medium.df_du(x, u1)) > env.eta) return false;
                const double u0 = gamma * j / nu;
                if (std::abs(f0 - medium.df_du(x, u0)) > env.eta) return false;
            }
        }
        return true;
    };
    double glo = 0.0, ghi = gmax;
    if (!band_ok(ghi)) {
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (glo + ghi);
            if (band_ok(mid)) glo = mid;
            else ghi = mid;
        }
        env.gamma3 = glo;
    } else {
        env.gamma3 = gmax;
    }
    if (env.gamma3 <= 0.0) throw ConditionUnsatisfiable("eta-Lipschitz band of f_u is empty");

    double min_psi1 = min_of(env.psi1);
    env.s_star = 1.0 - std::log(min_psi1) / env.lambda;

    // s0 <= 0 with phi(s,x) - eps g(s+s0,x) <= 1 - eps psi1/2 for eps in [0,1].
    auto s0_ok = [&](double s0) {
        for (int i = 0; i < profile.ns; i += 2)
            for (int m = 0; m < profile.cols; ++m) {
                const double s = profile.s_at(i), x = profile.x_col(m);
                const double gg = env.g(s + s0, x);
                const double p1 = env.psi1_at(x);
                if (gg < 0.5 * p1 && profile.value(i, m) - 1.0 > gg - 0.5 * p1) return false;
            }
        return true;
    };
    env.s0 = 0.0;
    while (!s0_ok(env.s0)) {
        env.s0 -= 0.25;
        if (env.s0 < -60.0) throw ConditionUnsatisfiable("no admissible s0 above -60");
    }

    // s2: beyond it the profile is small, steep, and g is purely exponential.
    const double s2_min = std::max(env.s_star, env.s_star - env.s0);
    int i2 = -1;
    for (int i = profile.ns - 1; i >= 0; --i) {
        bool ok = true;
        for (int m = 0; m < profile.cols && ok; ++m) {
            const double v = profile.value(i, m);
            if (v > 0.5 * env.gamma3 || profile.slope(i, m) > -env.lambda * v) ok = false;
        }
        if (!ok) {
            i2 = i + 1;
            break;
        }
        i2 = i;
    }
    if (i2 < 0 || i2 >= profile.ns) throw ConditionUnsatisfiable("no admissible s2 in the window");
    env.s2 = std::max(profile.s_at(i2), s2_min);

    // s1: behind it the profile is within gamma/2 of 1 and g is psi1.
    int i1 = -1;
    for (int i = 0; i < profile.ns; ++i) {
        bool ok = true;
        for (int m = 0; m < profile.cols && ok; ++m)
            if (profile.value(i, m) < 1.0 - 0.5 * env.gamma3) ok = false;
        if (!ok) break;
        i1 = i;
    }
    if (i1 < 0) throw ConditionUnsatisfiable("no admissible s1 in the window");
    env.s1 = std::min(profile.s_at(i1), env.s_star - 1.0);

    // Floor of the front steepness between s1 and s2.
    env.k_floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < profile.ns; ++i) {
        const double s = profile.s_at(i);
        if (s < env.s1 || s > env.s2) continue;
        for (int m = 0; m < profile.cols; ++m)
            env.k_floor = std::min(env.k_floor, -profile.slope(i, m));
    }
    if (!(env.k_floor > 0.0))
        throw ConditionUnsatisfiable("front slope floor is not positive on [s1, s2]");

    env.M_bound = medium.max_abs_df_du();
    env.norm_g = env.norm_B = env.norm_C = 0.0;
    const double pad = 5.0;
    const int nsamp = 2048;
    for (int i = 0; i <= nsamp; ++i) {
        const double s = (env.s1 - pad) + (env.s2 + pad - (env.s1 - pad)) * i / nsamp;
        for (int m = 0; m < std::max(profile.cols, 8); ++m) {
            const double x = env.L * m / std::max(profile.cols, 8);
            env.norm_g = std::max(env.norm_g, std::abs(env.g(s, x)));
            env.norm_B = std::max(env.norm_B, std::abs(env.B_fun(s, x, medium, mu1)));
            env.norm_C = std::max(env.norm_C, std::abs(env.C_fun(s, x)));
        }
    }
    env.rho = std::min({env.k_floor / (2.0 * env.norm_C), 0.5 * env.gamma3, 1.0});
    env.omega = 2.0 * (env.M_bound * env.norm_g + env.norm_B) / (env.k_floor * env.eta);
    env.eps0 = env.rho * min_psi1;
    return env;
}

struct ShiftReport {
    double tau_hat = 0.0; // time shift of the limiting front
    std::vector<double> times;
    std::vector<double> tau_history;
    std::vector<double> residual_history; // sup distance to the best shift
    bool converged = false;
};

struct EnvelopeReport {
    double sigma0 = 0.0;
    double min_margin_lower = 0.0; // min over stored times of u - ulow
    double min_margin_upper = 0.0; // min over stored times of uup - u
    double first_breach_t = -1.0;
    std::vector<double> times, widths; // envelope width at the front position
};

/// Check the trapped evolution against a trajectory and fit the time shift.
/// eps_grid is the tolerance granted to the discrete solution.
inline std::pair<EnvelopeReport, ShiftReport> check_envelope(
    const StabilityEnvelope& env, const Trajectory& traj, double grid_h, double eps_grid,
    double tau_drift_tol = 0.02) {
    if (traj.size() < 3) throw ConfigError("check_envelope needs a stored trajectory");
    EnvelopeReport erep;
    ShiftReport srep;

    // sigma0 scan at t = 0.
    const auto& s0snap = traj.front();
    const int n = static_cast<int>(s0snap.u.size());
    double sigma0 = 0.0;
    bool found = false;
    for (double cand = 0.25; cand <= 512.0; cand *= 2.0) {
        bool ok = true;
        for (int i = 2; i + 2 < n && ok; ++i) {
            const double x = s0snap.x_offset + grid_h * i;
            const double lo = env.lower(s0snap.t, x, cand);
            const double up = env.upper(s0snap.t, x, cand);
            if (lo > s0snap.u[i] + 1e-12 || up < s0snap.u[i] - 1e-12) ok = false;
        }
        if (ok) {
            sigma0 = cand;
            found = true;
            break;
        }
    }
    if (!found) throw ConditionUnsatisfiable("no sigma0 <= 512 sandwiches the initial datum");
    erep.sigma0 = sigma0;

    erep.min_margin_lower = std::numeric_limits<double>::infinity();
    erep.min_margin_upper = std::numeric_limits<double>::infinity();
    for (const auto& snap : traj) {
        double wm = 0.0;
        bool have_front = true;
        double xf = 0.0;
        FrontState fs;
        fs.t = snap.t;
        fs.x_offset = snap.x_offset;
        fs.h = grid_h;
        fs.u = snap.u;
        try {
            xf = front_position(fs);
        } catch (const Error&) {
            have_front = false;
        }
        const int nn = static_cast<int>(snap.u.size());
        for (int i = 2; i + 2 < nn; ++i) {
            const double x = snap.x_offset + grid_h * i;
            const double lo = env.lower(snap.t, x, sigma0);
            const double up = env.upper(snap.t, x, sigma0);
            erep.min_margin_lower = std::min(erep.min_margin_lower, snap.u[i] - lo);
            erep.min_margin_upper = std::min(erep.min_margin_upper, up - snap.u[i]);
            if ((snap.u[i] - lo < -eps_grid || up - snap.u[i] < -eps_grid) &&
                erep.first_breach_t < 0.0)
                erep.first_breach_t = snap.t;
        }
        if (have_front) {
            wm = env.upper(snap.t, xf, sigma0) - env.lower(snap.t, xf, sigma0);
            erep.times.push_back(snap.t);
            erep.widths.push_back(wm);
        }
    }
    if (erep.first_breach_t >= 0.0)
        throw SandwichBreach("envelope breached at t=" + std::to_string(erep.first_breach_t));

    // Time-shift fit on the stored tail of the trajectory: u(t, x) is matched
    // against phi(x - c t - shift) with the scan centred on the observed
    // crossing offset.
    auto distance = [&](const Snapshot& snap, double shift) {
        double d = 0.0;
        const int nn = static_cast<int>(snap.u.size());
        for (int i = 5; i + 5 < nn; ++i) {
            const double x = snap.x_offset + grid_h * i;
            const double model = env.profile.phi_at(x - env.c * snap.t - shift, x);
            d = std::max(d, std::abs(snap.u[i] - model));
        }
        return d;
    };
    for (const auto& snap : traj) {
        if (snap.t < traj.back().t / 4.0 || snap.t <= 0.0) continue;
        FrontState fs;
        fs.t = snap.t;
        fs.x_offset = snap.x_offset;
        fs.h = grid_h;
        fs.u = snap.u;
        double center;
        try {
            center = front_position(fs) - env.c * snap.t;
        } catch (const Error&) {
            continue;
        }
        double best_shift = center, best_d = std::numeric_limits<double>::infinity();
        for (double sh = center - 2.0; sh <= center + 2.0; sh += 0.1) {
            const double d = distance(snap, sh);
            if (d < best_d) {
                best_d = d;
                best_shift = sh;
            }
        }
        const double refined = golden_minimize([&](double sh) { return distance(snap, sh); },
                                               best_shift - 0.15, best_shift + 0.15, 1e-7);
        srep.times.push_back(snap.t);
        srep.tau_history.push_back(refined / env.c); // u(t) ~ U(t + shift/c)
        srep.residual_history.push_back(distance(snap, refined));
    }
    if (srep.times.size() < 2) throw NoShiftConvergence("too few stored times for the shift fit");
    srep.tau_hat = srep.tau_history.back();
    // Compare the last two dyadic times.
    const double t_final = srep.times.back();
    double tau_half = srep.tau_history.front();
    for (std::size_t i = 0; i < srep.times.size(); ++i)
        if (srep.times[i] <= 0.5 * t_final) tau_half = srep.tau_history[i];
    const double denom = std::max(std::abs(srep.tau_hat), 1.0);
    srep.converged = std::abs(srep.tau_hat - tau_half) / denom <= tau_drift_tol;
    if (!srep.converged)
        throw NoShiftConvergence("tau drifted from " + std::to_string(tau_half) + " to " +
                                 std::to_string(srep.tau_hat));
    return {erep, srep};
}

struct UniquenessReport {
    double shift_hat = 0.0;      // s-shift aligning profile 2 onto profile 1
    double aligned_distance = 0.0;
    double c1 = 0.0, c2 = 0.0;
};

/// Relax two admissible data and compare the aligned profiles.
inline UniquenessReport uniqueness_probe(const FrontProfile& p1, const FrontProfile& p2,
                                         double tol = 1e-3) {
    auto distance = [&](double shift) {
        double d = 0.0;
        int used = 0;
        for (int i = 0; i < p1.ns; ++i) {
            const double s = p1.s_at(i);
            const double s2 = s + shift;
            if (s2 < p2.s0 + 2.0 * p2.ds || s2 > p2.s_at(p2.ns - 1) - 2.0 * p2.ds) continue;
            for (int m = 0; m < p1.cols; ++m) {
                const double x = p1.x_col(m);
                d = std::max(d, std::abs(p1.value(i, m) - p2.phi_at(s2, x)));
                ++used;
            }
        }
        return used > 64 ? d : std::numeric_limits<double>::infinity();
    };
    double best = 0.0, best_d = std::numeric_limits<double>::infinity();
    for (double sh = -10.0; sh <= 10.0; sh += 0.1) {
        const double d = distance(sh);
        if (d < best_d) {
            best_d = d;
            best = sh;
        }
    }
    const double refined =
        golden_minimize(distance, best - 0.15, best + 0.15, 1e-8);
    UniquenessReport rep;
    rep.shift_hat = refined;
    rep.aligned_distance = distance(refined);
    rep.c1 = p1.c;
    rep.c2 = p2.c;
    if (rep.aligned_distance > 5.0 * tol)
        throw ProfileMismatch("aligned profiles differ by " +
                              std::to_string(rep.aligned_distance));
    return rep;
}

} // namespace pulsefront
