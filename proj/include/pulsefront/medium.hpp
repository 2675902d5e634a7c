#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/numerics.hpp"

namespace pulsefront {

enum class ReactionFamily { kpp_logistic, hadeler_rothe, periodic_hadeler_rothe, custom };

inline std::string to_string(ReactionFamily f) {
    switch (f) {
        case ReactionFamily::kpp_logistic: return "kpp_logistic";
        case ReactionFamily::hadeler_rothe: return "hadeler_rothe";
        case ReactionFamily::periodic_hadeler_rothe: return "periodic_hadeler_rothe";
        case ReactionFamily::custom: return "custom";
    }
    return "?";
}

inline ReactionFamily family_from_string(const std::string& s) {
    if (s == "kpp_logistic") return ReactionFamily::kpp_logistic;
    if (s == "hadeler_rothe") return ReactionFamily::hadeler_rothe;
    if (s == "periodic_hadeler_rothe") return ReactionFamily::periodic_hadeler_rothe;
    if (s == "custom") return ReactionFamily::custom;
    throw ConfigError("unknown reaction family '" + s + "'");
}

/// Everything needed to instantiate a periodic medium. All reactions are of
/// the form f(x,u) = u(1-u)(1 + g(x) u) with g(x) = g0 + g1 cos(2 pi x / L);
/// the named families fix g. Diffusivity a(x) = diff0 + diff1 cos(2 pi x / L),
/// advection q is a scalar constant (divergence-free in one dimension forces
/// it to be).
struct MediumSpec {
    ReactionFamily family = ReactionFamily::kpp_logistic;
    double a_hr = 4.0;   // hadeler_rothe coupling
    double g0 = 0.0;     // periodic_hadeler_rothe / custom
    double g1 = 0.0;
    double rate0 = 1.0;  // overall reaction scale; equals f_u(x, 0)
    double diff0 = 1.0;
    double diff1 = 0.0;
    double q = 0.0;
    double L = 1.0;
    int resolution = 64; // coefficient samples per period
};

/// Holder-type control of the nonlinear correction near the unstable state:
/// |f(x,u) - f_u(x,0) u| <= delta * u^(1+alpha) for u in [0, gamma].
struct HolderData {
    double alpha = 1.0;
    double delta = 0.0;
    double gamma = 0.5;
};

/// Immutable periodic medium. Safe to share across threads.
class PeriodicMedium {
public:
    PeriodicMedium(const MediumSpec& spec)
        : spec_(spec), L_(spec.L), q_(spec.q) {
        if (spec.resolution < 16) throw ConfigError("medium resolution must be >= 16");
        if (spec.L <= 0.0) throw ConfigError("medium period must be positive");
        rate0_ = spec.rate0;
        switch (spec.family) {
            case ReactionFamily::kpp_logistic: g0_ = 0.0; g1_ = 0.0; break;
            case ReactionFamily::hadeler_rothe: g0_ = spec.a_hr; g1_ = 0.0; break;
            case ReactionFamily::periodic_hadeler_rothe: g0_ = spec.g0; g1_ = spec.g1; break;
            case ReactionFamily::custom: g0_ = spec.g0; g1_ = spec.g1; break;
        }
        const int n = spec.resolution;
        std::vector<double> a_samples(n);
        for (int i = 0; i < n; ++i) {
            const double x = L_ * static_cast<double>(i) / n;
            a_samples[i] = spec.diff0 + spec.diff1 * std::cos(2.0 * M_PI * x / L_);
        }
        a_interp_ = TrigInterpolant(a_samples, L_);
        c1_ = a_samples[0];
        c2_ = a_samples[0];
        for (double v : a_samples) {
            c1_ = std::min(c1_, v);
            c2_ = std::max(c2_, v);
        }
        if (c1_ <= 0.0)
            throw EllipticityViolation("min diffusivity " + std::to_string(c1_) + " <= 0");
        for (int i = 0; i <= n; ++i) {
            const double x = L_ * static_cast<double>(i) / n;
            if (std::abs(f(x, 0.0)) > 1e-12 || std::abs(f(x, 1.0)) > 1e-12)
                throw ZeroMismatch("f(x,0) or f(x,1) nonzero at x=" + std::to_string(x));
        }
    }

    double period() const { return L_; }
    double advection() const { return q_; }
    double ellipticity_lower() const { return c1_; }
    double ellipticity_upper() const { return c2_; }
    const MediumSpec& spec() const { return spec_; }

    /// True when no coefficient depends on x; front profiles then have no
    /// cell structure.
    bool constant_coefficients() const { return g1_ == 0.0 && spec_.diff1 == 0.0; }

    double diffusivity(double x) const { return a_interp_(x); }
    double diffusivity_derivative(double x) const { return a_interp_.derivative(x); }

    double reaction_coupling(double x) const {
        return g0_ + g1_ * std::cos(2.0 * M_PI * x / L_);
    }

    double f(double x, double u) const {
        return rate0_ * u * (1.0 - u) * (1.0 + reaction_coupling(x) * u);
    }

    double df_du(double x, double u) const {
        const double g = reaction_coupling(x);
        return rate0_ * (1.0 + 2.0 * (g - 1.0) * u - 3.0 * g * u * u);
    }

    /// max_x |f_u(x, u)| over u in [0,1]; appears in the stability constants.
    double max_abs_df_du() const {
        double m = 0.0;
        const int nx = spec_.resolution, nu = 257;
        for (int i = 0; i < nx; ++i) {
            const double x = L_ * static_cast<double>(i) / nx;
            for (int j = 0; j < nu; ++j) {
                const double u = static_cast<double>(j) / (nu - 1);
                m = std::max(m, std::abs(df_du(x, u)));
            }
        }
        return m;
    }

private:
    MediumSpec spec_;
    double L_, q_;
    double g0_ = 0.0, g1_ = 0.0, rate0_ = 1.0;
    double c1_ = 0.0, c2_ = 0.0;
    TrigInterpolant a_interp_;
};

inline PeriodicMedium make_medium(const MediumSpec& spec) { return PeriodicMedium(spec); }

/// Brute-force certification of the Holder constants on a validation grid.
/// delta is the smallest grid-certified constant times a 1.1 safety factor.
/// gamma defaults to 1 for KPP, 0.5 otherwise (the certificate only needs to
/// cover the value band used by the tail fits and ladders).
inline HolderData holder_constants(const PeriodicMedium& medium, int nx = 64, int nu = 512,
                                   double gamma = -1.0) {
    if (gamma <= 0.0)
        gamma = (medium.spec().family == ReactionFamily::kpp_logistic) ? 1.0 : 0.5;
    const double L = medium.period();
    for (int i = 0; i < nx; ++i) {
        const double x = L * static_cast<double>(i) / nx;
        if (medium.df_du(x, 0.0) <= 0.0)
            throw NotMonostable("f_u(x,0) <= 0 at x=" + std::to_string(x));
    }
    const double alpha = 1.0; // reactions are polynomial in u
    double worst = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = L * static_cast<double>(i) / nx;
        const double fu0 = medium.df_du(x, 0.0);
        for (int j = 1; j <= nu; ++j) {
            const double u = gamma * static_cast<double>(j) / nu;
            const double err = std::abs(medium.f(x, u) - fu0 * u);
            worst = std::max(worst, err / std::pow(u, 1.0 + alpha));
        }
    }
    HolderData out;
    out.alpha = alpha;
    out.delta = 1.1 * worst;
    out.gamma = gamma;
    return out;
}

} // namespace pulsefront
