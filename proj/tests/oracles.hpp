#pragma once

// Closed-form reference solutions and standard test media shared by the unit
// and acceptance suites. The cubic reaction u(1-u)(1+a u) with a > 2 admits
// the explicit traveling wave
//   phi(s) = 1 / (1 + exp(beta s)),  beta = sqrt(a/2),  c = beta + 1/beta,
// which one verifies by substituting phi' = -beta phi (1 - phi) into
// -phi'' - c phi' = f(phi). Its tail rate beta equals the larger root of
// lambda^2 - c lambda + 1 = 0, the hallmark of a pushed front.

#include <cmath>

#include "pulsefront/frontsim.hpp"
#include "pulsefront/medium.hpp"
#include "pulsefront/profile.hpp"

namespace oracles {

using namespace pulsefront;

inline MediumSpec kpp_spec() {
    MediumSpec s;
    s.family = ReactionFamily::kpp_logistic;
    return s;
}

inline MediumSpec hr_spec(double a = 4.0) {
    MediumSpec s;
    s.family = ReactionFamily::hadeler_rothe;
    s.a_hr = a;
    return s;
}

inline MediumSpec phr_spec(double g0 = 4.0, double g1 = 2.0) {
    MediumSpec s;
    s.family = ReactionFamily::periodic_hadeler_rothe;
    s.g0 = g0;
    s.g1 = g1;
    return s;
}

struct HadelerRothe {
    double a = 4.0;
    double beta() const { return std::sqrt(a / 2.0); }
    double speed() const { return beta() + 1.0 / beta(); }
    double lambda_star() const { return 1.0 / beta(); }      // smaller dispersion root
    double lambda_star_plus() const { return beta(); }       // larger root = tail rate
    double phi(double s) const { return 1.0 / (1.0 + std::exp(beta() * s)); }
    double phi_s(double s) const {
        const double p = phi(s);
        return -beta() * p * (1.0 - p);
    }

    FrontProfile profile(double s_lo, double s_hi, double h) const {
        const int ns = static_cast<int>(std::round((s_hi - s_lo) / h)) + 1;
        return make_profile_from_function(
            speed(), s_lo, h, ns, 1, 1.0, [this](double s, double) { return phi(s); },
            [this](double s, double) { return phi_s(s); });
    }
};

} // namespace oracles
