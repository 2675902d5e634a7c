#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/numerics.hpp"
#include "pulsefront/profile.hpp"
#include "pulsefront/spectral.hpp"

namespace pulsefront {

struct LogSlope {
    std::vector<double> s;
    std::vector<double> lambda; // -d(log phibar)/ds
};

/// Sampled decay rate of the cell-averaged tail.
inline LogSlope log_slope(const FrontProfile& p, double floor = 1e-14, double ceil = 0.5) {
    LogSlope out;
    for (int i = 1; i + 1 < p.ns; ++i) {
        const double v = p.cell_mean(i);
        const double vm = p.cell_mean(i - 1), vp = p.cell_mean(i + 1);
        if (v < floor || v > ceil || vm <= floor || vp <= floor) continue;
        out.s.push_back(p.s_at(i));
        out.lambda.push_back(-(std::log(vp) - std::log(vm)) / (2.0 * p.ds));
    }
    if (out.s.size() < 3)
        throw TailUnderflow("tail below " + std::to_string(floor) + " dominates the window");
    return out;
}

struct DecayFit {
    double lambda_hat = 0.0; // free-slope fit on the winning candidate
    double B_hat = 0.0;
    double s_lo = 0.0, s_hi = 0.0; // fit window (phi in the value band)
    double modulation_cv = 0.0;    // cv of phi / (B e^{-lambda_hat s} phi_eig)
    int eig_used = -1;             // index into the candidate list
    double winner_rate = 0.0;      // candidate rate of the winner
    std::vector<double> candidate_rates;
    std::vector<double> candidate_cv; // fixed-rate modulation cv per candidate
};

namespace detail {

inline double eigen_at(const DispersionSample& eig, double L, double x) {
    return periodic_cubic_eval(eig.phi, L, x);
}

struct BandStats {
    double cv = 0.0;
    double logB = 0.0;
};

/// Fixed-rate fit: only the amplitude is free; the cv measures how far the
/// tail is from B e^{-lambda s} phi_eig.
inline BandStats fixed_rate_stats(const FrontProfile& p, int ia, int ib,
                                  const DispersionSample& eig, double lambda) {
    std::vector<double> z;
    z.reserve(static_cast<std::size_t>(ib - ia + 1) * p.cols);
    for (int i = ia; i <= ib; ++i)
        for (int m = 0; m < p.cols; ++m) {
            const double v = p.value(i, m);
            if (v <= 0.0) throw TailUnderflow("nonpositive profile value in the fit band");
            const double w = v / eigen_at(eig, p.L, p.x_col(m));
            z.push_back(std::log(w) + lambda * p.s_at(i));
        }
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= z.size();
    double var = 0.0, rmean = 0.0;
    std::vector<double> R(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        R[j] = std::exp(z[j] - mean);
        rmean += R[j];
    }
    rmean /= R.size();
    for (double v : R) var += (v - rmean) * (v - rmean);
    BandStats st;
    st.cv = std::sqrt(var / R.size()) / rmean;
    st.logB = mean;
    return st;
}

} // namespace detail

/// Fit the tail against every candidate root of k(lambda) + c lambda = 0.
/// Candidate selection goes by modulation flatness after dividing out the
/// candidate's periodic eigenfunction; the winning candidate then gets a
/// free-slope refit that produces lambda_hat and B_hat.
inline DecayFit fit_tail(const FrontProfile& p, const std::vector<DispersionSample>& candidates,
                         double band_lo = 1e-8, double band_hi = 1e-3, double cv_max = 0.25) {
    if (candidates.empty()) throw ConfigError("fit_tail needs at least one candidate root");
    auto [ia, ib] = p.band_rows(band_lo, band_hi);
    if (ia < 0 || ib - ia < 7) throw TailUnderflow("value band has too few profile rows");
    const double per_decay = 1.0 / (candidates.back().lambda * p.ds);
    if (per_decay < 8.0) throw ProfileTooCoarse("fewer than 8 rows per decay length in the band");

    DecayFit fit;
    fit.s_lo = p.s_at(ia);
    fit.s_hi = p.s_at(ib);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto st = detail::fixed_rate_stats(p, ia, ib, candidates[c], candidates[c].lambda);
        fit.candidate_rates.push_back(candidates[c].lambda);
        fit.candidate_cv.push_back(st.cv);
        if (st.cv < best) {
            best = st.cv;
            fit.eig_used = static_cast<int>(c);
        }
    }
    if (best > cv_max)
        throw NoPlateau("best modulation cv " + std::to_string(best) +
                        " exceeds " + std::to_string(cv_max) + "; tail not asymptotic yet");

    const auto& win = candidates[static_cast<std::size_t>(fit.eig_used)];
    fit.winner_rate = win.lambda;
    std::vector<double> ss, zz;
    for (int i = ia; i <= ib; ++i)
        for (int m = 0; m < p.cols; ++m) {
            const double w = p.value(i, m) / detail::eigen_at(win, p.L, p.x_col(m));
            ss.push_back(p.s_at(i));
            zz.push_back(std::log(w));
        }
    const auto line = fit_line(ss, zz);
    fit.lambda_hat = -line.slope;
    fit.B_hat = std::exp(line.intercept);
    fit.modulation_cv = detail::fixed_rate_stats(p, ia, ib, win, fit.lambda_hat).cv;
    return fit;
}

struct Classification {
    enum class Verdict { pushed, pulled, ambiguous };
    Verdict verdict = Verdict::ambiguous;
    double c_star = 0.0;
    double c0 = 0.0;
    double margin = 0.0;              // (c* - c0) / c0
    std::string decay_matches = "n/a"; // larger | smaller | none | n/a
    std::string notes;
};

inline std::string to_string(Classification::Verdict v) {
    switch (v) {
        case Classification::Verdict::pushed: return "pushed";
        case Classification::Verdict::pulled: return "pulled";
        case Classification::Verdict::ambiguous: return "ambiguous";
    }
    return "?";
}

/// Speed margin decides pulled vs pushed; a pushed verdict additionally
/// requires the fitted rate to sit on the larger dispersion root and clearly
/// away from the smaller one.
inline Classification classify(double c_star, double c0, const DecayFit* fit,
                               const RootSet& roots, double threshold = 0.005) {
    Classification out;
    out.c_star = c_star;
    out.c0 = c0;
    out.margin = (c_star - c0) / c0;

    if (fit != nullptr && roots.roots.size() == 2) {
        const double lo = roots.roots[0], hi = roots.roots[1];
        const double dev_hi = std::abs(fit->lambda_hat / hi - 1.0);
        const double dev_lo = std::abs(fit->lambda_hat / lo - 1.0);
        if (dev_hi <= 0.05 && dev_lo >= 0.25) out.decay_matches = "larger";
        else if (dev_lo <= 0.05) out.decay_matches = "smaller";
        else out.decay_matches = "none";
    }

    if (std::abs(out.margin) <= threshold) {
        out.verdict = Classification::Verdict::pulled;
        return out;
    }
    if (out.margin > threshold) {
        if (roots.tangent || roots.roots.size() < 2) {
            out.notes = "speed exceeds c0 but F_c is a (near-)singleton; rate assignment ambiguous";
            return out;
        }
        if (out.decay_matches == "larger") {
            out.verdict = Classification::Verdict::pushed;
            return out;
        }
        out.notes = "speed margin says pushed but the tail rate does not sit on the larger root";
        return out;
    }
    out.notes = "measured speed below c0 beyond the threshold; refine the run";
    return out;
}

/// Three-part signature of the pushed-front tail: flat amplitude ratio,
/// derivative rate plateau, and rejection of the slow-rate candidate.
struct TheoremReport {
    double ratio_spread = 0.0;     // sup/inf of phi/(B e^{-lambda_hat s} phi_eig) minus 1
    double slope_worst_dev = 0.0;  // worst relative deviation of -phi_s/phi from the target
    double exclusion_ratio = 0.0;  // cv(slow candidate) / cv(winner)
    double lambda_hat = 0.0;
    bool ratio_ok = false, slope_ok = false, exclusion_ok = false;
};

inline TheoremReport pushed_asymptotics_report(const FrontProfile& p, const DecayFit& fit,
                                               const std::vector<DispersionSample>& candidates,
                                               double ratio_tol = 0.02, double slope_tol = 0.02,
                                               double exclusion_factor = 5.0,
                                               double slope_target = 0.0) {
    TheoremReport rep;
    rep.lambda_hat = fit.lambda_hat;
    auto [ia, ib] = p.band_rows(1e-8, 1e-3);
    if (ia < 0) throw TailUnderflow("value band empty");
    const auto& win = candidates[static_cast<std::size_t>(fit.eig_used)];

    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int i = ia; i <= ib; ++i)
        for (int m = 0; m < p.cols; ++m) {
            const double model = fit.B_hat * std::exp(-fit.lambda_hat * p.s_at(i)) *
                                 detail::eigen_at(win, p.L, p.x_col(m));
            const double r = p.value(i, m) / model;
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
    rep.ratio_spread = rmax / rmin - 1.0;
    rep.ratio_ok = rep.ratio_spread <= ratio_tol;

    const double target = slope_target > 0.0 ? slope_target : fit.lambda_hat;
    rep.slope_worst_dev = 0.0;
    for (int i = ia; i <= ib; ++i) {
        const double ratio = -p.cell_mean_slope(i) / p.cell_mean(i);
        rep.slope_worst_dev = std::max(rep.slope_worst_dev, std::abs(ratio / target - 1.0));
    }
    rep.slope_ok = rep.slope_worst_dev <= slope_tol;

    // Slow-candidate rejection: smallest-rate candidate other than the winner.
    rep.exclusion_ratio = std::numeric_limits<double>::infinity();
    const double win_cv = std::max(fit.candidate_cv[static_cast<std::size_t>(fit.eig_used)],
                                   1e-300);
    for (std::size_t c = 0; c < candidates.size(); ++c)
        if (static_cast<int>(c) != fit.eig_used)
            rep.exclusion_ratio = std::min(rep.exclusion_ratio, fit.candidate_cv[c] / win_cv);
    rep.exclusion_ok = candidates.size() < 2 ? false : rep.exclusion_ratio >= exclusion_factor;
    return rep;
}

inline TheoremReport verify_pushed_asymptotics(const FrontProfile& p, const DecayFit& fit,
                                               const std::vector<DispersionSample>& candidates,
                                               double ratio_tol = 0.02, double slope_tol = 0.02,
                                               double exclusion_factor = 5.0,
                                               double slope_target = 0.0) {
    auto rep = pushed_asymptotics_report(p, fit, candidates, ratio_tol, slope_tol,
                                         exclusion_factor, slope_target);
    std::string bad;
    if (!rep.ratio_ok) bad += " ratio-flatness";
    if (!rep.slope_ok) bad += " derivative-rate";
    if (!rep.exclusion_ok) bad += " slow-rate-exclusion";
    if (!bad.empty()) throw VerificationFailed("checks failed:" + bad);
    return rep;
}

} // namespace pulsefront
