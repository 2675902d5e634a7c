#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/medium.hpp"
#include "pulsefront/numerics.hpp"
#include "pulsefront/profile.hpp"

namespace pulsefront {

enum class Scheme { explicit_rk2, imex };
enum class BoundaryMode { clamp_states, zero_gradient };

inline std::string to_string(Scheme s) {
    return s == Scheme::explicit_rk2 ? "explicit" : "imex";
}
inline Scheme scheme_from_string(const std::string& s) {
    if (s == "explicit") return Scheme::explicit_rk2;
    if (s == "imex") return Scheme::imex;
    throw ConfigError("unknown scheme '" + s + "'");
}

/// Solution window in the lab frame. u is sampled at x_offset + i*h,
/// i = 0..n-1; the left edge is clamped to 1 and the right edge to 0.
struct FrontState {
    double t = 0.0;
    double x_offset = 0.0;
    double h = 0.0;
    std::vector<double> u;

    int n() const { return static_cast<int>(u.size()); }
    double x_at(int i) const { return x_offset + h * i; }
    double width() const { return h * (n() - 1); }
};

struct InitialDatum {
    enum class Kind { step, exp_tail } kind = Kind::step;
    double x0 = 0.0;        // transition location (lab frame)
    double rate = 1.0;      // decay rate for exp_tail
    double ramp_width = 0.0; // smoothing width of the step; 0 keeps it sharp-ish (4h)
};

struct SimConfig {
    double h = 1.0 / 128.0;
    double window = 40.0;
    Scheme scheme = Scheme::explicit_rk2;
    double dt = 0.0;            // 0: choose automatically for the scheme
    double cfl_explicit = 0.4;  // dt = cfl * h^2 / max a
    double dt_fraction = 0.6;   // imex: dt = dt_fraction * h / v_char
    double level = 0.5;
    double recenter_frac = 0.6;
    BoundaryMode boundary = BoundaryMode::clamp_states;

    // Relaxation control.
    double transient_frac = 0.3;
    double t_relax_min = 20.0;
    double t_max = 400.0;
    double chunk = 6.0;
    double freeze_drift_tol = 2e-5; // chunk-to-chunk speed change before extraction
    double speed_drift_tol = 1e-4;  // hard failure threshold

    // Profile extraction.
    int cols = 0;     // 0: 1 for constant-coefficient media, 16 otherwise
    int reps = 8;     // Poincare repetitions
    double s_back = 0.0, s_ahead = 0.0; // 0: derived from the window
    double defect_tol = 1e-4;

    // Snapshot storage for trajectory checks.
    double store_interval = 0.0; // 0: store nothing

    int record_stride = 0; // 0: aim at ~50 position records per time unit
};

struct Snapshot {
    double t = 0.0;
    double x_offset = 0.0;
    std::vector<double> u;
};
using Trajectory = std::vector<Snapshot>;

/// Locate the unique crossing of `level` by linear interpolation. Sign
/// changes inside a 1e-6 band around the level do not count as extra
/// crossings.
inline double front_position(const FrontState& st, double level = 0.5) {
    const int n = st.n();
    const double band = 1e-6;
    int crossings = 0;
    double pos = 0.0;
    int i = 0;
    while (i + 1 < n) {
        const double d0 = st.u[i] - level;
        const double d1 = st.u[i + 1] - level;
        if ((d0 > 0.0 && d1 <= 0.0) || (d0 < 0.0 && d1 >= 0.0)) {
            // Walk through the band so a flat stretch at the level counts once.
            int j = i + 1;
            while (j < n && std::abs(st.u[j] - level) <= band) ++j;
            const bool genuine = std::abs(d0) > band || (j < n && std::abs(st.u[j] - level) > band);
            if (genuine) {
                ++crossings;
                const double frac = d1 != d0 ? d0 / (d0 - d1) : 0.5;
                pos = st.x_offset + st.h * (i + frac);
            }
            i = std::max(j, i + 1);
        } else {
            ++i;
        }
    }
    if (crossings == 0) throw NoCrossing("u does not cross the level " + std::to_string(level));
    if (crossings > 1)
        throw MultipleCrossings(std::to_string(crossings) + " crossings of level " +
                                std::to_string(level));
    return pos;
}

/// Explicit/IMEX time stepper for u_t = (a u_x)_x - q u_x + f(x, u) on a
/// moving window. Medium coefficients are sampled once; window shifts happen
/// in whole periods so the sampled arrays stay aligned.
class Simulator {
public:
    Simulator(const PeriodicMedium& medium, const SimConfig& cfg)
        : med_(&medium), cfg_(cfg) {
        const double L = medium.period();
        n_per_ = static_cast<int>(std::llround(L / cfg.h));
        if (std::abs(n_per_ * cfg.h - L) > 1e-9 * L)
            throw ConfigError("grid spacing must divide the medium period");
        const int n = static_cast<int>(std::llround(cfg.window / cfg.h)) + 1;
        st_.h = cfg.h;
        st_.u.assign(n, 0.0);
        st_.t = 0.0;
        st_.x_offset = 0.0;

        a_half_.resize(n);
        g_react_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double x = cfg.h * i; // x_offset stays a multiple of L
            a_half_[i] = medium.diffusivity(wrap(x + 0.5 * cfg.h, L));
            g_react_[i] = medium.reaction_coupling(wrap(x, L));
        }
        q_ = medium.advection();

        max_a_ = medium.ellipticity_upper();
        double max_fu0 = 0.0;
        for (int i = 0; i < n_per_; ++i)
            max_fu0 = std::max(max_fu0, medium.df_du(wrap(cfg.h * i, L), 0.0));
        v_char_ = std::abs(q_) + 2.6 * std::sqrt(std::max(max_fu0, 1e-12) * max_a_);

        set_dt(cfg.dt > 0.0 ? cfg.dt : default_dt());
        k1_.assign(n, 0.0);
        k2_.assign(n, 0.0);
        utmp_.assign(n, 0.0);
        u_prev_.assign(n, 0.0);
    }

    double default_dt() const {
        if (cfg_.scheme == Scheme::explicit_rk2)
            return cfg_.cfl_explicit * cfg_.h * cfg_.h / max_a_;
        const double dt_adv = cfg_.dt_fraction * cfg_.h / v_char_;
        const double dt_react = 0.2 / std::max(med_->max_abs_df_du(), 1e-12);
        return std::min(dt_adv, dt_react);
    }

    void set_dt(double dt) {
        if (cfg_.scheme == Scheme::explicit_rk2) {
            const double cap = 0.4000000001 * cfg_.h * cfg_.h / max_a_;
            if (dt > cap)
                throw CFLViolation("dt " + std::to_string(dt) + " exceeds 0.4 h^2 / max a = " +
                                   std::to_string(cap));
        }
        dt_ = dt;
        if (cfg_.scheme == Scheme::imex) factor_diffusion();
    }

    double dt() const { return dt_; }
    const FrontState& state() const { return st_; }
    FrontState& state() { return st_; }
    const PeriodicMedium& medium() const { return *med_; }
    double total_shift() const { return st_.x_offset; }

    void set_initial(const std::vector<double>& u0) {
        if (static_cast<int>(u0.size()) != st_.n())
            throw ConfigError("initial datum size mismatch");
        st_.u = u0;
        clamp_edges();
        startup_left_ = 8;
    }

    void set_datum(const InitialDatum& d) {
        const int n = st_.n();
        std::vector<double> u0(n);
        const double w = d.ramp_width > 0.0 ? d.ramp_width : 4.0 * cfg_.h;
        for (int i = 0; i < n; ++i) {
            const double x = st_.x_at(i);
            if (d.kind == InitialDatum::Kind::step) {
                const double z = (d.x0 - x) / w; // 1 well left of x0, 0 at x0
                if (z >= 1.0) u0[i] = 1.0;
                else if (z <= 0.0) u0[i] = 0.0;
                else u0[i] = z * z * z * (10.0 + z * (-15.0 + 6.0 * z));
            } else {
                u0[i] = std::min(1.0, std::exp(-d.rate * (x - d.x0)));
            }
        }
        set_initial(u0);
    }

    /// One time step of size dt().
    void step() {
        if (cfg_.scheme == Scheme::explicit_rk2) {
            rhs_full(st_.u, k1_);
            axpy(st_.u, dt_, k1_, utmp_);
            clamp_edges(utmp_);
            rhs_full(utmp_, k2_);
            double m = 0.0;
            const int n = st_.n();
            for (int i = 0; i < n; ++i) {
                st_.u[i] += 0.5 * dt_ * (k1_[i] + k2_[i]);
                m = std::max(m, std::abs(st_.u[i]));
            }
            clamp_edges();
            if (m > 1.5) throw BlowUp("max |u| = " + std::to_string(m));
        } else {
            // Strang: half diffusion, full advection+reaction (Heun), half
            // diffusion. The first few halves use backward Euler to damp any
            // rough initial data before Crank-Nicolson takes over.
            diffusion_half();
            rhs_adv_react(st_.u, k1_);
            axpy(st_.u, dt_, k1_, utmp_);
            clamp_edges(utmp_);
            rhs_adv_react(utmp_, k2_);
            const int n = st_.n();
            for (int i = 0; i < n; ++i) st_.u[i] += 0.5 * dt_ * (k1_[i] + k2_[i]);
            clamp_edges();
            diffusion_half();
            double m = 0.0;
            for (int i = 0; i < n; ++i) m = std::max(m, std::abs(st_.u[i]));
            if (m > 1.5) throw BlowUp("max |u| = " + std::to_string(m));
            if (startup_left_ > 0) --startup_left_;
        }
        st_.t += dt_;
    }

    /// Shift the window one period to the right; coefficients stay aligned.
    void recenter() {
        const int n = st_.n();
        for (int i = 0; i + n_per_ < n; ++i) st_.u[i] = st_.u[i + n_per_];
        for (int i = std::max(0, n - n_per_); i < n; ++i) st_.u[i] = 0.0;
        st_.x_offset += med_->period();
        clamp_edges();
    }

    /// Crossing has moved past the recentering mark?
    bool needs_recenter() const {
        const int mark = static_cast<int>(cfg_.recenter_frac * st_.n());
        return st_.u[mark] > cfg_.level;
    }

    /// Semi-discrete time derivative (all terms). Used both by the explicit
    /// scheme and for depositing phi_s = -u_t / c.
    void rhs_full(const std::vector<double>& u, std::vector<double>& out) const {
        const int n = static_cast<int>(u.size());
        const double h = cfg_.h, inv_h2 = 1.0 / (h * h), inv_2h = 0.5 / h;
        out[0] = 0.0;
        out[n - 1] = 0.0;
        for (int i = 1; i + 1 < n; ++i) {
            const double diff =
                (a_half_[i] * (u[i + 1] - u[i]) - a_half_[i - 1] * (u[i] - u[i - 1])) * inv_h2;
            const double adv = -q_ * (u[i + 1] - u[i - 1]) * inv_2h;
            const double ui = u[i];
            const double react = ui * (1.0 - ui) * (1.0 + g_react_[i] * ui);
            out[i] = diff + adv + react;
        }
    }

private:
    void rhs_adv_react(const std::vector<double>& u, std::vector<double>& out) const {
        const int n = static_cast<int>(u.size());
        const double inv_2h = 0.5 / cfg_.h;
        out[0] = 0.0;
        out[n - 1] = 0.0;
        for (int i = 1; i + 1 < n; ++i) {
            const double adv = -q_ * (u[i + 1] - u[i - 1]) * inv_2h;
            const double ui = u[i];
            out[i] = adv + ui * (1.0 - ui) * (1.0 + g_react_[i] * ui);
        }
    }

    void factor_diffusion() {
        const int n = st_.n();
        const double inv_h2 = 1.0 / (cfg_.h * cfg_.h);
        auto build = [&](double theta, TridiagonalSolver& solver) {
            std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0);
            for (int i = 1; i + 1 < n; ++i) {
                const double am = a_half_[i - 1] * inv_h2, ap = a_half_[i] * inv_h2;
                lo[i] = -theta * dt_ * am;
                up[i] = -theta * dt_ * ap;
                di[i] = 1.0 + theta * dt_ * (am + ap);
            }
            solver.factor(lo, di, up);
        };
        build(0.25, cn_solver_); // Crank-Nicolson half step
        build(0.5, be_solver_);  // backward Euler half step (startup)
    }

    void diffusion_half() {
        const int n = st_.n();
        const double inv_h2 = 1.0 / (cfg_.h * cfg_.h);
        if (startup_left_ > 0) {
            be_solver_.solve(st_.u);
        } else {
            utmp_ = st_.u;
            for (int i = 1; i + 1 < n; ++i) {
                const double diff = (a_half_[i] * (utmp_[i + 1] - utmp_[i]) -
                                     a_half_[i - 1] * (utmp_[i] - utmp_[i - 1])) * inv_h2;
                st_.u[i] = utmp_[i] + 0.25 * dt_ * diff;
            }
            cn_solver_.solve(st_.u);
        }
        clamp_edges();
    }

    static void axpy(const std::vector<double>& u, double a, const std::vector<double>& v,
                     std::vector<double>& out) {
        const std::size_t n = u.size();
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + a * v[i];
    }

    void clamp_edges() { clamp_edges(st_.u); }
    void clamp_edges(std::vector<double>& u) const {
        if (cfg_.boundary == BoundaryMode::clamp_states) {
            u.front() = 1.0;
            u.back() = 0.0;
        } else {
            u.front() = u[1];
            u.back() = u[u.size() - 2];
        }
    }

    const PeriodicMedium* med_;
    SimConfig cfg_;
    FrontState st_;
    int n_per_ = 1;
    double dt_ = 0.0, q_ = 0.0, max_a_ = 1.0, v_char_ = 1.0;
    int startup_left_ = 8;
    std::vector<double> a_half_, g_react_, k1_, k2_, utmp_, u_prev_;
    TridiagonalSolver cn_solver_, be_solver_;

public:
    /// Copy of u linearly interpolated to an off-step time in [t-dt, t].
    void sample_between(const std::vector<double>& u_old, double t_old, double t_target,
                        std::vector<double>& out) const {
        const double w = (t_target - t_old) / (st_.t - t_old);
        const int n = st_.n();
        out.resize(n);
        for (int i = 0; i < n; ++i) out[i] = (1.0 - w) * u_old[i] + w * st_.u[i];
    }
    std::vector<double>& scratch_prev() { return u_prev_; }
};

struct SpeedEstimate {
    double c_hat = 0.0;
    double stderr_ = 0.0;
    double log_coeff = 0.0; // coefficient of the ln t drift term
    double t_lo = 0.0, t_hi = 0.0;
    std::vector<double> fit_t, fit_x; // resampled points used for the fit
};

/// Self-consistent speed fit: positions resampled at times spaced L/c so the
/// periodic wobble of the crossing drops out, then refit until c settles.
/// The ln t column soaks up the slow drift of pulled fronts.
inline SpeedEstimate fit_speed(const std::vector<double>& ts, const std::vector<double>& xs,
                               double t_lo, double t_hi, double L) {
    SpeedEstimate est;
    est.t_lo = t_lo;
    est.t_hi = t_hi;
    std::vector<double> st, sx;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= t_lo && ts[i] <= t_hi) {
            st.push_back(ts[i]);
            sx.push_back(xs[i]);
        }
    if (st.size() < 8) throw NoConvergence("not enough position records for a speed fit");
    double c = fit_line(st, sx).slope;
    auto interp = [&](double t) {
        auto it = std::lower_bound(st.begin(), st.end(), t);
        std::size_t j = std::min<std::size_t>(std::distance(st.begin(), it), st.size() - 1);
        if (j == 0) j = 1;
        const double w = (t - st[j - 1]) / (st[j] - st[j - 1]);
        return (1.0 - w) * sx[j - 1] + w * sx[j];
    };
    for (int pass = 0; pass < 30; ++pass) {
        const double T_per = L / std::max(c, 1e-12);
        std::vector<double> rt, rx;
        for (double t = st.front(); t <= st.back() + 1e-12; t += T_per) {
            rt.push_back(t);
            rx.push_back(interp(t));
        }
        if (rt.size() < 6) {
            rt = st;
            rx = sx;
        }
        const auto fit = fit_drift(rt, rx);
        est.stderr_ = fit.slope_stderr;
        est.log_coeff = fit.log_coeff;
        est.fit_t = rt;
        est.fit_x = rx;
        if (std::abs(fit.slope - c) < 1e-8) {
            c = fit.slope;
            break;
        }
        c = fit.slope;
    }
    est.c_hat = c;
    return est;
}

/// Accumulates moving-frame deposits of u (and optionally u_t) on the
/// (s, column) lattice and assembles a FrontProfile. Deposits are split in
/// two buckets so the periodicity defect can compare independent halves.
class ProfileAssembler {
public:
    ProfileAssembler(double c, double L, int cols, double s_lo, double s_hi, double ds,
                     double t_ref, double x_anchor)
        : c_(c), L_(L), cols_(cols), ds_(ds), t_ref_(t_ref), x_anchor_(x_anchor) {
        // For multi-column tables the lattice offset is pinned by the anchor.
        s0_ = s_lo;
        if (cols_ > 1) {
            const double off = std::fmod(-x_anchor_, ds_);
            s0_ = std::floor((s_lo - off) / ds_) * ds_ + off;
        }
        ns_ = static_cast<int>(std::floor((s_hi - s0_) / ds_)) + 1;
        const std::size_t total = static_cast<std::size_t>(ns_) * cols_;
        sum_[0].assign(total, 0.0);
        sum_[1].assign(total, 0.0);
        cnt_[0].assign(total, 0);
        cnt_[1].assign(total, 0);
        slope_sum_[0].assign(total, 0.0);
        slope_sum_[1].assign(total, 0.0);
        has_slopes_ = false;
    }

    double s_node(int k) const { return s0_ + ds_ * k; }
    int rows() const { return ns_; }

    /// Deposit one snapshot. `u_t` may be empty (profile slope then falls
    /// back to differencing in s at assembly time).
    void add_snapshot(double t, double x_offset, double h, const std::vector<double>& u,
                      const std::vector<double>& u_t, int bucket) {
        bucket = bucket ? 1 : 0;
        const int n = static_cast<int>(u.size());
        if (cols_ == 1) {
            for (int k = 0; k < ns_; ++k) {
                const double x = s_node(k) + x_anchor_ + c_ * (t - t_ref_);
                const double pos = (x - x_offset) / h;
                const long i1 = static_cast<long>(std::floor(pos));
                if (i1 < 1 || i1 + 2 >= n) continue;
                const double frac = pos - static_cast<double>(i1);
                const std::size_t id = static_cast<std::size_t>(k);
                sum_[bucket][id] += cubic4(u[i1 - 1], u[i1], u[i1 + 1], u[i1 + 2], frac);
                if (!u_t.empty()) {
                    slope_sum_[bucket][id] +=
                        -cubic4(u_t[i1 - 1], u_t[i1], u_t[i1 + 1], u_t[i1 + 2], frac) / c_;
                    has_slopes_ = true;
                }
                cnt_[bucket][id] += 1;
            }
            return;
        }
        // Multi-column: lab points congruent to a column deposit exactly on
        // the lattice; anything misaligned indicates a scheduling bug.
        const int n_per = static_cast<int>(std::llround(L_ / h));
        const int stride = n_per / cols_;
        for (int i = 1; i + 1 < n; ++i) {
            const int cell = i % n_per;
            if (cell % stride != 0) continue;
            const int m = cell / stride;
            const double s = (x_offset + h * i) - c_ * (t - t_ref_) - x_anchor_;
            const double kreal = (s - s0_) / ds_;
            const long k = std::llround(kreal);
            if (k < 0 || k >= ns_) continue;
            if (std::abs(kreal - static_cast<double>(k)) > 0.02)
                throw ConfigError("profile snapshot time misaligned with the s lattice");
            const std::size_t id = static_cast<std::size_t>(k) * cols_ + m;
            sum_[bucket][id] += u[i];
            if (!u_t.empty()) {
                slope_sum_[bucket][id] += -u_t[i] / c_;
                has_slopes_ = true;
            }
            cnt_[bucket][id] += 1;
        }
    }

    FrontProfile finalize() const {
        // Keep the contiguous run of rows whose every column was seen in
        // both buckets.
        std::vector<char> full(ns_, 1);
        for (int k = 0; k < ns_; ++k)
            for (int m = 0; m < cols_; ++m) {
                const std::size_t id = static_cast<std::size_t>(k) * cols_ + m;
                if (cnt_[0][id] == 0 || cnt_[1][id] == 0) full[k] = 0;
            }
        int best_a = -1, best_b = -2;
        for (int a = 0; a < ns_;) {
            if (!full[a]) {
                ++a;
                continue;
            }
            int b = a;
            while (b + 1 < ns_ && full[b + 1]) ++b;
            if (b - a > best_b - best_a) {
                best_a = a;
                best_b = b;
            }
            a = b + 1;
        }
        if (best_b - best_a < 16) throw NoConvergence("profile window has too few complete rows");

        FrontProfile p;
        p.s0 = s_node(best_a);
        p.ds = ds_;
        p.ns = best_b - best_a + 1;
        p.cols = cols_;
        p.L = L_;
        p.c = c_;
        p.t_ref = t_ref_;
        p.x_anchor = x_anchor_;
        p.phi.resize(static_cast<std::size_t>(p.ns) * cols_);
        p.phi_s.resize(static_cast<std::size_t>(p.ns) * cols_);
        double defect = 0.0;
        for (int k = 0; k < p.ns; ++k)
            for (int m = 0; m < cols_; ++m) {
                const std::size_t src = static_cast<std::size_t>(k + best_a) * cols_ + m;
                const double va = sum_[0][src] / cnt_[0][src];
                const double vb = sum_[1][src] / cnt_[1][src];
                defect = std::max(defect, std::abs(va - vb));
                const double tot = cnt_[0][src] + cnt_[1][src];
                p.phi[p.idx(k, m)] = (sum_[0][src] + sum_[1][src]) / tot;
                if (has_slopes_)
                    p.phi_s[p.idx(k, m)] = (slope_sum_[0][src] + slope_sum_[1][src]) / tot;
            }
        if (!has_slopes_) {
            for (int k = 0; k < p.ns; ++k)
                for (int m = 0; m < cols_; ++m) {
                    const int km = std::max(0, k - 1), kp = std::min(p.ns - 1, k + 1);
                    p.phi_s[p.idx(k, m)] = (p.phi[p.idx(kp, m)] - p.phi[p.idx(km, m)]) /
                                           (p.ds * (kp - km));
                }
        }
        p.periodicity_defect = defect;
        p.left_limit_defect = std::abs(p.cell_mean(0) - 1.0);
        p.right_limit_defect = std::abs(p.cell_mean(p.ns - 1));
        return p;
    }

private:
    double c_, L_;
    int cols_;
    double ds_, t_ref_, x_anchor_, s0_ = 0.0;
    int ns_ = 0;
    std::vector<double> sum_[2], slope_sum_[2];
    std::vector<std::int64_t> cnt_[2];
    bool has_slopes_ = false;
};

/// Rebuild phi(s, x) from stored snapshots at a fixed speed c. Snapshots must
/// be spaced by L/c (whole Poincare periods), or by L/(c*cols) when a
/// multi-column table is requested.
inline FrontProfile extract_profile(const Trajectory& snaps, double grid_h,
                                    const PeriodicMedium& medium, double c, int cols,
                                    double s_back, double s_ahead, double defect_tol = 1e-4) {
    if (snaps.size() < 2) throw ConfigError("extract_profile needs at least two snapshots");
    const double L = medium.period();
    FrontState fs;
    fs.t = snaps.front().t;
    fs.x_offset = snaps.front().x_offset;
    fs.h = grid_h;
    fs.u = snaps.front().u;
    const double anchor = front_position(fs);
    const double ds = cols == 1 ? grid_h : L / cols;
    ProfileAssembler asmb(c, L, cols, -s_back, s_ahead, ds, snaps.front().t, anchor);
    for (std::size_t j = 0; j < snaps.size(); ++j)
        asmb.add_snapshot(snaps[j].t, snaps[j].x_offset, grid_h, snaps[j].u, {},
                          j >= snaps.size() / 2 ? 1 : 0);
    FrontProfile p = asmb.finalize();
    if (p.periodicity_defect > defect_tol)
        throw PeriodicityDefect("aligned snapshots differ by " +
                                std::to_string(p.periodicity_defect));
    return p;
}

struct RelaxResult {
    FrontProfile profile;
    SpeedEstimate speed;
    Trajectory trajectory;
    std::vector<double> pos_t, pos_x; // raw front-position series
    double frozen_speed = 0.0;
    double final_drift = 0.0;
};

/// Run the equation on a recentering window until the front speed settles,
/// then sample Poincare phases and assemble the pulsating profile.
inline RelaxResult relax_to_front(const PeriodicMedium& medium, const InitialDatum& datum,
                                  const SimConfig& cfg) {
    Simulator sim(medium, cfg);
    sim.set_datum(datum);
    const double L = medium.period();
    RelaxResult out;

    const int stride = cfg.record_stride > 0
                           ? cfg.record_stride
                           : std::max(1, static_cast<int>(std::llround(0.02 / sim.dt())));
    std::int64_t step_count = 0;
    double next_store = cfg.store_interval > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();

    auto maybe_record = [&]() {
        if (step_count % stride == 0) {
            out.pos_t.push_back(sim.state().t);
            out.pos_x.push_back(front_position(sim.state(), cfg.level));
        }
        if (sim.state().t >= next_store) {
            out.trajectory.push_back({sim.state().t, sim.state().x_offset, sim.state().u});
            next_store += cfg.store_interval;
        }
    };
    maybe_record();

    // Phase 1: relax until the fitted speed stops moving chunk to chunk.
    double c_prev = std::numeric_limits<double>::quiet_NaN();
    double c_est = 0.0;
    double drift = std::numeric_limits<double>::infinity();
    while (true) {
        const double t_target = sim.state().t + cfg.chunk;
        while (sim.state().t < t_target) {
            sim.step();
            ++step_count;
            if (step_count % 16 == 0 && sim.needs_recenter()) sim.recenter();
            maybe_record();
        }
        const double t_now = sim.state().t;
        if (t_now >= cfg.t_relax_min) {
            c_est = fit_speed(out.pos_t, out.pos_x, cfg.transient_frac * t_now, t_now, L).c_hat;
            if (!std::isnan(c_prev)) {
                drift = std::abs(c_est - c_prev);
                if (drift < cfg.freeze_drift_tol) break;
            }
            c_prev = c_est;
        }
        if (t_now >= cfg.t_max) {
            if (drift > cfg.speed_drift_tol)
                throw SpeedDrift("speed still drifting by " + std::to_string(drift) +
                                 " at t_max");
            break;
        }
    }

    // Phase 2: deposit Poincare-phase snapshots at the frozen speed.
    out.frozen_speed = c_est;
    const double T_per = L / c_est;
    const int cols = cfg.cols > 0 ? cfg.cols : (medium.constant_coefficients() ? 1 : 16);
    const int reps = std::max(2, cfg.reps);
    const double s_back = cfg.s_back > 0.0 ? cfg.s_back : 0.50 * cfg.window;
    const double s_ahead = cfg.s_ahead > 0.0 ? cfg.s_ahead : 0.45 * cfg.window;
    const double ds = cols == 1 ? cfg.h : L / cols;
    const double t_ref = sim.state().t;
    const double x_anchor = front_position(sim.state(), cfg.level);
    ProfileAssembler asmb(c_est, L, cols, -s_back, s_ahead, ds, t_ref, x_anchor);

    std::vector<double> schedule;
    const int phases = cols == 1 ? 1 : cols;
    for (int k = 0; k < reps; ++k)
        for (int j = 0; j < phases; ++j)
            schedule.push_back(t_ref + (k + static_cast<double>(j) / phases) * T_per);
    std::sort(schedule.begin(), schedule.end());
    std::size_t next_dep = 0;
    std::vector<double> u_interp, ut_interp;

    while (next_dep < schedule.size()) {
        auto& uprev = sim.scratch_prev();
        uprev = sim.state().u;
        const double t_old = sim.state().t;
        sim.step();
        ++step_count;
        maybe_record();
        while (next_dep < schedule.size() && schedule[next_dep] <= sim.state().t + 1e-14) {
            const double tj = schedule[next_dep];
            sim.sample_between(uprev, t_old, tj, u_interp);
            ut_interp.resize(u_interp.size());
            sim.rhs_full(u_interp, ut_interp);
            const int rep = static_cast<int>((tj - t_ref) / T_per + 1e-9);
            asmb.add_snapshot(tj, sim.state().x_offset, cfg.h, u_interp, ut_interp,
                              rep >= reps / 2 ? 1 : 0);
            ++next_dep;
        }
        if (step_count % 16 == 0 && sim.needs_recenter()) sim.recenter();
    }

    // Phase 3: final speed fit over the post-transient record.
    const double t_end = sim.state().t;
    out.speed = fit_speed(out.pos_t, out.pos_x, cfg.transient_frac * t_end, t_end, L);
    out.final_drift = std::abs(out.speed.c_hat - c_est);
    if (out.final_drift > cfg.speed_drift_tol)
        throw SpeedDrift("frozen vs final speed differ by " + std::to_string(out.final_drift));
    out.profile = asmb.finalize();
    if (out.profile.periodicity_defect > cfg.defect_tol)
        throw pulsefront::NoConvergence("Poincare samples differ by " +
                                        std::to_string(out.profile.periodicity_defect));
    return out;
}

} // namespace pulsefront
