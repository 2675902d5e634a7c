#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/numerics.hpp"

namespace pulsefront {

/// A pulsating-front profile phi(s, x) in the frame s = x - c t, tabulated on
/// a uniform s-grid times a uniform grid of cell positions x in [0, L). For
/// media with constant coefficients the table has a single column. For
/// genuinely periodic media the column spacing equals the s spacing, so the
/// traveling-frame operator can be applied by differencing along diagonals.
struct FrontProfile {
    double s0 = 0.0;   // s of the first row
    double ds = 0.0;   // s spacing
    int ns = 0;        // rows
    int cols = 1;      // cell positions per period
    double L = 1.0;    // cell period
    double c = 0.0;    // frame speed
    std::vector<double> phi;    // ns*cols, row major
    std::vector<double> phi_s;  // discrete d(phi)/ds, same layout

    // Diagnostics filled by the extractor.
    double periodicity_defect = 0.0;
    double left_limit_defect = 0.0;   // |mean phi - 1| on the first row
    double right_limit_defect = 0.0;  // |mean phi| on the last row

    // Frame bookkeeping: the profile was deposited as
    // phi(x - c (t - t_ref) - x_anchor), so in the lab frame
    // u(t, x) ~ phi(x - c t - lab_offset()).
    double t_ref = 0.0;
    double x_anchor = 0.0;
    double lab_offset() const { return x_anchor - c * t_ref; }

    double s_at(int i) const { return s0 + ds * i; }
    double x_col(int m) const { return L * static_cast<double>(m) / cols; }
    double col_spacing() const { return L / static_cast<double>(cols); }
    std::size_t idx(int i, int m) const {
        return static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(m);
    }
    double value(int i, int m) const { return phi[idx(i, m)]; }
    double slope(int i, int m) const { return phi_s[idx(i, m)]; }

    double cell_mean(int i) const {
        double s = 0.0;
        for (int m = 0; m < cols; ++m) s += phi[idx(i, m)];
        return s / cols;
    }
    double cell_mean_slope(int i) const {
        double s = 0.0;
        for (int m = 0; m < cols; ++m) s += phi_s[idx(i, m)];
        return s / cols;
    }

    /// Interpolate one column in s (cubic).
    double column_at(int m, double s, const std::vector<double>& table) const {
        const double u = (s - s0) / ds;
        long i1 = static_cast<long>(std::floor(u));
        i1 = std::clamp(i1, long(1), long(ns) - 3);
        const double frac = u - static_cast<double>(i1);
        return cubic4(table[idx(static_cast<int>(i1) - 1, m)], table[idx(static_cast<int>(i1), m)],
                      table[idx(static_cast<int>(i1) + 1, m)],
                      table[idx(static_cast<int>(i1) + 2, m)], frac);
    }

    /// phi(s, x): cubic in s, periodic cubic across columns. Values of s
    /// beyond the table clamp to the end rows (tail values there are ~0/~1).
    double phi_at(double s, double x) const { return eval(phi, s, x); }
    double phi_s_at(double s, double x) const { return eval(phi_s, s, x); }

    double eval(const std::vector<double>& table, double s, double x) const {
        s = std::clamp(s, s0, s_at(ns - 1));
        if (cols == 1) return column_at(0, s, table);
        colbuf_.resize(cols);
        for (int m = 0; m < cols; ++m) colbuf_[m] = column_at(m, s, table);
        return periodic_cubic_eval(colbuf_, L, x);
    }

    /// Rows whose cell mean lies inside [lo, hi]; the profile is monotone so
    /// this is a contiguous band. Returns {-1, -1} if empty.
    std::pair<int, int> band_rows(double lo, double hi) const {
        int a = -1, b = -1;
        for (int i = 0; i < ns; ++i) {
            const double v = cell_mean(i);
            if (v <= hi && v >= lo) {
                if (a < 0) a = i;
                b = i;
            }
        }
        return {a, b};
    }

    /// phi_s < 0 wherever phi is strictly between the states.
    bool monotone(double lo = 1e-8, double hi = 1.0 - 1e-8) const {
        for (int i = 1; i + 1 < ns; ++i)
            for (int m = 0; m < cols; ++m) {
                const double v = phi[idx(i, m)];
                if (v >= lo && v <= hi && phi_s[idx(i, m)] >= 0.0) return false;
            }
        return true;
    }

private:
    mutable std::vector<double> colbuf_;
};

/// Tabulate an analytic profile; used by tests and synthetic experiments.
inline FrontProfile make_profile_from_function(
    double c, double s_lo, double ds, int ns, int cols, double L,
    const std::function<double(double, double)>& phi_fn,
    const std::function<double(double, double)>& phi_s_fn) {
    FrontProfile p;
    p.s0 = s_lo;
    p.ds = ds;
    p.ns = ns;
    p.cols = cols;
    p.L = L;
    p.c = c;
    p.phi.resize(static_cast<std::size_t>(ns) * cols);
    p.phi_s.resize(static_cast<std::size_t>(ns) * cols);
    for (int i = 0; i < ns; ++i)
        for (int m = 0; m < cols; ++m) {
            const double s = p.s_at(i), x = p.x_col(m);
            p.phi[p.idx(i, m)] = phi_fn(s, x);
            p.phi_s[p.idx(i, m)] = phi_s_fn(s, x);
        }
    p.left_limit_defect = std::abs(p.cell_mean(0) - 1.0);
    p.right_limit_defect = std::abs(p.cell_mean(ns - 1));
    return p;
}

} // namespace pulsefront
