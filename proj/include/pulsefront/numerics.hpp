#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "pulsefront/errors.hpp"

namespace pulsefront {

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Euclidean mod that always lands in [0, L).
inline double wrap(double x, double L) {
    double r = std::fmod(x, L);
    return r < 0.0 ? r + L : r;
}

inline long wrap_index(long i, long n) {
    long r = i % n;
    return r < 0 ? r + n : r;
}

/// Solve a tridiagonal system in place (Thomas algorithm).
/// lower[0] and upper[n-1] are ignored. Diagonally dominant systems only,
/// which is what the clamped diffusion solves produce.
class TridiagonalSolver {
public:
    TridiagonalSolver() = default;

    void factor(const std::vector<double>& lower, const std::vector<double>& diag,
                const std::vector<double>& upper) {
        const std::size_t n = diag.size();
        lower_ = lower;
        upper_ = upper;
        inv_diag_.assign(n, 0.0);
        double d = diag[0];
        inv_diag_[0] = 1.0 / d;
        for (std::size_t i = 1; i < n; ++i) {
            d = diag[i] - lower[i] * upper[i - 1] * inv_diag_[i - 1];
            if (d == 0.0) throw NonConvergence("singular tridiagonal pivot");
            inv_diag_[i] = 1.0 / d;
        }
    }

    void solve(std::vector<double>& rhs) const {
        const std::size_t n = inv_diag_.size();
        scratch_.assign(n, 0.0);
        scratch_[0] = rhs[0] * inv_diag_[0];
        for (std::size_t i = 1; i < n; ++i)
            scratch_[i] = (rhs[i] - lower_[i] * scratch_[i - 1]) * inv_diag_[i];
        rhs[n - 1] = scratch_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            rhs[i] = scratch_[i] - upper_[i] * inv_diag_[i] * rhs[i + 1];
    }

    std::size_t size() const { return inv_diag_.size(); }

private:
    std::vector<double> lower_, upper_, inv_diag_;
    mutable std::vector<double> scratch_;
};

/// Periodic (cyclic) tridiagonal solve via Sherman-Morrison on top of the
/// plain Thomas factorisation. Matrix rows: lower[i]*x[i-1] + diag[i]*x[i] +
/// upper[i]*x[i+1] with wraparound at both ends.
class CyclicTridiagonalSolver {
public:
    void factor(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper) {
        const std::size_t n = diag.size();
        assert(n >= 3);
        corner_lower_ = lower[0];      // row 0, column n-1
        corner_upper_ = upper[n - 1];  // row n-1, column 0
        gamma_ = -diag[0];
        diag[0] -= gamma_;
        diag[n - 1] -= corner_lower_ * corner_upper_ / gamma_;
        base_.factor(lower, diag, upper);
        // Solve for the correction vector once.
        z_.assign(n, 0.0);
        z_[0] = gamma_;
        z_[n - 1] = corner_upper_;
        base_.solve(z_);
    }

    void solve(std::vector<double>& rhs) const {
        const std::size_t n = rhs.size();
        base_.solve(rhs);
        const double num = rhs[0] + rhs[n - 1] * corner_lower_ / gamma_;
        const double den = 1.0 + z_[0] + z_[n - 1] * corner_lower_ / gamma_;
        if (den == 0.0) throw NonConvergence("singular cyclic correction");
        const double fac = num / den;
        for (std::size_t i = 0; i < n; ++i) rhs[i] -= fac * z_[i];
    }

private:
    TridiagonalSolver base_;
    std::vector<double> z_;
    double corner_lower_ = 0.0, corner_upper_ = 0.0, gamma_ = 1.0;
};

/// Real trigonometric interpolant built from n uniform samples on [0, L).
/// Exact for trigonometric polynomials up to the Nyquist mode, which covers
/// every coefficient family shipped with the tool. Also provides the exact
/// derivative of the interpolant.
class TrigInterpolant {
public:
    TrigInterpolant() = default;

    TrigInterpolant(std::vector<double> samples, double L) : L_(L) {
        const std::size_t n = samples.size();
        assert(n >= 4);
        const std::size_t m = n / 2;
        a_.assign(m + 1, 0.0);
        b_.assign(m + 1, 0.0);
        const double w = 2.0 * M_PI / static_cast<double>(n);
        for (std::size_t k = 0; k <= m; ++k) {
            double ca = 0.0, cb = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                ca += samples[j] * std::cos(w * static_cast<double>(k * j));
                cb += samples[j] * std::sin(w * static_cast<double>(k * j));
            }
            const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
            a_[k] = scale * ca / static_cast<double>(n);
            b_[k] = scale * cb / static_cast<double>(n);
        }
    }

    double operator()(double x) const {
        const double t = 2.0 * M_PI * x / L_;
        double s = 0.0;
        for (std::size_t k = 0; k < a_.size(); ++k)
            s += a_[k] * std::cos(t * static_cast<double>(k)) +
                 b_[k] * std::sin(t * static_cast<double>(k));
        return s;
    }

    double derivative(double x) const {
        const double w0 = 2.0 * M_PI / L_;
        const double t = w0 * x;
        double s = 0.0;
        for (std::size_t k = 1; k < a_.size(); ++k) {
            const double wk = w0 * static_cast<double>(k);
            s += wk * (-a_[k] * std::sin(t * static_cast<double>(k)) +
                       b_[k] * std::cos(t * static_cast<double>(k)));
        }
        return s;
    }

private:
    double L_ = 1.0;
    std::vector<double> a_, b_;
};

/// 4-point Lagrange interpolation on a uniform grid. `frac` in [0,1] is the
/// position between nodes 1 and 2 of the stencil.
inline double cubic4(double y0, double y1, double y2, double y3, double frac) {
    const double t = frac;
    const double c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return c0 * y0 + c1 * y1 + c2 * y2 + c3 * y3;
}

/// Cubic interpolation of periodic samples (uniform grid over [0, L)).
inline double periodic_cubic_eval(const std::vector<double>& y, double L, double x) {
    const long n = static_cast<long>(y.size());
    const double h = L / static_cast<double>(n);
    const double u = wrap(x, L) / h;
    const long i1 = static_cast<long>(std::floor(u));
    const double frac = u - static_cast<double>(i1);
    return cubic4(y[wrap_index(i1 - 1, n)], y[wrap_index(i1, n)], y[wrap_index(i1 + 1, n)],
                  y[wrap_index(i1 + 2, n)], frac);
}

/// Cubic interpolation of non-periodic uniform samples; clamps the stencil
/// at the ends of the array.
inline double uniform_cubic_eval(const std::vector<double>& y, double x0, double h, double x) {
    const long n = static_cast<long>(y.size());
    if (n == 1) return y[0];
    double u = (x - x0) / h;
    long i1 = static_cast<long>(std::floor(u));
    i1 = std::clamp(i1, long(1), n - 3);
    const double frac = u - static_cast<double>(i1);
    return cubic4(y[i1 - 1], y[i1], y[i1 + 1], y[i1 + 2], frac);
}

/// Golden-section minimisation of a unimodal function on [a, b].
inline double golden_minimize(const std::function<double(double)>& f, double a, double b,
                              double xtol, int max_iter = 200) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline double golden_maximize(const std::function<double(double)>& f, double a, double b,
                              double xtol, int max_iter = 200) {
    return golden_minimize([&f](double x) { return -f(x); }, a, b, xtol, max_iter);
}

/// Bisection for a sign change of f on [a, b]; f(a) and f(b) must have
/// opposite signs.
inline double bisect(const std::function<double(double)>& f, double a, double b, double xtol,
                     int max_iter = 200) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw BracketFailure("bisect: no sign change on bracket");
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y ~ slope*x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    assert(n == y.size() && n >= 2);
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - out.slope * x[i] - out.intercept;
        ss += r * r;
    }
    if (n > 2) out.slope_stderr = std::sqrt(ss / (static_cast<double>(n) - 2.0) / sxx);
    return out;
}

struct DriftFit {
    double slope = 0.0;      // coefficient of t
    double log_coeff = 0.0;  // coefficient of ln t
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Least squares y ~ slope*t + log_coeff*ln(t) + intercept, solved by normal
/// equations on the 3x3 system. The ln t column absorbs the slow logarithmic
/// drift of pulled-front positions; for pushed fronts its coefficient comes
/// out near zero.
inline DriftFit fit_drift(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    assert(n == y.size() && n >= 4);
    double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double c[3] = {t[i], std::log(t[i]), 1.0};
        for (int r = 0; r < 3; ++r) {
            for (int cidx = 0; cidx < 3; ++cidx) A[r][cidx] += c[r] * c[cidx];
            rhs[r] += c[r] * y[i];
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system.
    int piv[3] = {0, 1, 2};
    for (int k = 0; k < 3; ++k) {
        int p = k;
        for (int r = k + 1; r < 3; ++r)
            if (std::abs(A[piv[r]][k]) > std::abs(A[piv[p]][k])) p = r;
        std::swap(piv[k], piv[p]);
        for (int r = k + 1; r < 3; ++r) {
            const double m = A[piv[r]][k] / A[piv[k]][k];
            for (int cidx = k; cidx < 3; ++cidx) A[piv[r]][cidx] -= m * A[piv[k]][cidx];
            rhs[piv[r]] -= m * rhs[piv[k]];
        }
    }
    double sol[3];
    for (int k = 2; k >= 0; --k) {
        double s = rhs[piv[k]];
        for (int cidx = k + 1; cidx < 3; ++cidx) s -= A[piv[k]][cidx] * sol[cidx];
        sol[k] = s / A[piv[k]][k];
    }
    DriftFit out;
    out.slope = sol[0];
    out.log_coeff = sol[1];
    out.intercept = sol[2];
    double ss = 0, stt = 0, mt = 0;
    for (std::size_t i = 0; i < n; ++i) mt += t[i];
    mt /= n;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - sol[0] * t[i] - sol[1] * std::log(t[i]) - sol[2];
        ss += r * r;
        stt += (t[i] - mt) * (t[i] - mt);
    }
    if (n > 3) out.slope_stderr = std::sqrt(ss / (static_cast<double>(n) - 3.0) / stt);
    return out;
}

} // namespace pulsefront
