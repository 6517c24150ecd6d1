#pragma once

// Test-side reference computations. None of these call into the library's
// spectral code: exponentials are Taylor series with scaling and squaring,
// superoperators are assembled column by column from the Lindblad formula,
// integrals use adaptive Simpson.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// exp(a) by scaling and squaring of a 30-term Taylor series.
inline Mat expm(const Mat& a) {
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = int(std::ceil(std::log2(norm / 0.5)));
    const Mat b = a / std::ldexp(1.0, s);
    Mat term = Mat::Identity(a.rows(), a.cols());
    Mat sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * b / double(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

/// D[rho] = -i[H, rho] + sum_k (J rho J^dag - {J^dag J, rho}/2).
inline Mat lindblad_rhs(const Mat& h, const std::vector<Mat>& jumps, const Mat& rho) {
    const Complex i(0.0, 1.0);
    Mat out = -i * (h * rho - rho * h);
    for (const auto& j : jumps) {
        const Mat jj = j.adjoint() * j;
        out += j * rho * j.adjoint() - 0.5 * (jj * rho + rho * jj);
    }
    return out;
}

/// Column-stacking superoperator built by applying the Lindblad formula to
/// each matrix unit.
inline Mat liouvillian(const Mat& h, const std::vector<Mat>& jumps) {
    const auto d = h.rows();
    Mat l(d * d, d * d);
    for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index a = 0; a < d; ++a) {
            Mat e = Mat::Zero(d, d);
            e(a, b) = 1.0;
            const Mat img = lindblad_rhs(h, jumps, e);
            l.col(a + d * b) = Eigen::Map<const Vec>(img.data(), d * d);
        }
    return l;
}

inline Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

inline Mat unvec(const Vec& v, Eigen::Index d) { return Eigen::Map<const Mat>(v.data(), d, d); }

/// rho(t) = exp(L t) rho0 for each t.
inline std::vector<Mat> evolve(const Mat& l, const Mat& rho0, const std::vector<double>& times) {
    std::vector<Mat> out;
    for (double t : times) out.push_back(unvec(expm(l * t) * vec(rho0), rho0.rows()));
    return out;
}

/// Steady state: kernel vector of L with unit trace.
inline Mat steady_state(const Mat& l, Eigen::Index d) {
    Eigen::FullPivLU<Mat> lu(l);
    const Mat k = lu.kernel();
    Mat rho = unvec(k.col(0), d);
    rho /= rho.trace();
    return rho;
}

/// Solves A X + X B = C through the Kronecker form.
inline Mat sylvester(const Mat& a, const Mat& b, const Mat& c) {
    const auto m = a.rows(), n = b.rows();
    Mat k = Mat::Zero(m * n, m * n);
    const Mat im = Mat::Identity(m, m), in = Mat::Identity(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q < n; ++q) {
            k.block(p * m, q * m, m, m) += in(p, q) * a;
            k.block(p * m, q * m, m, m) += b(q, p) * im;
        }
    const Vec x = k.fullPivLu().solve(vec(c));
    return Eigen::Map<const Mat>(x.data(), m, n);
}

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Adaptive Simpson on [a, b] with absolute tolerance tol.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

/// Integral over [0, t_end] split at t0, 10 t0, 100 t0, ... so that each
/// panel has a well-scaled integrand. t0 must be positive.
inline double simpson_decades(const std::function<double(double)>& f, double t0, double t_end, double tol = 1e-12) {
    if (!(t0 > 0.0)) throw std::invalid_argument("simpson_decades: t0 must be positive");
    double total = 0.0, a = 0.0, b = t0;
    while (a < t_end) {
        b = std::min(b, t_end);
        total += simpson(f, a, b, tol);
        a = b;
        b *= 10.0;
    }
    return total;
}

/// Two-sample Kolmogorov-Smirnov critical value at the 1% level.
inline double ks_critical_2(double n, double m) { return 1.628 * std::sqrt((n + m) / (n * m)); }

/// One-sample Kolmogorov-Smirnov critical value at the 1% level (asymptotic).
inline double ks_critical_1(double n) { return 1.628 / std::sqrt(n); }

/// sup |F_emp - F| for a sorted sample against a CDF.
inline double ks_statistic(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
    double d = 0.0;
    const double n = double(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, std::abs(double(i + 1) / n - f), std::abs(f - double(i) / n)});
    }
    return d;
}

/// Least-squares slope of log|z(t)| over the given times.
inline double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& z) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double n = double(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double y = std::log(std::abs(z[i]));
        st += t[i];
        sy += y;
        stt += t[i] * t[i];
        sty += t[i] * y;
    }
    return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace oracle
