#include "msig/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace msig {

namespace {

void check_input(const std::vector<double>& times, const std::vector<double>& m) {
    if (times.size() < 4) throw std::invalid_argument("smoothing needs at least 4 points");
    if (times.size() != m.size()) throw std::invalid_argument("times and values differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("smoothing needs strictly ascending times");
}

// Natural-spline second derivatives at the knots (M_0 = M_{N-1} = 0), Thomas solve.
std::vector<double> spline_m2(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];

    const std::size_t m = n - 2;  // interior knots
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
    }
    for (std::size_t i = 1; i < m; ++i) {
        const double w = h[i] / diag[i - 1];  // lower band equals h[i]
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> mm(n, 0.0);
    if (m > 0) {
        mm[m] = rhs[m - 1] / diag[m - 1];
        for (std::size_t i = m - 1; i-- > 0;) mm[i + 1] = (rhs[i] - upper[i] * mm[i + 2]) / diag[i];
    }
    return mm;
}

}  // namespace

SmoothedMean smooth_sample_mean(const std::vector<double>& times, const std::vector<double>& m,
                                SmoothMethod method, double bandwidth_frac) {
    check_input(times, m);
    SmoothedMean s;
    s.method_ = method;
    s.times_ = times;
    s.values_ = m;
    if (method == SmoothMethod::NaturalCubicSpline) {
        s.m2_ = spline_m2(times, m);
    } else {
        if (!(bandwidth_frac > 0.0)) throw std::invalid_argument("bandwidth fraction must be positive");
        s.bandwidth_ = bandwidth_frac * (times.back() - times.front());
    }
    return s;
}

std::array<double, 3> SmoothedMean::local_fit(double t) const {
    double bw = bandwidth_;
    for (int widen = 0; widen < 8; ++widen) {
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d atb = Eigen::Vector3d::Zero();
        int used = 0;
        for (std::size_t i = 0; i < times_.size(); ++i) {
            const double d = std::abs(times_[i] - t) / bw;
            if (d >= 1.0) continue;
            const double u = 1.0 - d * d * d;
            const double w = u * u * u;  // tricube
            const double dt = times_[i] - t;
            const Eigen::Vector3d row(1.0, dt, dt * dt);
            ata += w * row * row.transpose();
            atb += w * row * values_[i];
            ++used;
        }
        if (used >= 3) {
            Eigen::Vector3d c = ata.ldlt().solve(atb);
            if (c.allFinite()) return {c(0), c(1), 2.0 * c(2)};
        }
        bw *= 1.5;  // too few points in the window: widen
    }
    throw std::runtime_error("local polynomial window could not cover 3 points");
}

double SmoothedMean::value(double t) const {
    if (method_ == SmoothMethod::LocalPoly) return local_fit(t)[0];
    const double tc = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), tc);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - times_.begin() - 1, 0), times_.size() - 2);
    const double h = times_[i + 1] - times_[i];
    const double a = (times_[i + 1] - tc) / h, b = (tc - times_[i]) / h;
    return a * values_[i] + b * values_[i + 1] +
           ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) * h * h / 6.0;
}

double SmoothedMean::deriv1(double t) const {
    if (method_ == SmoothMethod::LocalPoly) return local_fit(t)[1];
    const double tc = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), tc);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - times_.begin() - 1, 0), times_.size() - 2);
    const double h = times_[i + 1] - times_[i];
    const double a = (times_[i + 1] - tc) / h, b = (tc - times_[i]) / h;
    return (values_[i + 1] - values_[i]) / h +
           h / 6.0 * (-(3.0 * a * a - 1.0) * m2_[i] + (3.0 * b * b - 1.0) * m2_[i + 1]);
}

double SmoothedMean::deriv2(double t) const {
    if (method_ == SmoothMethod::LocalPoly) return local_fit(t)[2];
    const double tc = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), tc);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - times_.begin() - 1, 0), times_.size() - 2);
    const double h = times_[i + 1] - times_[i];
    const double a = (times_[i + 1] - tc) / h, b = (tc - times_[i]) / h;
    return a * m2_[i] + b * m2_[i + 1];
}

InflectionSet sample_inflections(const std::vector<double>& times, const std::vector<double>& m,
                                 SmoothMethod method, double bandwidth_frac) {
    SmoothedMean sm = smooth_sample_mean(times, m, method, bandwidth_frac);
    const double lo = sm.t_min(), hi = sm.t_max();
    const long grid_n = std::max<long>(1000, static_cast<long>(10.0 * (hi - lo)));

    auto g = [&](double t) {
        double v = sm.deriv2(t);
        if (!std::isfinite(v)) throw std::runtime_error("non-finite smoothed second derivative");
        return v;
    };

    std::vector<double> ts(grid_n), vs(grid_n);
    const double h = (hi - lo) / static_cast<double>(grid_n - 1);
    for (long i = 0; i < grid_n; ++i) {
        ts[i] = (i + 1 == grid_n) ? hi : lo + h * static_cast<double>(i);
        vs[i] = g(ts[i]);
    }

    InflectionSet out;
    for (long i = 0; i + 1 < grid_n; ++i) {
        if (vs[i] * vs[i + 1] >= 0.0) continue;
        double a = ts[i], b = ts[i + 1], ga = vs[i];
        for (int it = 0; it < 200 && (b - a) > 1e-8; ++it) {
            const double mid = 0.5 * (a + b);
            const double gm = g(mid);
            if (gm == 0.0) { a = b = mid; break; }
            if (ga * gm < 0.0) b = mid;
            else { a = mid; ga = gm; }
        }
        const double root = 0.5 * (a + b);
        if (!out.instants.empty() && root - out.instants.back() <= 1e-6) continue;
        out.instants.push_back(root);
        out.residuals.push_back(sm.deriv2(root));
    }
    return out;
}

}  // namespace msig
