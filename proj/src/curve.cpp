#include "msig/curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace msig {

namespace {

void check_structure(const Polynomial& q) {
    if (q.degree() < 1) throw std::invalid_argument("drift polynomial needs degree >= 1");
    if (q.coeffs[0] != 0.0) throw std::invalid_argument("drift polynomial needs a zero constant term");
}

}  // namespace

CurveParams::CurveParams(double alpha_, Polynomial q_) : alpha(alpha_), q(std::move(q_)) {
    check_structure(q);
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(q.coeffs.back() > 0.0)) throw std::invalid_argument("leading drift coefficient must be positive");
}

CurveParams::CurveParams(unchecked_tag, double alpha_, Polynomial q_) : alpha(alpha_), q(std::move(q_)) {
    check_structure(q);
}

CurveParams CurveParams::fitted(double alpha_, Polynomial q_) {
    return CurveParams(unchecked_tag{}, alpha_, std::move(q_));
}

double curve_value(const CurveParams& cp, double f0, double t0, double t) {
    if (!(f0 > 0.0)) throw std::invalid_argument("f0 must be positive");
    if (t < t0) throw std::domain_error("curve_value requires t >= t0");
    double e_t = std::exp(-poly_eval(cp.q, t));
    double e_t0 = std::exp(-poly_eval(cp.q, t0));
    return f0 * std::exp(-cp.alpha * (e_t - e_t0));
}

double carrying_capacity(const CurveParams& cp, double f0, double t0) {
    if (!(f0 > 0.0)) throw std::invalid_argument("f0 must be positive");
    return f0 * std::exp(cp.alpha * std::exp(-poly_eval(cp.q, t0)));
}

double growth_rate(const CurveParams& cp, double t) {
    Polynomial pder = poly_derivative(cp.q);
    return cp.alpha * poly_eval(pder, t) * std::exp(-poly_eval(cp.q, t));
}

double inflection_residual(const CurveParams& cp, double t) {
    Polynomial pd = poly_derivative(cp.q);
    double pval = poly_eval(pd, t);
    double pprime = pd.degree() >= 1 ? poly_eval(poly_derivative(pd), t) : 0.0;
    return pprime - pval * pval * (1.0 - cp.alpha * std::exp(-poly_eval(cp.q, t)));
}

InflectionSet find_inflections(const CurveParams& cp, double t_lo, double t_hi, long grid_n) {
    if (!(t_lo < t_hi)) throw std::invalid_argument("find_inflections requires t_lo < t_hi");
    if (grid_n == 0) grid_n = std::max<long>(1000, static_cast<long>(10.0 * (t_hi - t_lo)));
    if (grid_n < 2) throw std::invalid_argument("find_inflections requires grid_n >= 2");

    auto g = [&](double t) {
        double v = inflection_residual(cp, t);
        if (!std::isfinite(v)) throw std::runtime_error("non-finite inflection residual");
        return v;
    };

    std::vector<double> ts(grid_n), vs(grid_n);
    double h = (t_hi - t_lo) / static_cast<double>(grid_n - 1);
    for (long i = 0; i < grid_n; ++i) {
        ts[i] = (i + 1 == grid_n) ? t_hi : t_lo + h * static_cast<double>(i);
        vs[i] = g(ts[i]);
    }

    constexpr double kTolT = 1e-8;
    constexpr double kDedup = 1e-6;
    InflectionSet out;
    auto push_root = [&](double r) {
        if (!out.instants.empty() && r - out.instants.back() <= kDedup) return;
        out.instants.push_back(r);
        out.residuals.push_back(inflection_residual(cp, r));
    };

    for (long i = 0; i + 1 < grid_n; ++i) {
        if (vs[i] == 0.0) {
            // Exact grid zero: an inflection only if the residual changes sign around it.
            double before = 0.0, after = 0.0;
            for (long k = i - 1; k >= 0; --k)
                if (vs[k] != 0.0) { before = vs[k]; break; }
            for (long k = i + 1; k < grid_n; ++k)
                if (vs[k] != 0.0) { after = vs[k]; break; }
            if (before * after < 0.0) push_root(ts[i]);
            continue;
        }
        if (vs[i] * vs[i + 1] >= 0.0) continue;
        double a = ts[i], b = ts[i + 1], ga = vs[i];
        for (int it = 0; it < 200 && (b - a) > kTolT; ++it) {
            double m = 0.5 * (a + b);
            double gm = g(m);
            if (gm == 0.0) { a = b = m; break; }
            if (ga * gm < 0.0) b = m;
            else { a = m; ga = gm; }
        }
        push_root(0.5 * (a + b));
    }
    return out;
}

CurveParams shift_time_origin(const Polynomial& gamma, double eta, double t0) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    check_structure(gamma);
    int p = gamma.degree();

    // Pascal triangle up to degree p.
    std::vector<std::vector<double>> binom(p + 1);
    for (int j = 0; j <= p; ++j) {
        binom[j].assign(j + 1, 1.0);
        for (int m = 1; m < j; ++m) binom[j][m] = binom[j - 1][m - 1] + binom[j - 1][m];
    }

    auto powm = [](double base, int e) {
        double r = 1.0;
        for (int k = 0; k < e; ++k) r *= base;
        return r;
    };

    double beta0 = 0.0;
    for (int j = 1; j <= p; ++j) beta0 += gamma.coeffs[j] * powm(-t0, j);

    std::vector<double> c(p + 1, 0.0);
    for (int m = 1; m <= p; ++m)
        for (int j = m; j <= p; ++j) c[m] += gamma.coeffs[j] * binom[j][m] * powm(-t0, j - m);

    return CurveParams::fitted(eta * std::exp(-beta0), Polynomial(std::move(c)));
}

}  // namespace msig
