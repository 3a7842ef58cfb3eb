#pragma once

#include <vector>

#include "msig/polynomial.hpp"

namespace msig {

// Curve parameters theta = (alpha, Q_beta).
// The checked constructor enforces alpha > 0, a zero constant term, degree >= 1
// and a strictly positive leading coefficient. `fitted` keeps the structural
// checks but skips the sign checks: unconstrained estimation can produce
// violations, which are reported as warnings by the caller instead.
struct CurveParams {
    double alpha;
    Polynomial q;

    CurveParams(double alpha_, Polynomial q_);
    static CurveParams fitted(double alpha_, Polynomial q_);

    std::vector<double> beta() const { return drift_coefficients(q); }
    int p() const { return q.degree(); }

private:
    struct unchecked_tag {};
    CurveParams(unchecked_tag, double alpha_, Polynomial q_);
};

// Inflection candidates: ascending instants plus the root-condition residual at each.
struct InflectionSet {
    std::vector<double> instants;
    std::vector<double> residuals;
};

// f0 * exp(-alpha * (e^{-Q(t)} - e^{-Q(t0)})); requires t >= t0.
double curve_value(const CurveParams& cp, double f0, double t0, double t);

// Upper limit of the curve, f0 * exp(alpha * e^{-Q(t0)}).
double carrying_capacity(const CurveParams& cp, double f0, double t0);

// h(t) = alpha * P(t) * e^{-Q(t)} with P = dQ/dt.
double growth_rate(const CurveParams& cp, double t);

// g(t) = P'(t) - P(t)^2 * (1 - alpha e^{-Q(t)}); zero at inflection candidates.
// The curve's second derivative equals f * alpha * e^{-Q} * g, so a sign change
// of g is exactly a sign change of the second derivative.
double inflection_residual(const CurveParams& cp, double t);

// Brackets sign changes of the residual on a uniform grid and refines each by
// bisection to 1e-8 in t. grid_n = 0 picks 10*(t_hi - t_lo) points, at least 1000.
// Tangential zeros (no sign change) are excluded; roots closer than 1e-6 are merged.
InflectionSet find_inflections(const CurveParams& cp, double t_lo, double t_hi, long grid_n = 0);

// Maps parameters of a curve in shifted time s = t - t0 back to original time:
// beta_0 = sum_j gamma_j (-t0)^j, beta_m = sum_{j>=m} gamma_j C(j,m) (-t0)^{j-m},
// alpha = eta * e^{-beta_0}, so that Q~_gamma(t - t0) = beta_0 + Q_beta(t).
CurveParams shift_time_origin(const Polynomial& gamma, double eta, double t0);

}  // namespace msig
