#pragma once

#include <array>
#include <vector>

#include "msig/curve.hpp"

namespace msig {

enum class SmoothMethod { NaturalCubicSpline, LocalPoly };

// Smoothed sample mean evaluable with two derivatives on [times.front(), times.back()].
// The spline interpolates the data exactly with zero second derivative at both ends;
// local_poly is a degree-2 weighted local regression (tricube kernel) whose bandwidth
// is a fraction of the time span.
class SmoothedMean {
public:
    double value(double t) const;
    double deriv1(double t) const;
    double deriv2(double t) const;
    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }

private:
    friend SmoothedMean smooth_sample_mean(const std::vector<double>&, const std::vector<double>&,
                                           SmoothMethod, double);
    SmoothedMean() = default;

    SmoothMethod method_ = SmoothMethod::NaturalCubicSpline;
    std::vector<double> times_, values_;
    std::vector<double> m2_;  // spline second derivatives at the knots
    double bandwidth_ = 0.0;

    std::array<double, 3> local_fit(double t) const;
};

SmoothedMean smooth_sample_mean(const std::vector<double>& times, const std::vector<double>& m,
                                SmoothMethod method, double bandwidth_frac = 0.15);

// Sign changes of the smoothed second derivative, located by grid bracketing and
// bisection; residuals hold the second derivative at each returned instant.
InflectionSet sample_inflections(const std::vector<double>& times, const std::vector<double>& m,
                                 SmoothMethod method, double bandwidth_frac = 0.15);

}  // namespace msig
