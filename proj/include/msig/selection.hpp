#pragma once

#include <string>
#include <utility>
#include <vector>

#include "msig/mle.hpp"

namespace msig {

// Mean absolute relative error between the cross-sectional mean and the fitted
// mean function, over all grid points.
double rae(const SamplePathSet& sps, const MleResult& fitted);

// q = p + 2 free parameters (alpha, beta_1..beta_p, sigma^2), plus 2 more when the
// initial law is a nondegenerate lognormal; n_obs is the matching sample size.
std::pair<double, double> aic_bic(const MleResult& mle, long n_obs);

// Transition count, plus d when the nondegenerate initial-law block is present.
long aic_sample_size(const SamplePathSet& sps, const MleResult& mle);

// Kullback-Leibler divergence at one grid point between the sample log-scale
// Gaussian (ln m_i^g, 2 ln(m_i/m_i^g)) and the fitted model's law of ln X(t_i).
// Points with zero model variance (t_i = t0) or zero sample variance (m_i = m_i^g)
// are rejected with a domain error; series builders skip and count them.
double kl_sample_vs_model(double m_i, double m_g_i, double t_i, double t0, const MleResult& mle);

// d_fwd * d_bwd / (d_fwd + d_bwd); zero when either side is zero.
double resistor_average(double d_fwd, double d_bwd);

struct DraSeries {
    std::vector<std::pair<double, double>> series;  // (t_i, D_RA); excludes t0
    double mean = 0.0;
    double median = 0.0;
    int skipped = 0;
};

// Resistor-average of the two one-way divergences at every usable grid point.
DraSeries dra_series(const SamplePathSet& sps, const MleResult& mle);

// Variant for simulation studies: the theoretical law of ln X(t_i) under `truth`
// replaces the sample pair.
DraSeries dra_series_theoretical(const ProcessParams& truth, const InitialLaw& init,
                                 const std::vector<double>& times, double t0, const MleResult& mle);

enum class Criterion { Rae, Aic, Bic, DraMean, DraMedian };
Criterion criterion_from_name(const std::string& name);
std::string criterion_name(Criterion c);

struct DegreeReport {
    int degree;
    MleResult mle;
    double rae;
    double aic, bic;
    std::vector<std::pair<double, double>> dra_series;
    double dra_mean, dra_median;
    int dra_skipped;
};

DegreeReport make_degree_report(const SamplePathSet& sps, const MleResult& mle);

struct SelectionResult {
    std::vector<DegreeReport> reports;  // ascending degree
    int chosen_degree;
    std::string criterion;
    std::string stop_reason;
};

// Fits ascending degrees from p_min; after the first degree that fails to improve
// the criterion strictly, fits exactly one more (parity rule) and stops, capped at
// p_max. Non-converged fits are recorded but count as non-improving and are not
// eligible as the chosen degree while any converged fit exists.
SelectionResult forward_select(const SamplePathSet& sps, int p_min, int p_max, Criterion criterion,
                               const SolverOptions& opts = {});

}  // namespace msig
