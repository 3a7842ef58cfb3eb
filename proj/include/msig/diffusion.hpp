#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "msig/curve.hpp"

namespace msig {

// xi = (theta, sigma^2); sigma2 = 0 is admitted only for deterministic-path testing.
struct ProcessParams {
    CurveParams curve;
    double sigma2;

    ProcessParams(CurveParams c, double s2);
};

// Distribution of X(t0): a point mass at x0 or a one-dimensional lognormal.
struct InitialLaw {
    enum class Kind { Degenerate, Lognormal };
    Kind kind = Kind::Degenerate;
    double x0 = 1.0;         // degenerate case
    double mu1 = 0.0;        // lognormal case
    double sigma1_sq = 0.0;  // lognormal case

    static InitialLaw degenerate(double x0);
    static InitialLaw lognormal(double mu1, double sigma1_sq);

    double mean() const;  // E[X0]
};

struct SamplePath {
    std::vector<double> times;
    std::vector<double> values;
};

// d discretely observed trajectories; every path starts at the common instant t0.
struct SamplePathSet {
    std::vector<SamplePath> paths;
    double t0 = 0.0;
};

// Throws std::invalid_argument naming the first violated invariant.
void validate(const SamplePathSet& sps);

// True when all paths share one identical time grid.
bool has_common_grid(const SamplePathSet& sps);

// H(s,t) = -alpha (e^{-Q(t)} - e^{-Q(s)}) - (sigma^2/2)(t - s); requires s <= t.
double big_h(const ProcessParams& pp, double s, double t);

// Log-density at x of the lognormal transition law of X(t) given X(s) = y.
double transition_logpdf(const ProcessParams& pp, double y, double s, double x, double t);

// E[X(t)] under the given initial law; requires t >= t0.
double mean(const ProcessParams& pp, const InitialLaw& init, double t, double t0);

// E[X(t) | X(t0) = x0]; coincides with curve_value and is free of sigma^2.
double conditional_mean(const ProcessParams& pp, double x0, double t0, double t);

// Mean vector and covariance matrix of (ln X(t_1), .., ln X(t_n)) for a lognormal
// start (a degenerate start enters as sigma0^2 = 0).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> fdd_params(const ProcessParams& pp, const InitialLaw& init,
                                                       double t0, const std::vector<double>& times);

// Exact-in-distribution simulation on the uniform grid t0 + j dt, j = 0..n_points-1.
// Deterministic per seed; per-path substreams keep the output independent of the
// thread count (capped by GOMPERTZ_MSIG_THREADS).
SamplePathSet simulate(const ProcessParams& pp, const InitialLaw& init, double t0, double dt,
                       int n_points, int n_paths, std::uint64_t seed);

// Keeps grid indices 0, step, 2*step, ... independently per path.
SamplePathSet subsample(const SamplePathSet& sps, int step);

struct CrossSectionalMeans {
    std::vector<double> times;
    std::vector<double> arithmetic;  // m_i
    std::vector<double> geometric;   // m_i^g, never above m_i
};

// Requires a common grid across paths.
CrossSectionalMeans cross_sectional_means(const SamplePathSet& sps);

// Parallelism cap: GOMPERTZ_MSIG_THREADS when set, else hardware concurrency.
int thread_budget();

}  // namespace msig
