#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msig/diffusion.hpp"

namespace msig {

// Change of variables: initial observations plus normalized log-increments.
struct VTransform {
    std::vector<double> v0;                   // v_{0i} = x_{i1}
    std::vector<std::vector<double>> v1;      // v_{ij} = ln(x_{i,j+1}/x_{ij}) / sqrt(delta)
    std::vector<std::vector<double>> deltas;  // t_{i,j+1} - t_{ij}
    long n = 0;                               // total transitions, sum_i (n_i - 1)
};

VTransform v_transform(const SamplePathSet& sps);

// Parameters (mu1, sigma1_sq) of the initial lognormal law.
struct Eta {
    double mu1 = 0.0;
    double sigma1_sq = 0.0;
};

// Closed-form MLE of eta: sample mean and biased variance of ln v_{0i}.
Eta estimate_initial_law(const VTransform& vt);

// phi^l(t_hi, t_lo) = t_hi^l e^{-Q(t_hi)} - t_lo^l e^{-Q(t_lo)}.
double phi(const Polynomial& q, int l, double t_hi, double t_lo);

using TimeGrids = std::vector<std::vector<double>>;
TimeGrids time_grids(const SamplePathSet& sps);

// Sufficient aggregates of the score system; x, y, w are indexed l = 0..p and
// y[l] pairs phi^0 with phi^l.
struct SummaryStats {
    double z1 = 0.0, z2 = 0.0, z3 = 0.0;
    std::vector<double> x, y, w;
};

SummaryStats summary_stats(const VTransform& vt, const TimeGrids& times, const Polynomial& q, int p);

// Log-likelihood in V coordinates. The initial-law block is included only when
// eta.sigma1_sq > 0 (a degenerate start contributes no free parameters).
double loglik(const VTransform& vt, const TimeGrids& times, const Eta& eta, const ProcessParams& pp);

// Stationarity system in (alpha, beta_1..beta_p, sigma^2), length p + 2:
// residual l (l = 0..p) = X_l + alpha Y_l + (sigma^2/2) W_l,
// residual p+1 = sigma^2 [n + sigma^2 Z3/4] - alpha [2 X_0 + alpha Y_0] - Z1.
Eigen::VectorXd score_residuals(const VTransform& vt, const TimeGrids& times, const ProcessParams& pp);

// Analytic Jacobian of score_residuals, built from d phi^l / d beta_r = -phi^{l+r}.
Eigen::MatrixXd score_jacobian(const VTransform& vt, const TimeGrids& times, const ProcessParams& pp);

// Regression-based starting point: log-log fit of the cross-sectional means for
// (alpha, beta) and a zero-intercept regression of 2 ln(m_i/m_i^g) on t_i - t0
// for sigma^2. Appends to `warnings` when the sigma^2 fallback floor is used.
ProcessParams initial_guess(const SamplePathSet& sps, int p, std::vector<std::string>* warnings = nullptr);

struct SolverOptions {
    int max_iter = 1000;          // Newton iterations per attempt
    double tol_residual = 1e-10;  // converged when max |residual| < tol_residual
    double tol_step = 1e-12;      // or when the relative parameter change drops below this
    int max_halvings = 30;
    int max_restarts = 5;                      // perturbed restarts after the plain attempt
    std::uint64_t noise_seed = 987654321ULL;   // restart perturbations are deterministic
};

struct MleResult {
    ProcessParams xi_hat;
    Eta eta_hat;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    double residual_norm = 0.0;  // max |score residual| at xi_hat
    ProcessParams initial_guess;
    int restarts_used = 0;  // attempt index that produced the retained iterate (0 = plain start)
    std::vector<std::string> warnings;

    int degree() const { return xi_hat.curve.p(); }
};

// Newton-Raphson on the score system from the regression starting point, with
// damped steps, a Levenberg-Marquardt fallback when the plain direction stalls,
// and a deterministic restart schedule (multiplicative noise, a variance-weighted
// regression restart, additive noise with profiled sigma^2). Non-convergence is
// reported via converged = false with the best iterate retained.
MleResult fit(const SamplePathSet& sps, int p, const SolverOptions& opts = {});

}  // namespace msig
