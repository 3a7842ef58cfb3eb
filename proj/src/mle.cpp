#include "msig/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "msig/rng.hpp"

namespace msig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double powi(double t, int l) {
    double r = 1.0;
    for (int k = 0; k < l; ++k) r *= t;
    return r;
}

// Aggregates needed by the score system and its Jacobian, with X_l, W_l for
// l = 0..L and the full matrix Y_{a,b} = sum sum phi^a phi^b / delta.
struct ExtStats {
    double z1 = 0.0, z2 = 0.0, z3 = 0.0;
    long n = 0;
    Eigen::VectorXd x, w;
    Eigen::MatrixXd y;
};

ExtStats ext_stats(const VTransform& vt, const TimeGrids& times, const Polynomial& q, int L) {
    ExtStats st;
    st.n = vt.n;
    st.x = Eigen::VectorXd::Zero(L + 1);
    st.w = Eigen::VectorXd::Zero(L + 1);
    st.y = Eigen::MatrixXd::Zero(L + 1, L + 1);

    std::vector<double> g_lo(L + 1), g_hi(L + 1), ph(L + 1);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto& ts = times[i];
        const auto& vs = vt.v1[i];
        const auto& ds = vt.deltas[i];
        double eq = std::exp(-poly_eval(q, ts[0]));
        for (int l = 0; l <= L; ++l) g_lo[l] = powi(ts[0], l) * eq;
        std::vector<double> g_first = g_lo;
        for (std::size_t j = 0; j + 1 < ts.size(); ++j) {
            const double th = ts[j + 1];
            eq = std::exp(-poly_eval(q, th));
            for (int l = 0; l <= L; ++l) g_hi[l] = powi(th, l) * eq;
            const double d = ds[j];
            const double sq = std::sqrt(d);
            const double v = vs[j];
            for (int l = 0; l <= L; ++l) ph[l] = g_hi[l] - g_lo[l];
            for (int a = 0; a <= L; ++a) {
                st.x(a) += v * ph[a] / sq;
                for (int b = a; b <= L; ++b) st.y(a, b) += ph[a] * ph[b] / d;
            }
            st.z1 += v * v;
            st.z2 += v * sq;
            g_lo.swap(g_hi);
        }
        for (int l = 0; l <= L; ++l) st.w(l) += g_lo[l] - g_first[l];
        st.z3 += ts.back() - ts.front();
    }
    for (int a = 0; a <= L; ++a)
        for (int b = 0; b < a; ++b) st.y(a, b) = st.y(b, a);
    return st;
}

Eigen::VectorXd score_from_stats(const ExtStats& st, double alpha, double sigma2, int p) {
    Eigen::VectorXd r(p + 2);
    for (int l = 0; l <= p; ++l) r(l) = st.x(l) + alpha * st.y(0, l) + 0.5 * sigma2 * st.w(l);
    r(p + 1) = sigma2 * (static_cast<double>(st.n) + sigma2 * st.z3 / 4.0) -
               alpha * (2.0 * st.x(0) + alpha * st.y(0, 0)) - st.z1;
    return r;
}

}  // namespace

VTransform v_transform(const SamplePathSet& sps) {
    validate(sps);
    VTransform vt;
    for (const auto& path : sps.paths) {
        if (path.times.size() < 2)
            throw std::invalid_argument("v transform needs at least 2 observations per path");
        vt.v0.push_back(path.values.front());
        std::vector<double> v, d;
        v.reserve(path.times.size() - 1);
        d.reserve(path.times.size() - 1);
        for (std::size_t j = 0; j + 1 < path.times.size(); ++j) {
            const double delta = path.times[j + 1] - path.times[j];
            d.push_back(delta);
            v.push_back(std::log(path.values[j + 1] / path.values[j]) / std::sqrt(delta));
        }
        vt.n += static_cast<long>(v.size());
        vt.v1.push_back(std::move(v));
        vt.deltas.push_back(std::move(d));
    }
    return vt;
}

Eta estimate_initial_law(const VTransform& vt) {
    if (vt.v0.empty()) throw std::invalid_argument("estimate_initial_law needs d >= 1");
    // identical starts are exactly degenerate; the averaged log can round by one
    // ulp and would otherwise produce a spurious positive variance
    if (std::all_of(vt.v0.begin(), vt.v0.end(), [&](double v) { return v == vt.v0.front(); }))
        return Eta{std::log(vt.v0.front()), 0.0};
    const double d = static_cast<double>(vt.v0.size());
    double mu = 0.0;
    for (double v : vt.v0) mu += std::log(v);
    mu /= d;
    double var = 0.0;
    for (double v : vt.v0) {
        const double z = std::log(v) - mu;
        var += z * z;
    }
    return Eta{mu, var / d};
}

double phi(const Polynomial& q, int l, double t_hi, double t_lo) {
    return powi(t_hi, l) * std::exp(-poly_eval(q, t_hi)) - powi(t_lo, l) * std::exp(-poly_eval(q, t_lo));
}

TimeGrids time_grids(const SamplePathSet& sps) {
    TimeGrids g;
    g.reserve(sps.paths.size());
    for (const auto& p : sps.paths) g.push_back(p.times);
    return g;
}

SummaryStats summary_stats(const VTransform& vt, const TimeGrids& times, const Polynomial& q, int p) {
    if (p != q.degree()) throw std::invalid_argument("summary_stats requires p == degree of beta");
    ExtStats st = ext_stats(vt, times, q, p);
    SummaryStats out;
    out.z1 = st.z1;
    out.z2 = st.z2;
    out.z3 = st.z3;
    out.x.assign(st.x.data(), st.x.data() + p + 1);
    out.w.assign(st.w.data(), st.w.data() + p + 1);
    out.y.resize(p + 1);
    for (int l = 0; l <= p; ++l) out.y[l] = st.y(0, l);
    return out;
}

double loglik(const VTransform& vt, const TimeGrids& times, const Eta& eta, const ProcessParams& pp) {
    if (!(pp.sigma2 > 0.0)) throw std::domain_error("loglik requires sigma2 > 0");
    const double alpha = pp.curve.alpha;
    const double s2 = pp.sigma2;
    ExtStats st = ext_stats(vt, times, pp.curve.q, 0);
    const double phi_term = alpha * alpha * st.y(0, 0) + 0.25 * s2 * s2 * st.z3 + alpha * s2 * st.w(0);
    const double gamma_term = -alpha * st.x(0) - 0.5 * s2 * st.z2;
    double L = -0.5 * static_cast<double>(st.n) * std::log(2.0 * M_PI * s2) -
               (st.z1 + phi_term - 2.0 * gamma_term) / (2.0 * s2);
    if (eta.sigma1_sq > 0.0) {
        for (double v : vt.v0) {
            const double z = std::log(v) - eta.mu1;
            L += -std::log(v) - 0.5 * std::log(2.0 * M_PI * eta.sigma1_sq) - z * z / (2.0 * eta.sigma1_sq);
        }
    }
    return L;
}

Eigen::VectorXd score_residuals(const VTransform& vt, const TimeGrids& times, const ProcessParams& pp) {
    if (!(pp.sigma2 > 0.0)) throw std::domain_error("score_residuals requires sigma2 > 0");
    const int p = pp.curve.p();
    ExtStats st = ext_stats(vt, times, pp.curve.q, p);
    return score_from_stats(st, pp.curve.alpha, pp.sigma2, p);
}

Eigen::MatrixXd score_jacobian(const VTransform& vt, const TimeGrids& times, const ProcessParams& pp) {
    const int p = pp.curve.p();
    const double alpha = pp.curve.alpha;
    const double s2 = pp.sigma2;
    ExtStats st = ext_stats(vt, times, pp.curve.q, 2 * p);
    Eigen::MatrixXd J(p + 2, p + 2);
    for (int l = 0; l <= p; ++l) {
        J(l, 0) = st.y(0, l);
        for (int r = 1; r <= p; ++r)
            J(l, r) = -st.x(l + r) - alpha * (st.y(r, l) + st.y(0, l + r)) - 0.5 * s2 * st.w(l + r);
        J(l, p + 1) = 0.5 * st.w(l);
    }
    J(p + 1, 0) = -2.0 * st.x(0) - 2.0 * alpha * st.y(0, 0);
    for (int r = 1; r <= p; ++r) J(p + 1, r) = 2.0 * alpha * st.x(r) + 2.0 * alpha * alpha * st.y(0, r);
    J(p + 1, p + 1) = static_cast<double>(st.n) + 0.5 * s2 * st.z3;
    return J;
}

ProcessParams initial_guess(const SamplePathSet& sps, int p, std::vector<std::string>* warnings) {
    if (p < 1) throw std::invalid_argument("initial_guess requires p >= 1");
    CrossSectionalMeans cs = cross_sectional_means(sps);
    const auto n_grid = cs.times.size();
    const double k = cs.arithmetic.back();

    std::vector<double> tt, yy;
    for (std::size_t i = 0; i < n_grid; ++i) {
        if (cs.arithmetic[i] >= k * (1.0 - 1e-9)) continue;  // removes at least the final point
        tt.push_back(cs.times[i]);
        yy.push_back(std::log(std::log(k / cs.arithmetic[i])));
    }
    if (tt.size() < static_cast<std::size_t>(p + 2))
        throw std::runtime_error("initial guess needs at least p+2 usable mean points");

    Eigen::MatrixXd A(tt.size(), p + 1);
    Eigen::VectorXd b(tt.size());
    for (std::size_t i = 0; i < tt.size(); ++i) {
        for (int l = 0; l <= p; ++l) A(i, l) = powi(tt[i], l);
        b(i) = yy[i];
    }
    Eigen::VectorXd coef = A.completeOrthogonalDecomposition().solve(b);
    const double alpha0 = std::exp(coef(0));
    std::vector<double> beta0(p);
    for (int l = 1; l <= p; ++l) beta0[l - 1] = -coef(l);

    // sigma^2 estimate: sigma_i^2 = 2 ln(m_i/m_i^g) estimates sigma^2 (t_i - t0) exactly,
    // hence a zero-intercept regression on t_i - t0.
    double num = 0.0, den = 0.0, s2_sum = 0.0, tau_sum = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double tau = cs.times[i] - sps.t0;
        const double s2i = 2.0 * std::log(cs.arithmetic[i] / cs.geometric[i]);
        num += s2i * tau;
        den += tau * tau;
        s2_sum += s2i;
        tau_sum += tau;
    }
    double slope = den > 0.0 ? num / den : 0.0;
    if (!(slope > 0.0)) {
        slope = std::max(s2_sum / std::max(tau_sum, 1e-300), 1e-8);
        if (warnings)
            warnings->push_back("nonpositive sigma^2 slope in the initial regression; using the fallback floor");
    }
    return ProcessParams(CurveParams::fitted(alpha0, drift_polynomial(beta0)), slope);
}

namespace {

// Positive root of the sigma^2 score equation given (alpha, beta); the quadratic
// sigma^2 [n + sigma^2 Z3/4] = Z1 + 2 alpha X_0 + alpha^2 Y_0 has a nonnegative
// right side (a sum of squares), so the root exists whenever the stats are finite.
std::optional<double> profile_sigma2(const Eigen::VectorXd& x, const VTransform& vt, const TimeGrids& times,
                                     int p) {
    std::vector<double> beta(x.data() + 1, x.data() + 1 + p);
    ExtStats st = ext_stats(vt, times, drift_polynomial(beta), 0);
    const double alpha = x(0);
    const double c = st.z1 + 2.0 * alpha * st.x(0) + alpha * alpha * st.y(0, 0);
    if (!std::isfinite(c) || c <= 0.0 || st.z3 <= 0.0) return std::nullopt;
    const double n = static_cast<double>(st.n);
    const double s2 = (-n + std::sqrt(n * n + st.z3 * c)) / (st.z3 / 2.0);
    if (!std::isfinite(s2) || !(s2 > 0.0)) return std::nullopt;
    return s2;
}

// Variance-weighted variant of the log-log regression; under lognormal noise the
// variance of ln ln(k/m) scales like 1/u^2 with u = ln(k/m), so the weights are u^2.
std::optional<Eigen::VectorXd> wls_guess(const SamplePathSet& sps, const VTransform& vt,
                                         const TimeGrids& times, int p) {
    CrossSectionalMeans cs = cross_sectional_means(sps);
    const double k = cs.arithmetic.back();
    std::vector<double> tt, uu;
    for (std::size_t i = 0; i < cs.times.size(); ++i) {
        if (cs.arithmetic[i] >= k * (1.0 - 1e-9)) continue;
        tt.push_back(cs.times[i]);
        uu.push_back(std::log(k / cs.arithmetic[i]));
    }
    if (tt.size() < static_cast<std::size_t>(p + 2)) return std::nullopt;
    Eigen::MatrixXd A(tt.size(), p + 1);
    Eigen::VectorXd b(tt.size());
    for (std::size_t i = 0; i < tt.size(); ++i) {
        const double w = uu[i];  // sqrt of the weight u^2
        for (int l = 0; l <= p; ++l) A(i, l) = powi(tt[i], l) * w;
        b(i) = std::log(uu[i]) * w;
    }
    Eigen::VectorXd coef = A.completeOrthogonalDecomposition().solve(b);
    Eigen::VectorXd x(p + 2);
    x(0) = std::exp(coef(0));
    for (int l = 1; l <= p; ++l) x(l) = -coef(l);
    x(p + 1) = 1e-4;
    if (auto s2 = profile_sigma2(x, vt, times, p)) x(p + 1) = *s2;
    return x;
}

struct NewtonOutcome {
    Eigen::VectorXd x;
    bool converged = false;
    double max_resid = kInf;
    int iterations = 0;
    int restarts_used = 0;
};

NewtonOutcome newton_solve(const Eigen::VectorXd& guess, const VTransform& vt, const TimeGrids& times,
                           const SamplePathSet& sps, int p, const SolverOptions& opts) {
    constexpr double kStepExitResidCap = 1e-8;  // a step-size exit only counts as converged below this
    static const double kLambdas[] = {0.0, 1e-8, 1e-5, 1e-2, 1.0, 1e2};

    GaussianStream noise(opts.noise_seed);
    auto perturb = [&](const Eigen::VectorXd& base, double rel) {
        Eigen::VectorXd out = base;
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = base(i) * (1.0 + rel * noise.next());
        return out;
    };

    auto eval_score = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        std::vector<double> beta(x.data() + 1, x.data() + 1 + p);
        ExtStats st = ext_stats(vt, times, drift_polynomial(beta), p);
        return score_from_stats(st, x(0), x(p + 1), p);
    };
    auto eval_jac = [&](const Eigen::VectorXd& x) {
        std::vector<double> beta(x.data() + 1, x.data() + 1 + p);
        ExtStats st = ext_stats(vt, times, drift_polynomial(beta), 2 * p);
        Eigen::MatrixXd J(p + 2, p + 2);
        const double alpha = x(0), s2 = x(p + 1);
        for (int l = 0; l <= p; ++l) {
            J(l, 0) = st.y(0, l);
            for (int r = 1; r <= p; ++r)
                J(l, r) = -st.x(l + r) - alpha * (st.y(r, l) + st.y(0, l + r)) - 0.5 * s2 * st.w(l + r);
            J(l, p + 1) = 0.5 * st.w(l);
        }
        J(p + 1, 0) = -2.0 * st.x(0) - 2.0 * alpha * st.y(0, 0);
        for (int r = 1; r <= p; ++r) J(p + 1, r) = 2.0 * alpha * st.x(r) + 2.0 * alpha * alpha * st.y(0, r);
        J(p + 1, p + 1) = static_cast<double>(st.n) + 0.5 * s2 * st.z3;
        return J;
    };

    NewtonOutcome out;
    std::optional<Eigen::VectorXd> wls;
    bool wls_tried = false;
    auto ensure_wls = [&]() {
        if (!wls_tried) {
            wls = wls_guess(sps, vt, times, p);
            wls_tried = true;
        }
        return wls.has_value();
    };

    for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        Eigen::VectorXd x;
        if (attempt == 0) {
            x = guess;
        } else if (attempt <= 2) {
            x = perturb(guess, 0.01);
        } else if (attempt == 3 || attempt == 4) {
            if (!ensure_wls() || !wls) continue;
            x = attempt == 3 ? *wls : perturb(*wls, 0.01);
        } else {
            const Eigen::VectorXd& base = (attempt % 2 == 1 || !ensure_wls()) ? guess : *wls;
            const double big = base.cwiseAbs().maxCoeff();
            x = base;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double scale = 0.25 * std::max(std::abs(base(i)), big * 0.01 + 1e-12);
                x(i) = base(i) + scale * noise.next();
            }
            if (auto s2 = profile_sigma2(x, vt, times, p)) x(p + 1) = *s2;
        }
        if (!x.allFinite()) continue;
        if (!(x(p + 1) > 0.0)) x(p + 1) = std::abs(x(p + 1)) + 1e-10;

        Eigen::VectorXd r = eval_score(x);
        if (!r.allFinite()) continue;
        double mr = r.cwiseAbs().maxCoeff();
        if (mr < out.max_resid) {
            out.max_resid = mr;
            out.x = x;
            out.restarts_used = attempt;
        }

        for (int it = 0; it < opts.max_iter; ++it) {
            Eigen::MatrixXd J = eval_jac(x);
            if (!J.allFinite()) break;
            Eigen::VectorXd cs = J.cwiseAbs().colwise().maxCoeff().cwiseMax(1e-300);
            Eigen::MatrixXd Js = J * cs.cwiseInverse().asDiagonal();
            const double rn = r.norm();

            bool moved = false;
            double lam_step = 1.0;
            Eigen::VectorXd dx;
            for (double lambda : kLambdas) {
                Eigen::VectorXd dy;
                if (lambda == 0.0) {
                    dy = Js.completeOrthogonalDecomposition().solve(-r);
                } else {
                    Eigen::MatrixXd AtA = Js.transpose() * Js;
                    AtA += (lambda * AtA.diagonal().cwiseMax(1e-300)).asDiagonal().toDenseMatrix();
                    dy = AtA.ldlt().solve(-Js.transpose() * r);
                }
                Eigen::VectorXd cand = dy.cwiseQuotient(cs);
                if (!cand.allFinite()) continue;
                lam_step = 1.0;
                for (int h = 0; h <= opts.max_halvings; ++h) {
                    Eigen::VectorXd xn = x + lam_step * cand;
                    if (xn(p + 1) > 0.0) {
                        Eigen::VectorXd rn_new = eval_score(xn);
                        if (rn_new.allFinite() && rn_new.norm() < rn) {
                            x = std::move(xn);
                            r = std::move(rn_new);
                            dx = std::move(cand);
                            moved = true;
                            break;
                        }
                    }
                    lam_step *= 0.5;
                }
                if (moved) break;
            }
            ++out.iterations;
            if (!moved) break;  // stalled in every direction: restart

            mr = r.cwiseAbs().maxCoeff();
            if (mr < out.max_resid) {
                out.max_resid = mr;
                out.x = x;
                out.restarts_used = attempt;
            }
            if (mr < opts.tol_residual) {
                out.converged = true;
                out.x = x;
                out.max_resid = mr;
                out.restarts_used = attempt;
                return out;
            }
            const double rel_step = (lam_step * dx).norm() / std::max(x.norm(), 1e-300);
            if (rel_step < opts.tol_step) {
                if (mr < kStepExitResidCap) {
                    out.converged = true;
                    out.x = x;
                    out.max_resid = mr;
                    out.restarts_used = attempt;
                    return out;
                }
                break;  // flat but unconverged: restart
            }
        }
    }
    return out;
}

}  // namespace

MleResult fit(const SamplePathSet& sps, int p, const SolverOptions& opts) {
    if (p < 1) throw std::invalid_argument("fit requires p >= 1");
    VTransform vt = v_transform(sps);
    TimeGrids times = time_grids(sps);

    std::vector<std::string> warnings;
    ProcessParams start = initial_guess(sps, p, &warnings);

    Eigen::VectorXd x0(p + 2);
    x0(0) = start.curve.alpha;
    {
        auto beta = start.curve.beta();
        for (int l = 0; l < p; ++l) x0(l + 1) = beta[l];
    }
    x0(p + 1) = start.sigma2;

    NewtonOutcome sol = newton_solve(x0, vt, times, sps, p, opts);
    if (sol.x.size() == 0) {  // every attempt produced non-finite residuals
        sol.x = x0;
        sol.max_resid = kInf;
    }

    std::vector<double> beta_hat(sol.x.data() + 1, sol.x.data() + 1 + p);
    ProcessParams xi(CurveParams::fitted(sol.x(0), drift_polynomial(beta_hat)),
                     std::max(sol.x(p + 1), 0.0));
    if (!(xi.curve.alpha > 0.0)) warnings.push_back("fitted alpha is not positive");
    if (!(beta_hat.back() > 0.0)) warnings.push_back("fitted leading drift coefficient is not positive");

    Eta eta = estimate_initial_law(vt);
    double ll = -kInf;
    if (xi.sigma2 > 0.0) {
        ll = loglik(vt, times, eta, xi);
        if (!std::isfinite(ll)) ll = -kInf;
    }

    MleResult res{xi, eta, ll, sol.iterations, sol.converged, sol.max_resid,
                  start, sol.restarts_used, std::move(warnings)};
    return res;
}

}  // namespace msig
