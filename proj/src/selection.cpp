#include "msig/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fitted_initial_mean(const MleResult& mle) {
    return std::exp(mle.eta_hat.mu1 + 0.5 * mle.eta_hat.sigma1_sq);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double gaussian_kl(double mu_a, double var_a, double mu_b, double var_b) {
    const double d = mu_a - mu_b;
    return 0.5 * (std::log(var_b / var_a) + var_a / var_b + d * d / var_b - 1.0);
}

// Resistor-average between the log-scale Gaussians (mu_s, v_s) and (mu_m, v_m).
DraSeries dra_from_pairs(const std::vector<double>& times, double t0,
                         const std::vector<double>& mu_s, const std::vector<double>& v_s,
                         const MleResult& mle) {
    const double e0 = fitted_initial_mean(mle);
    DraSeries out;
    std::vector<double> vals;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > t0) || !(v_s[i] > 0.0)) {
            ++out.skipped;
            continue;
        }
        const double v_m = mle.xi_hat.sigma2 * (times[i] - t0);
        if (!(v_m > 0.0)) {
            ++out.skipped;
            continue;
        }
        const double mu_m = std::log(e0) + big_h(mle.xi_hat, t0, times[i]);
        const double fwd = gaussian_kl(mu_s[i], v_s[i], mu_m, v_m);
        const double bwd = gaussian_kl(mu_m, v_m, mu_s[i], v_s[i]);
        out.series.emplace_back(times[i], resistor_average(fwd, bwd));
        vals.push_back(out.series.back().second);
    }
    if (vals.empty()) throw std::runtime_error("no usable time points");
    double sum = 0.0;
    for (double v : vals) sum += v;
    out.mean = sum / static_cast<double>(vals.size());
    out.median = median_of(std::move(vals));
    return out;
}

}  // namespace

double rae(const SamplePathSet& sps, const MleResult& fitted) {
    CrossSectionalMeans cs = cross_sectional_means(sps);
    const double e0 = fitted_initial_mean(fitted);
    double acc = 0.0;
    for (std::size_t i = 0; i < cs.times.size(); ++i) {
        if (!(cs.arithmetic[i] > 0.0)) throw std::domain_error("rae requires positive sample means");
        const double model = conditional_mean(fitted.xi_hat, e0, sps.t0, cs.times[i]);
        acc += std::abs(cs.arithmetic[i] - model) / cs.arithmetic[i];
    }
    return acc / static_cast<double>(cs.times.size());
}

std::pair<double, double> aic_bic(const MleResult& mle, long n_obs) {
    long q = mle.degree() + 2;
    if (mle.eta_hat.sigma1_sq > 0.0) q += 2;
    const double L = mle.loglik;
    return {2.0 * static_cast<double>(q) - 2.0 * L,
            static_cast<double>(q) * std::log(static_cast<double>(n_obs)) - 2.0 * L};
}

long aic_sample_size(const SamplePathSet& sps, const MleResult& mle) {
    long n = 0;
    for (const auto& p : sps.paths) n += static_cast<long>(p.times.size()) - 1;
    if (mle.eta_hat.sigma1_sq > 0.0) n += static_cast<long>(sps.paths.size());
    return n;
}

double kl_sample_vs_model(double m_i, double m_g_i, double t_i, double t0, const MleResult& mle) {
    if (!(t_i > t0)) throw std::domain_error("zero model variance at t0");
    const double v_s = 2.0 * std::log(m_i / m_g_i);
    if (!(v_s > 0.0)) throw std::domain_error("zero sample variance");
    const double v_m = mle.xi_hat.sigma2 * (t_i - t0);
    if (!(v_m > 0.0)) throw std::domain_error("degenerate fitted variance");
    const double mu_s = std::log(m_g_i);
    const double mu_m = std::log(fitted_initial_mean(mle)) + big_h(mle.xi_hat, t0, t_i);
    return gaussian_kl(mu_s, v_s, mu_m, v_m);
}

double resistor_average(double d_fwd, double d_bwd) {
    if (d_fwd < 0.0 || d_bwd < 0.0) throw std::invalid_argument("divergences must be nonnegative");
    const double sum = d_fwd + d_bwd;
    if (sum == 0.0) return 0.0;  // both zero: identical distributions
    return d_fwd * d_bwd / sum;
}

DraSeries dra_series(const SamplePathSet& sps, const MleResult& mle) {
    CrossSectionalMeans cs = cross_sectional_means(sps);
    std::vector<double> mu_s(cs.times.size()), v_s(cs.times.size());
    for (std::size_t i = 0; i < cs.times.size(); ++i) {
        mu_s[i] = std::log(cs.geometric[i]);
        v_s[i] = 2.0 * std::log(cs.arithmetic[i] / cs.geometric[i]);
    }
    return dra_from_pairs(cs.times, sps.t0, mu_s, v_s, mle);
}

DraSeries dra_series_theoretical(const ProcessParams& truth, const InitialLaw& init,
                                 const std::vector<double>& times, double t0, const MleResult& mle) {
    std::vector<double> mu_th(times.size()), v_th(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        mu_th[i] = std::log(init.mean()) + big_h(truth, t0, times[i]);
        v_th[i] = truth.sigma2 * (times[i] - t0);
    }
    return dra_from_pairs(times, t0, mu_th, v_th, mle);
}

Criterion criterion_from_name(const std::string& name) {
    if (name == "rae") return Criterion::Rae;
    if (name == "aic") return Criterion::Aic;
    if (name == "bic") return Criterion::Bic;
    if (name == "dra_mean") return Criterion::DraMean;
    if (name == "dra_median") return Criterion::DraMedian;
    throw std::invalid_argument("unknown criterion: " + name);
}

std::string criterion_name(Criterion c) {
    switch (c) {
        case Criterion::Rae: return "rae";
        case Criterion::Aic: return "aic";
        case Criterion::Bic: return "bic";
        case Criterion::DraMean: return "dra_mean";
        case Criterion::DraMedian: return "dra_median";
    }
    return "?";
}

DegreeReport make_degree_report(const SamplePathSet& sps, const MleResult& mle) {
    DraSeries dra = dra_series(sps, mle);
    auto [aic, bic] = aic_bic(mle, aic_sample_size(sps, mle));
    return DegreeReport{mle.degree(), mle,  rae(sps, mle),   aic,
                        bic,          dra.series, dra.mean, dra.median,
                        dra.skipped};
}

namespace {

double criterion_value(const DegreeReport& r, Criterion c) {
    switch (c) {
        case Criterion::Rae: return r.rae;
        case Criterion::Aic: return r.aic;
        case Criterion::Bic: return r.bic;
        case Criterion::DraMean: return r.dra_mean;
        case Criterion::DraMedian: return r.dra_median;
    }
    return kInf;
}

}  // namespace

SelectionResult forward_select(const SamplePathSet& sps, int p_min, int p_max, Criterion criterion,
                               const SolverOptions& opts) {
    if (!(2 <= p_min && p_min <= p_max)) throw std::invalid_argument("forward_select requires 2 <= p_min <= p_max");

    SelectionResult out;
    out.criterion = criterion_name(criterion);
    out.stop_reason = "reached p_max";

    double best = kInf;
    bool extra_pending = false;
    int non_improving_degree = 0;
    for (int p = p_min; p <= p_max; ++p) {
        DegreeReport rep = make_degree_report(sps, fit(sps, p, opts));
        const double val = rep.mle.converged ? criterion_value(rep, criterion) : kInf;
        out.reports.push_back(std::move(rep));
        if (extra_pending) {
            out.stop_reason = "one extra degree after non-improvement at degree " +
                              std::to_string(non_improving_degree) + " (parity rule)";
            break;
        }
        if (val < best) {
            best = val;
        } else {
            extra_pending = true;  // first non-improvement (ties included): fit exactly one more
            non_improving_degree = p;
        }
    }

    int chosen = -1;
    double chosen_val = kInf;
    for (const auto& rep : out.reports) {
        if (!rep.mle.converged) continue;
        const double val = criterion_value(rep, criterion);
        if (chosen < 0 || val < chosen_val) {
            chosen = rep.degree;
            chosen_val = val;
        }
    }
    if (chosen < 0) {  // nothing converged: fall back to the raw criterion values
        for (const auto& rep : out.reports) {
            const double val = criterion_value(rep, criterion);
            if (chosen < 0 || val < chosen_val) {
                chosen = rep.degree;
                chosen_val = val;
            }
        }
        out.stop_reason += "; no degree converged";
    }
    out.chosen_degree = chosen;
    return out;
}

}  // namespace msig
