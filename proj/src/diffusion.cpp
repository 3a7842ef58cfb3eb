#include "msig/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "msig/rng.hpp"

namespace msig {

ProcessParams::ProcessParams(CurveParams c, double s2) : curve(std::move(c)), sigma2(s2) {
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be nonnegative");
}

InitialLaw InitialLaw::degenerate(double x0) {
    if (!(x0 > 0.0)) throw std::invalid_argument("degenerate initial law needs x0 > 0");
    InitialLaw law;
    law.kind = Kind::Degenerate;
    law.x0 = x0;
    law.mu1 = std::log(x0);
    return law;
}

InitialLaw InitialLaw::lognormal(double mu1, double sigma1_sq) {
    if (!(sigma1_sq >= 0.0)) throw std::invalid_argument("lognormal initial law needs sigma1_sq >= 0");
    InitialLaw law;
    law.kind = Kind::Lognormal;
    law.mu1 = mu1;
    law.sigma1_sq = sigma1_sq;
    law.x0 = std::exp(mu1);
    return law;
}

double InitialLaw::mean() const {
    return kind == Kind::Degenerate ? x0 : std::exp(mu1 + 0.5 * sigma1_sq);
}

void validate(const SamplePathSet& sps) {
    if (sps.paths.empty()) throw std::invalid_argument("sample path set needs d >= 1 paths");
    for (std::size_t i = 0; i < sps.paths.size(); ++i) {
        const auto& p = sps.paths[i];
        if (p.times.empty() || p.times.size() != p.values.size())
            throw std::invalid_argument("path " + std::to_string(i + 1) + " has inconsistent lengths");
        if (p.times.front() != sps.t0)
            throw std::invalid_argument("path " + std::to_string(i + 1) + " does not start at the common t0");
        for (std::size_t j = 0; j < p.times.size(); ++j) {
            if (!(p.values[j] > 0.0))
                throw std::invalid_argument("path " + std::to_string(i + 1) + " has a nonpositive value");
            if (j > 0 && !(p.times[j] > p.times[j - 1]))
                throw std::invalid_argument("path " + std::to_string(i + 1) + " has non-ascending times");
        }
    }
}

bool has_common_grid(const SamplePathSet& sps) {
    for (std::size_t i = 1; i < sps.paths.size(); ++i)
        if (sps.paths[i].times != sps.paths[0].times) return false;
    return true;
}

double big_h(const ProcessParams& pp, double s, double t) {
    if (s > t) throw std::domain_error("big_h requires s <= t");
    double e_t = std::exp(-poly_eval(pp.curve.q, t));
    double e_s = std::exp(-poly_eval(pp.curve.q, s));
    return -pp.curve.alpha * (e_t - e_s) - 0.5 * pp.sigma2 * (t - s);
}

double transition_logpdf(const ProcessParams& pp, double y, double s, double x, double t) {
    if (s >= t) throw std::domain_error("transition_logpdf requires s < t");
    if (!(y > 0.0) || !(x > 0.0)) throw std::domain_error("transition_logpdf requires positive states");
    if (!(pp.sigma2 > 0.0)) throw std::domain_error("degenerate transition");
    const double mu = std::log(y) + big_h(pp, s, t);
    const double var = pp.sigma2 * (t - s);
    const double z = std::log(x) - mu;
    return -std::log(x) - 0.5 * std::log(2.0 * M_PI * var) - z * z / (2.0 * var);
}

double mean(const ProcessParams& pp, const InitialLaw& init, double t, double t0) {
    if (t < t0) throw std::domain_error("mean requires t >= t0");
    double e_t = std::exp(-poly_eval(pp.curve.q, t));
    double e_t0 = std::exp(-poly_eval(pp.curve.q, t0));
    return init.mean() * std::exp(-pp.curve.alpha * (e_t - e_t0));
}

double conditional_mean(const ProcessParams& pp, double x0, double t0, double t) {
    if (t < t0) throw std::domain_error("conditional_mean requires t >= t0");
    double e_t = std::exp(-poly_eval(pp.curve.q, t));
    double e_t0 = std::exp(-poly_eval(pp.curve.q, t0));
    return x0 * std::exp(-pp.curve.alpha * (e_t - e_t0));
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> fdd_params(const ProcessParams& pp, const InitialLaw& init,
                                                       double t0, const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("fdd_params needs at least one time");
    if (times.front() < t0) throw std::domain_error("fdd_params requires times[0] >= t0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::domain_error("fdd_params requires strictly ascending times");

    const double mu0 = init.mu1;
    const double s0 = init.kind == InitialLaw::Kind::Degenerate ? 0.0 : init.sigma1_sq;
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::VectorXd eps(n);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        eps(i) = mu0 + big_h(pp, t0, times[i]);
        for (Eigen::Index j = 0; j <= i; ++j) {
            double c = s0 + pp.sigma2 * (std::min(times[i], times[j]) - t0);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    return {std::move(eps), std::move(cov)};
}

int thread_budget() {
    if (const char* env = std::getenv("GOMPERTZ_MSIG_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 256));
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

SamplePathSet simulate(const ProcessParams& pp, const InitialLaw& init, double t0, double dt,
                       int n_points, int n_paths, std::uint64_t seed) {
    if (!(dt > 0.0)) throw std::invalid_argument("simulate requires dt > 0");
    if (n_points < 2) throw std::invalid_argument("simulate requires n_points >= 2");
    if (n_paths < 1) throw std::invalid_argument("simulate requires n_paths >= 1");

    std::vector<double> times(n_points);
    std::vector<double> drift(n_points);
    for (int j = 0; j < n_points; ++j) {
        times[j] = t0 + dt * static_cast<double>(j);
        drift[j] = big_h(pp, t0, times[j]);
    }
    const double sigma = std::sqrt(pp.sigma2);
    const double sq_dt = std::sqrt(dt);

    SamplePathSet out;
    out.t0 = t0;
    out.paths.resize(n_paths);

    auto build_path = [&](int i) {
        GaussianStream gs(path_substream_seed(seed, static_cast<std::uint64_t>(i)));
        double x0 = init.kind == InitialLaw::Kind::Degenerate
                        ? init.x0
                        : std::exp(init.mu1 + std::sqrt(init.sigma1_sq) * gs.next());
        SamplePath& path = out.paths[i];
        path.times = times;
        path.values.resize(n_points);
        path.values[0] = x0;
        double w = 0.0;
        for (int j = 1; j < n_points; ++j) {
            w += sq_dt * gs.next();
            path.values[j] = x0 * std::exp(drift[j] + sigma * w);
        }
    };

    int threads = std::min(thread_budget(), n_paths);
    if (threads <= 1 || n_paths < 4) {
        for (int i = 0; i < n_paths; ++i) build_path(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int k = 0; k < threads; ++k)
            pool.emplace_back([&, k] {
                for (int i = k; i < n_paths; i += threads) build_path(i);
            });
        for (auto& th : pool) th.join();
    }
    return out;
}

SamplePathSet subsample(const SamplePathSet& sps, int step) {
    if (step < 1) throw std::invalid_argument("subsample requires step >= 1");
    SamplePathSet out;
    out.t0 = sps.t0;
    out.paths.reserve(sps.paths.size());
    for (std::size_t i = 0; i < sps.paths.size(); ++i) {
        const auto& p = sps.paths[i];
        if (static_cast<std::size_t>(step) > p.times.size())
            throw std::invalid_argument("subsample step larger than path " + std::to_string(i + 1) + " length");
        SamplePath q;
        for (std::size_t j = 0; j < p.times.size(); j += static_cast<std::size_t>(step)) {
            q.times.push_back(p.times[j]);
            q.values.push_back(p.values[j]);
        }
        out.paths.push_back(std::move(q));
    }
    return out;
}

CrossSectionalMeans cross_sectional_means(const SamplePathSet& sps) {
    validate(sps);
    if (!has_common_grid(sps))
        throw std::invalid_argument("cross-sectional statistics require a common grid");
    const auto& grid = sps.paths[0].times;
    const double d = static_cast<double>(sps.paths.size());
    CrossSectionalMeans out;
    out.times = grid;
    out.arithmetic.resize(grid.size());
    out.geometric.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double sum = 0.0, logsum = 0.0;
        for (const auto& p : sps.paths) {
            sum += p.values[j];
            logsum += std::log(p.values[j]);
        }
        out.arithmetic[j] = sum / d;
        out.geometric[j] = std::exp(logsum / d);
    }
    return out;
}

}  // namespace msig
