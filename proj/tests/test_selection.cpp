#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "msig/selection.hpp"

using namespace msig;

namespace {

const std::vector<double> kBetaA{0.1225, -0.0075, 0.00017};
constexpr double kAlphaAB = 0.9048374180359595;  // exp(-0.1)

MleResult hand_result(ProcessParams xi, Eta eta, double loglik) {
    return MleResult{xi, eta, loglik, 0, true, 0.0, xi, 0, {}};
}

double gauss_kl(double mu_a, double va, double mu_b, double vb) {
    const double d = mu_a - mu_b;
    return 0.5 * (std::log(vb / va) + va / vb + d * d / vb - 1.0);
}

SamplePathSet study_data(double sigma, std::uint64_t seed) {
    const ProcessParams truth(CurveParams(kAlphaAB, drift_polynomial(kBetaA)), sigma * sigma);
    return subsample(simulate(truth, InitialLaw::degenerate(5.0), 0.0, 0.1, 501, 25, seed), 10);
}

}  // namespace

TEST_CASE("resistor average") {
    CHECK(resistor_average(2.0, 2.0) == 1.0);
    CHECK(resistor_average(1.0, 3.0) == 0.75);
    CHECK(resistor_average(3.0, 1.0) == 0.75);
    CHECK(resistor_average(0.0, 5.0) == 0.0);
    CHECK(resistor_average(0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(resistor_average(-0.1, 1.0), std::invalid_argument);

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double a = u(gen), b = u(gen);
        const double r = resistor_average(a, b);
        CHECK(r == resistor_average(b, a));
        CHECK(r <= std::min(a, b));
        CHECK(r >= 0.0);
    }
}

TEST_CASE("aic and bic") {
    const ProcessParams xi(CurveParams(0.9, drift_polynomial({0.1, 0.0, 0.001})), 0.01);

    const MleResult deg = hand_result(xi, Eta{std::log(5.0), 0.0}, 10.0);
    auto [aic, bic] = aic_bic(deg, 100);  // q = p + 2 = 5
    CHECK(aic == doctest::Approx(2.0 * 5 - 20.0).epsilon(1e-15));
    CHECK(bic == doctest::Approx(5.0 * std::log(100.0) - 20.0).epsilon(1e-14));

    // a nondegenerate initial law adds its two parameters
    const MleResult logn = hand_result(xi, Eta{std::log(5.0), 0.2}, 10.0);
    CHECK(aic_bic(logn, 100).first == doctest::Approx(2.0 * 7 - 20.0).epsilon(1e-15));
}

TEST_CASE("aic sample size") {
    SamplePathSet s;
    s.t0 = 0.0;
    s.paths.push_back({{0.0, 1.0, 2.0, 3.0}, {5.0, 6.0, 7.0, 8.0}});
    s.paths.push_back({{0.0, 1.0, 2.0, 3.0}, {5.0, 6.5, 7.5, 8.5}});
    const ProcessParams xi(CurveParams(0.9, drift_polynomial({0.1})), 0.01);
    CHECK(aic_sample_size(s, hand_result(xi, Eta{std::log(5.0), 0.0}, 0.0)) == 6);
    CHECK(aic_sample_size(s, hand_result(xi, Eta{std::log(5.0), 0.1}, 0.0)) == 8);
}

TEST_CASE("pointwise divergence between sample and model laws") {
    const ProcessParams xi(CurveParams(0.8, drift_polynomial({0.1})), 0.04);
    const MleResult mle = hand_result(xi, Eta{std::log(5.0), 0.0}, 0.0);

    const double m = 5.6, mg = 5.5, t = 2.0;
    const double mu_s = std::log(mg);
    const double v_s = 2.0 * std::log(m / mg);
    const double mu_m = std::log(5.0) + big_h(xi, 0.0, t);
    const double v_m = 0.04 * t;
    CHECK(kl_sample_vs_model(m, mg, t, 0.0, mle) ==
          doctest::Approx(gauss_kl(mu_s, v_s, mu_m, v_m)).epsilon(1e-13));
    CHECK(kl_sample_vs_model(m, mg, t, 0.0, mle) >= 0.0);

    CHECK_THROWS_WITH(kl_sample_vs_model(m, mg, 0.0, 0.0, mle),
                      doctest::Contains("zero model variance"));
    CHECK_THROWS_WITH(kl_sample_vs_model(5.5, 5.5, t, 0.0, mle),
                      doctest::Contains("zero sample variance"));
    const ProcessParams frozen(xi.curve, 0.0);
    CHECK_THROWS_WITH(kl_sample_vs_model(m, mg, t, 0.0, hand_result(frozen, Eta{std::log(5.0), 0.0}, 0.0)),
                      doctest::Contains("degenerate fitted variance"));
}

TEST_CASE("relative absolute error of the fitted mean") {
    SamplePathSet s;
    s.t0 = 0.0;
    s.paths.push_back({{0.0, 1.0}, {5.0, 6.0}});
    s.paths.push_back({{0.0, 1.0}, {5.0, 8.0}});

    const ProcessParams xi(CurveParams(0.8, drift_polynomial({0.1})), 0.01);
    const MleResult mle = hand_result(xi, Eta{std::log(5.0), 0.0}, 0.0);
    const double model1 = conditional_mean(xi, 5.0, 0.0, 1.0);
    const double want = 0.5 * (0.0 + std::abs(7.0 - model1) / 7.0);
    CHECK(rae(s, mle) == doctest::Approx(want).epsilon(1e-13));

    // a nondegenerate initial law shifts the fitted initial level
    const Eta eta{std::log(5.0), 0.5};
    const double e0 = std::exp(eta.mu1 + 0.25);
    const double want2 = 0.5 * (std::abs(5.0 - e0) / 5.0 +
                                std::abs(7.0 - conditional_mean(xi, e0, 0.0, 1.0)) / 7.0);
    CHECK(rae(s, hand_result(xi, eta, 0.0)) == doctest::Approx(want2).epsilon(1e-13));
}

TEST_CASE("divergence series against the sample") {
    SamplePathSet s;
    s.t0 = 0.0;
    s.paths.push_back({{0.0, 1.0, 2.0}, {5.0, 4.0, 9.0}});
    s.paths.push_back({{0.0, 1.0, 2.0}, {5.0, 9.0, 4.0}});

    const ProcessParams xi(CurveParams(0.8, drift_polynomial({0.1})), 0.04);
    const MleResult mle = hand_result(xi, Eta{std::log(5.0), 0.0}, 0.0);
    const DraSeries dra = dra_series(s, mle);

    CHECK(dra.skipped == 1);  // the degenerate t0 cross-section
    REQUIRE(dra.series.size() == 2);
    CHECK(dra.series[0].first == 1.0);
    CHECK(dra.series[1].first == 2.0);

    for (int i = 0; i < 2; ++i) {
        const double t = dra.series[i].first;
        const double mu_s = std::log(6.0);
        const double v_s = 2.0 * std::log(6.5 / 6.0);
        const double mu_m = std::log(5.0) + big_h(xi, 0.0, t);
        const double v_m = 0.04 * t;
        const double fwd = gauss_kl(mu_s, v_s, mu_m, v_m);
        const double bwd = gauss_kl(mu_m, v_m, mu_s, v_s);
        CHECK(dra.series[i].second == doctest::Approx(resistor_average(fwd, bwd)).epsilon(1e-13));
    }
    const double mean = 0.5 * (dra.series[0].second + dra.series[1].second);
    CHECK(dra.mean == doctest::Approx(mean).epsilon(1e-15));
    CHECK(dra.median == doctest::Approx(mean).epsilon(1e-15));

    SamplePathSet flat;
    flat.t0 = 0.0;
    flat.paths.push_back({{0.0, 1.0}, {5.0, 6.0}});
    flat.paths.push_back({{0.0, 1.0}, {5.0, 6.0}});
    CHECK_THROWS_WITH(dra_series(flat, mle), doctest::Contains("no usable time points"));
}

TEST_CASE("divergence series against the theoretical law") {
    const ProcessParams truth(CurveParams(kAlphaAB, drift_polynomial(kBetaA)), 0.0025);
    const InitialLaw init = InitialLaw::degenerate(5.0);
    const MleResult self = hand_result(truth, Eta{std::log(5.0), 0.0}, 0.0);

    const std::vector<double> times{0.0, 10.0, 25.0, 50.0};
    const DraSeries dra = dra_series_theoretical(truth, init, times, 0.0, self);
    CHECK(dra.skipped == 1);
    REQUIRE(dra.series.size() == 3);
    for (const auto& [t, d] : dra.series) {
        CHECK(t > 0.0);
        CHECK(d >= 0.0);
        CHECK(d < 1e-25);  // fitted law equals the true law
    }

    // a wrong sigma^2 is picked up as a positive divergence everywhere
    const MleResult off = hand_result(ProcessParams(truth.curve, 0.01), Eta{std::log(5.0), 0.0}, 0.0);
    const DraSeries dra_off = dra_series_theoretical(truth, init, times, 0.0, off);
    for (const auto& [t, d] : dra_off.series) CHECK(d > 1e-4);
    CHECK(dra_off.mean > dra.mean);
}

TEST_CASE("criterion names") {
    for (const auto c : {Criterion::Rae, Criterion::Aic, Criterion::Bic, Criterion::DraMean,
                         Criterion::DraMedian})
        CHECK(criterion_from_name(criterion_name(c)) == c);
    CHECK(criterion_name(Criterion::DraMedian) == "dra_median");
    CHECK_THROWS_AS(criterion_from_name("aicc"), std::invalid_argument);
}

TEST_CASE("degree report aggregates the per-degree diagnostics") {
    const SamplePathSet s = study_data(0.01, 22);
    const MleResult mle = fit(s, 3);
    REQUIRE(mle.converged);

    const DegreeReport rep = make_degree_report(s, mle);
    CHECK(rep.degree == 3);
    CHECK(rep.rae == rae(s, mle));
    const auto [aic, bic] = aic_bic(mle, aic_sample_size(s, mle));
    CHECK(rep.aic == aic);
    CHECK(rep.bic == bic);
    const DraSeries dra = dra_series(s, mle);
    CHECK(rep.dra_mean == dra.mean);
    CHECK(rep.dra_median == dra.median);
    CHECK(rep.dra_skipped == 1);  // only the degenerate start is unusable
    CHECK(rep.dra_series.size() == 50);
    CHECK(rep.rae < 0.02);
}

TEST_CASE("forward selection applies the parity stopping rule") {
    const SamplePathSet s = study_data(0.01, 22);
    const SelectionResult sel = forward_select(s, 2, 5, Criterion::Aic);

    CHECK(sel.criterion == "aic");
    CHECK(sel.chosen_degree == 3);
    REQUIRE(sel.reports.size() == 4);  // 2, 3, 4 (non-improving), 5 (the extra one)
    for (std::size_t i = 0; i < sel.reports.size(); ++i) {
        CHECK(sel.reports[i].degree == static_cast<int>(i) + 2);
        CHECK(sel.reports[i].mle.converged);
    }
    CHECK(sel.stop_reason == "one extra degree after non-improvement at degree 4 (parity rule)");
    CHECK(sel.reports[1].aic < sel.reports[0].aic);
    CHECK(sel.reports[1].aic <= sel.reports[2].aic);
    CHECK(sel.reports[1].aic <= sel.reports[3].aic);
}

TEST_CASE("forward selection stops at the degree cap") {
    const SamplePathSet s = study_data(0.01, 22);
    const SelectionResult sel = forward_select(s, 2, 3, Criterion::Aic);
    CHECK(sel.stop_reason == "reached p_max");
    CHECK(sel.reports.size() == 2);
    CHECK(sel.chosen_degree == 3);
}

TEST_CASE("forward selection validates the degree range") {
    const SamplePathSet s = study_data(0.01, 22);
    CHECK_THROWS_AS(forward_select(s, 1, 5, Criterion::Aic), std::invalid_argument);
    CHECK_THROWS_AS(forward_select(s, 4, 3, Criterion::Aic), std::invalid_argument);
}

TEST_CASE("forward selection survives total non-convergence") {
    const SamplePathSet s = study_data(0.05, 23);
    SolverOptions starve;
    starve.max_iter = 1;
    starve.max_restarts = 0;
    const SelectionResult sel = forward_select(s, 2, 3, Criterion::Aic, starve);
    for (const auto& rep : sel.reports) CHECK_FALSE(rep.mle.converged);
    CHECK(sel.stop_reason ==
          "one extra degree after non-improvement at degree 2 (parity rule); no degree converged");
    CHECK(sel.reports.size() == 2);
    CHECK((sel.chosen_degree == 2 || sel.chosen_degree == 3));
}
