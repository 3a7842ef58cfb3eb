#include "msig/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msig/curve.hpp"
#include "msig/diffusion.hpp"
#include "msig/io.hpp"
#include "msig/mle.hpp"
#include "msig/rng.hpp"
#include "msig/selection.hpp"
#include "msig/smoothing.hpp"

namespace msig {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

json metadata(const std::string& command, const json& seed, const json& input) {
    json m;
    m["version"] = kVersion;
    m["command"] = command;
    m["input"] = input;
    m["seed"] = seed;
    m["rng"] = kRngName;
    m["created_utc"] = iso8601_utc_now();
    return m;
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw InputError("missing key \"" + key + "\" in " + where);
    return *it;
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number()) throw InputError("key \"" + key + "\" in " + where + " must be a number");
    return v.get<double>();
}

double get_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
    return obj.contains(key) ? require_number(obj, key, where) : fallback;
}

long require_integer(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw InputError("key \"" + key + "\" in " + where + " must be an integer");
    return v.get<long>();
}

long get_integer(const json& obj, const std::string& key, const std::string& where, long fallback) {
    return obj.contains(key) ? require_integer(obj, key, where) : fallback;
}

std::string require_string(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_string()) throw InputError("key \"" + key + "\" in " + where + " must be a string");
    return v.get<std::string>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& where,
                       const std::string& fallback) {
    return obj.contains(key) ? require_string(obj, key, where) : fallback;
}

std::vector<double> require_number_array(const json& obj, const std::string& key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_array() || v.empty())
        throw InputError("key \"" + key + "\" in " + where + " must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number())
            throw InputError("key \"" + key + "\" in " + where + " must contain numbers only");
        out.push_back(e.get<double>());
    }
    return out;
}

std::uint64_t require_seed(const json& obj, const std::string& key, const std::string& where) {
    const long v = require_integer(obj, key, where);
    if (v < 0) throw InputError("key \"" + key + "\" in " + where + " must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

SolverOptions parse_solver(const json& cfg, const std::optional<std::uint64_t>& seed_override) {
    SolverOptions o;
    if (cfg.contains("solver")) {
        const json& s = cfg.at("solver");
        if (!s.is_object()) throw InputError("\"solver\" must be an object");
        reject_unknown_keys(
            s, {"max_iter", "tol_residual", "tol_step", "max_halvings", "max_restarts", "noise_seed"},
            "solver");
        o.max_iter = static_cast<int>(get_integer(s, "max_iter", "solver", o.max_iter));
        o.tol_residual = get_number(s, "tol_residual", "solver", o.tol_residual);
        o.tol_step = get_number(s, "tol_step", "solver", o.tol_step);
        o.max_halvings = static_cast<int>(get_integer(s, "max_halvings", "solver", o.max_halvings));
        o.max_restarts = static_cast<int>(get_integer(s, "max_restarts", "solver", o.max_restarts));
        if (s.contains("noise_seed")) o.noise_seed = require_seed(s, "noise_seed", "solver");
        if (o.max_iter <= 0 || !(o.tol_residual > 0.0) || !(o.tol_step > 0.0) || o.max_halvings < 0 ||
            o.max_restarts < 0)
            throw InputError("solver options out of range");
    }
    if (seed_override) o.noise_seed = *seed_override;
    return o;
}

ProcessParams parse_process(const json& cfg, const std::string& where) {
    const double alpha = require_number(cfg, "alpha", where);
    const std::vector<double> beta = require_number_array(cfg, "beta", where);
    const bool has_s = cfg.contains("sigma");
    const bool has_s2 = cfg.contains("sigma2");
    if (has_s == has_s2) throw InputError(where + " needs exactly one of \"sigma\" or \"sigma2\"");
    double sigma2 = 0.0;
    if (has_s) {
        const double s = require_number(cfg, "sigma", where);
        if (s < 0.0) throw InputError("\"sigma\" must be nonnegative");
        sigma2 = s * s;
    } else {
        sigma2 = require_number(cfg, "sigma2", where);
    }
    return ProcessParams(CurveParams(alpha, drift_polynomial(beta)), sigma2);
}

InitialLaw parse_init(const json& cfg, const std::string& where) {
    const json& ij = require_key(cfg, "init", where);
    if (!ij.is_object()) throw InputError("\"init\" must be an object");
    const std::string kind = require_string(ij, "kind", "init");
    if (kind == "degenerate") {
        reject_unknown_keys(ij, {"kind", "x0"}, "init");
        return InitialLaw::degenerate(require_number(ij, "x0", "init"));
    }
    if (kind == "lognormal") {
        reject_unknown_keys(ij, {"kind", "mu1", "sigma1_sq"}, "init");
        return InitialLaw::lognormal(require_number(ij, "mu1", "init"),
                                     require_number(ij, "sigma1_sq", "init"));
    }
    throw InputError("init.kind must be \"degenerate\" or \"lognormal\"");
}

double last_time(const SamplePathSet& sps) {
    double t_hi = sps.t0;
    for (const auto& p : sps.paths) t_hi = std::max(t_hi, p.times.back());
    return t_hi;
}

json curve_json(const ProcessParams& pp) {
    json e;
    e["alpha"] = pp.curve.alpha;
    e["beta"] = pp.curve.beta();
    e["sigma2"] = pp.sigma2;
    return e;
}

json degree_entry(const SamplePathSet& sps, const MleResult& mle, bool common_grid) {
    json e;
    e["degree"] = mle.degree();
    e["initial_guess"] = curve_json(mle.initial_guess);
    json est = curve_json(mle.xi_hat);
    est["sigma"] = std::sqrt(mle.xi_hat.sigma2);
    e["estimates"] = est;
    e["eta"] = json{{"mu1", mle.eta_hat.mu1}, {"sigma1_sq", mle.eta_hat.sigma1_sq}};
    e["loglik"] = mle.loglik;
    e["iterations"] = mle.iterations;
    e["converged"] = mle.converged;
    e["residual_max"] = mle.residual_norm;
    e["restarts"] = mle.restarts_used;
    e["warnings"] = mle.warnings;
    const auto [aic, bic] = aic_bic(mle, aic_sample_size(sps, mle));
    e["aic"] = aic;
    e["bic"] = bic;
    e["rae"] = nullptr;
    e["dra"] = nullptr;
    if (common_grid) {
        try {
            e["rae"] = rae(sps, mle);
        } catch (const std::exception&) {  // left null when undefined for this fit
        }
        try {
            const DraSeries d = dra_series(sps, mle);
            json series = json::array();
            for (const auto& [t, v] : d.series) series.push_back(json::array({t, v}));
            e["dra"] = json{{"mean", d.mean}, {"median", d.median}, {"skipped", d.skipped}, {"series", series}};
        } catch (const std::exception&) {
        }
    }
    json infl = json::array();
    try {
        const InflectionSet s = find_inflections(mle.xi_hat.curve, sps.t0, last_time(sps), 0);
        for (std::size_t i = 0; i < s.instants.size(); ++i)
            infl.push_back(json{{"instant", s.instants[i]}, {"residual", s.residuals[i]}});
    } catch (const std::exception&) {  // wild non-converged iterates can overflow e^{-Q}
    }
    e["inflections"] = infl;
    return e;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& seed_flag) {
    const json cfg = load_config(config_path);
    reject_unknown_keys(cfg,
                        {"alpha", "beta", "sigma", "sigma2", "t0", "dt", "n_points", "n_paths", "seed",
                         "init", "subsample_step"},
                        "simulate config");
    const ProcessParams pp = parse_process(cfg, "simulate config");
    const InitialLaw init = parse_init(cfg, "simulate config");
    const double t0 = get_number(cfg, "t0", "simulate config", 0.0);
    const double dt = require_number(cfg, "dt", "simulate config");
    const long n_points = require_integer(cfg, "n_points", "simulate config");
    const long n_paths = require_integer(cfg, "n_paths", "simulate config");
    const long step = get_integer(cfg, "subsample_step", "simulate config", 1);
    if (!(dt > 0.0)) throw InputError("\"dt\" must be positive");
    if (n_points < 2) throw InputError("\"n_points\" must be at least 2");
    if (n_paths < 1) throw InputError("\"n_paths\" must be at least 1");
    if (step < 1) throw InputError("\"subsample_step\" must be at least 1");

    std::uint64_t seed = 0;
    if (seed_flag)
        seed = *seed_flag;
    else if (cfg.contains("seed"))
        seed = require_seed(cfg, "seed", "simulate config");
    else
        throw InputError("simulate needs a seed (config key \"seed\" or --seed)");

    SamplePathSet sps =
        simulate(pp, init, t0, dt, static_cast<int>(n_points), static_cast<int>(n_paths), seed);
    if (step > 1) sps = subsample(sps, static_cast<int>(step));
    write_paths_csv(out_path, sps);

    json meta;
    meta["metadata"] = metadata("simulate", json(seed), json(config_path));
    meta["n_paths"] = n_paths;
    meta["n_points"] = static_cast<long>(sps.paths.front().times.size());
    meta["subsample_step"] = step;
    write_json(out_path + ".meta.json", meta);

    std::cout << "wrote " << n_paths << " paths with " << sps.paths.front().times.size()
              << " points each to " << out_path << "\n";
    return 0;
}

int cmd_estimate(const std::string& paths_path, const std::string& out_path, int degree,
                 const std::optional<std::string>& config_path,
                 const std::optional<std::uint64_t>& seed_flag) {
    const SamplePathSet sps = read_paths_csv(paths_path);
    json cfg = json::object();
    if (config_path) {
        cfg = load_config(*config_path);
        reject_unknown_keys(cfg, {"solver"}, "estimate config");
    }
    const SolverOptions opts = parse_solver(cfg, seed_flag);
    const MleResult res = fit(sps, degree, opts);
    const bool cg = has_common_grid(sps);

    json report;
    report["metadata"] = metadata("estimate", json(opts.noise_seed), json(paths_path));
    report["common_grid"] = cg;
    report["time_span"] = json::array({sps.t0, last_time(sps)});
    report["degrees"] = json::array({degree_entry(sps, res, cg)});
    write_json(out_path, report);

    std::cout << "degree " << degree << ": converged=" << (res.converged ? "yes" : "no")
              << " loglik=" << res.loglik << ", report " << out_path << "\n";
    return 0;
}

int cmd_select(const std::string& paths_path, const std::string& out_path,
               const std::optional<std::string>& config_path,
               const std::optional<std::uint64_t>& seed_flag) {
    const SamplePathSet sps = read_paths_csv(paths_path);
    json cfg = json::object();
    if (config_path) {
        cfg = load_config(*config_path);
        reject_unknown_keys(cfg, {"p_min", "p_max", "criterion", "solver"}, "select config");
    }
    const int p_min = static_cast<int>(get_integer(cfg, "p_min", "select config", 2));
    const int p_max = static_cast<int>(get_integer(cfg, "p_max", "select config", 5));
    const Criterion crit = criterion_from_name(get_string(cfg, "criterion", "select config", "aic"));
    const SolverOptions opts = parse_solver(cfg, seed_flag);

    const SelectionResult sel = forward_select(sps, p_min, p_max, crit, opts);

    json report;
    report["metadata"] = metadata("select", json(opts.noise_seed), json(paths_path));
    report["common_grid"] = true;  // forward_select needs cross-sectional statistics
    report["time_span"] = json::array({sps.t0, last_time(sps)});
    json degs = json::array();
    for (const auto& rep : sel.reports) degs.push_back(degree_entry(sps, rep.mle, true));
    report["degrees"] = degs;
    report["selection"] = json{{"chosen_degree", sel.chosen_degree},
                               {"criterion", sel.criterion},
                               {"stop_reason", sel.stop_reason}};
    write_json(out_path, report);

    std::cout << "chosen degree " << sel.chosen_degree << " by " << sel.criterion << " ("
              << sel.stop_reason << "), report " << out_path << "\n";
    return 0;
}

const json* find_degree_entry(const json& degrees, int want) {
    for (const auto& d : degrees)
        if (d.at("degree").get<int>() == want) return &d;
    return nullptr;
}

int cmd_inflections(const std::string& config_path, const std::string& out_path,
                    const std::optional<std::string>& paths_flag, const std::optional<int>& degree_flag) {
    const json cfg = load_config(config_path);
    const std::string source = require_string(cfg, "source", "inflections config");

    InflectionSet set;
    if (source == "params") {
        reject_unknown_keys(cfg, {"source", "alpha", "beta", "t_lo", "t_hi", "grid_n"},
                            "inflections config");
        const CurveParams cp(require_number(cfg, "alpha", "inflections config"),
                             drift_polynomial(require_number_array(cfg, "beta", "inflections config")));
        set = find_inflections(cp, require_number(cfg, "t_lo", "inflections config"),
                               require_number(cfg, "t_hi", "inflections config"),
                               get_integer(cfg, "grid_n", "inflections config", 0));
    } else if (source == "fitted") {
        reject_unknown_keys(cfg, {"source", "report", "degree", "t_lo", "t_hi", "grid_n"},
                            "inflections config");
        const json rep = load_config(require_string(cfg, "report", "inflections config"));
        const json& degrees = require_key(rep, "degrees", "report");
        if (!degrees.is_array() || degrees.empty()) throw InputError("report has no degree entries");

        int want = degree_flag ? *degree_flag
                               : static_cast<int>(get_integer(cfg, "degree", "inflections config", -1));
        const json* entry = nullptr;
        if (want < 0) {
            if (rep.contains("selection"))
                want = rep.at("selection").at("chosen_degree").get<int>();
            else if (degrees.size() == 1)
                entry = &degrees[0];
            else
                throw InputError("report holds several degrees; pass --degree");
        }
        if (!entry) {
            entry = find_degree_entry(degrees, want);
            if (!entry) throw InputError("degree " + std::to_string(want) + " not present in report");
        }

        const json& est = entry->at("estimates");
        const CurveParams cp = CurveParams::fitted(
            est.at("alpha").get<double>(),
            drift_polynomial(est.at("beta").get<std::vector<double>>()));
        double lo = 0.0, hi = 0.0;
        if (cfg.contains("t_lo"))
            lo = require_number(cfg, "t_lo", "inflections config");
        else if (rep.contains("time_span"))
            lo = rep.at("time_span").at(0).get<double>();
        else
            throw InputError("\"t_lo\" required: report lacks a time_span");
        if (cfg.contains("t_hi"))
            hi = require_number(cfg, "t_hi", "inflections config");
        else if (rep.contains("time_span"))
            hi = rep.at("time_span").at(1).get<double>();
        else
            throw InputError("\"t_hi\" required: report lacks a time_span");
        set = find_inflections(cp, lo, hi, get_integer(cfg, "grid_n", "inflections config", 0));
    } else if (source == "sample_mean") {
        reject_unknown_keys(cfg, {"source", "method", "bandwidth_frac"}, "inflections config");
        if (!paths_flag) throw InputError("source \"sample_mean\" requires --paths");
        const SamplePathSet sps = read_paths_csv(*paths_flag);
        const CrossSectionalMeans cs = cross_sectional_means(sps);
        const std::string mname = get_string(cfg, "method", "inflections config", "spline");
        SmoothMethod method;
        if (mname == "spline")
            method = SmoothMethod::NaturalCubicSpline;
        else if (mname == "local_poly")
            method = SmoothMethod::LocalPoly;
        else
            throw InputError("method must be \"spline\" or \"local_poly\"");
        const double bw = get_number(cfg, "bandwidth_frac", "inflections config", 0.15);
        if (!(bw > 0.0)) throw InputError("\"bandwidth_frac\" must be positive");
        set = sample_inflections(cs.times, cs.arithmetic, method, bw);
    } else {
        throw InputError("source must be \"params\", \"fitted\" or \"sample_mean\"");
    }

    json out;
    out["metadata"] = metadata("inflections", json(), json(config_path));
    out["source"] = source;
    json arr = json::array();
    for (std::size_t i = 0; i < set.instants.size(); ++i)
        arr.push_back(json{{"instant", set.instants[i]}, {"residual", set.residuals[i]}});
    out["inflections"] = arr;
    write_json(out_path, out);

    std::string csv_path = out_path;
    if (csv_path.size() > 5 && csv_path.compare(csv_path.size() - 5, 5, ".json") == 0)
        csv_path = csv_path.substr(0, csv_path.size() - 5) + ".csv";
    else
        csv_path += ".csv";
    std::string csv = "instant,residual\n";
    for (std::size_t i = 0; i < set.instants.size(); ++i)
        csv += format_double(set.instants[i]) + "," + format_double(set.residuals[i]) + "\n";
    write_text(csv_path, csv);

    std::cout << "found " << set.instants.size() << " inflection instant"
              << (set.instants.size() == 1 ? "" : "s") << ", wrote " << out_path << " and " << csv_path
              << "\n";
    return 0;
}

int cmd_mean_curves(const std::string& paths_path, const std::string& out_path,
                    const std::optional<std::string>& config_path) {
    const SamplePathSet sps = read_paths_csv(paths_path);
    const CrossSectionalMeans cs = cross_sectional_means(sps);

    struct FittedCol {
        int degree;
        ProcessParams pp;
        double e0;
    };
    std::vector<FittedCol> cols;
    if (config_path) {
        const json cfg = load_config(*config_path);
        reject_unknown_keys(cfg, {"report", "degrees"}, "mean-curves config");
        if (cfg.contains("report")) {
            const json rep = load_config(require_string(cfg, "report", "mean-curves config"));
            std::vector<long> wanted;
            if (cfg.contains("degrees")) {
                const json& w = cfg.at("degrees");
                if (!w.is_array()) throw InputError("\"degrees\" must be an array of integers");
                for (const auto& e : w) {
                    if (!e.is_number_integer() && !e.is_number_unsigned())
                        throw InputError("\"degrees\" must be an array of integers");
                    wanted.push_back(e.get<long>());
                }
            }
            for (const auto& d : require_key(rep, "degrees", "report")) {
                const int deg = d.at("degree").get<int>();
                if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), deg) == wanted.end())
                    continue;
                const json& est = d.at("estimates");
                ProcessParams pp(CurveParams::fitted(
                                     est.at("alpha").get<double>(),
                                     drift_polynomial(est.at("beta").get<std::vector<double>>())),
                                 est.at("sigma2").get<double>());
                const json& eta = d.at("eta");
                const double e0 =
                    std::exp(eta.at("mu1").get<double>() + 0.5 * eta.at("sigma1_sq").get<double>());
                cols.push_back({deg, pp, e0});
            }
        } else if (cfg.contains("degrees")) {
            throw InputError("\"degrees\" needs a \"report\" to filter");
        }
    }

    std::string csv = "t,sample_mean";
    for (const auto& c : cols) csv += ",fitted_mean_degree_" + std::to_string(c.degree);
    csv += "\n";
    for (std::size_t i = 0; i < cs.times.size(); ++i) {
        csv += format_double(cs.times[i]) + "," + format_double(cs.arithmetic[i]);
        for (const auto& c : cols)
            csv += "," + format_double(conditional_mean(c.pp, c.e0, sps.t0, cs.times[i]));
        csv += "\n";
    }
    write_text(out_path, csv);

    std::cout << "wrote " << cs.times.size() << " rows and " << cols.size()
              << " fitted mean curves to " << out_path << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Multi-sigmoidal Gompertz diffusion: simulation, likelihood fitting, degree selection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config, paths, out;
    int degree = 0;
    std::uint64_t seed = 0;

    auto* sim = app.add_subcommand("simulate", "Draw sample paths on a uniform grid and write CSV");
    sim->add_option("--config", config, "simulation settings (JSON)")->required();
    sim->add_option("--out", out, "output CSV path")->required();
    CLI::Option* sim_seed = sim->add_option("--seed", seed, "path-generation seed; overrides the config");

    auto* est = app.add_subcommand("estimate", "Fit one drift degree by maximum likelihood");
    est->add_option("--paths", paths, "input CSV with header path,t,x")->required();
    est->add_option("--out", out, "output report (JSON)")->required();
    est->add_option("--degree", degree, "drift polynomial degree")->required()->check(CLI::PositiveNumber);
    CLI::Option* est_cfg = est->add_option("--config", config, "solver settings (JSON)");
    CLI::Option* est_seed = est->add_option("--seed", seed, "restart-noise seed; overrides the config");

    auto* sel = app.add_subcommand("select", "Fit ascending degrees and pick one by a criterion");
    sel->add_option("--paths", paths, "input CSV with header path,t,x")->required();
    sel->add_option("--out", out, "output report (JSON)")->required();
    CLI::Option* sel_cfg = sel->add_option("--config", config, "selection and solver settings (JSON)");
    CLI::Option* sel_seed = sel->add_option("--seed", seed, "restart-noise seed; overrides the config");

    auto* inf = app.add_subcommand("inflections",
                                   "Locate inflection instants of a curve or a smoothed sample mean");
    inf->add_option("--config", config, "source settings (JSON)")->required();
    inf->add_option("--out", out, "output JSON; a CSV sibling is written next to it")->required();
    CLI::Option* inf_paths =
        inf->add_option("--paths", paths, "input CSV, needed for source \"sample_mean\"");
    CLI::Option* inf_degree =
        inf->add_option("--degree", degree, "degree entry to read for source \"fitted\"")
            ->check(CLI::PositiveNumber);

    auto* mc = app.add_subcommand("mean-curves", "Tabulate the sample mean next to fitted mean curves");
    mc->add_option("--paths", paths, "input CSV with header path,t,x")->required();
    mc->add_option("--out", out, "output CSV path")->required();
    CLI::Option* mc_cfg = mc->add_option("--config", config, "report reference (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config, out,
                                sim_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (est->parsed())
            return cmd_estimate(paths, out, degree,
                                est_cfg->count() ? std::optional<std::string>(config) : std::nullopt,
                                est_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (sel->parsed())
            return cmd_select(paths, out,
                              sel_cfg->count() ? std::optional<std::string>(config) : std::nullopt,
                              sel_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (inf->parsed())
            return cmd_inflections(config, out,
                                   inf_paths->count() ? std::optional<std::string>(paths) : std::nullopt,
                                   inf_degree->count() ? std::optional<int>(degree) : std::nullopt);
        if (mc->parsed())
            return cmd_mean_curves(paths, out,
                                   mc_cfg->count() ? std::optional<std::string>(config) : std::nullopt);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace msig
