// Command-line driver: ingestion, GLM and dependence fitting, prediction,
// simulation, validation, verification, and weight extraction.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcrm/crm.hpp"
#include "dcrm/error.hpp"
#include "dcrm/fit.hpp"
#include "dcrm/glm.hpp"
#include "dcrm/oracle.hpp"
#include "dcrm/portfolio.hpp"

namespace {

using json = nlohmann::ordered_json;

// Exit codes shared by every subcommand.
constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;
constexpr int kExistenceError = 5;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct RunConfig {
    dcrm::CrmParams params;
    dcrm::Benchmark benchmark = dcrm::Benchmark::Proposed;
    dcrm::OptimOptions optimizer;
    std::uint64_t seed = 0;
};

json params_to_json(const RunConfig& cfg) {
    const dcrm::CrmParams& p = cfg.params;
    json j;
    j["q1"] = p.q1;
    j["q2"] = p.q2;
    j["alpha0_1"] = p.alpha0_1;
    j["beta0_1"] = p.beta0_1;
    j["alpha0_2"] = p.alpha0_2;
    j["beta0_2"] = p.beta0_2;
    j["zeta1"] = p.zeta1;
    j["zeta2"] = p.zeta2;
    j["eta"] = p.eta;
    j["psi2"] = p.psi2;
    j["variant"] = dcrm::to_string(p.variant);
    j["benchmark"] = dcrm::to_string(cfg.benchmark);
    j["optimizer"] = {{"max_iter", cfg.optimizer.max_iter},
                      {"tol", cfg.optimizer.tol},
                      {"grad_tol", cfg.optimizer.grad_tol}};
    j["seed"] = cfg.seed;
    return j;
}

RunConfig params_from_json(const json& j) {
    RunConfig cfg;
    dcrm::CrmParams& p = cfg.params;
    p.q1 = j.at("q1").get<double>();
    p.q2 = j.at("q2").get<double>();
    p.alpha0_1 = j.at("alpha0_1").get<double>();
    p.beta0_1 = j.at("beta0_1").get<double>();
    p.alpha0_2 = j.at("alpha0_2").get<double>();
    p.beta0_2 = j.at("beta0_2").get<double>();
    p.zeta1 = j.at("zeta1").get<std::vector<double>>();
    p.zeta2 = j.at("zeta2").get<std::vector<double>>();
    p.eta = j.at("eta").get<double>();
    p.psi2 = j.at("psi2").get<double>();
    p.variant = dcrm::variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("benchmark"))
        cfg.benchmark = dcrm::benchmark_from_string(j.at("benchmark").get<std::string>());
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        if (o.contains("max_iter")) cfg.optimizer.max_iter = o.at("max_iter").get<int>();
        if (o.contains("tol")) cfg.optimizer.tol = o.at("tol").get<double>();
        if (o.contains("grad_tol")) cfg.optimizer.grad_tol = o.at("grad_tol").get<double>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

RunConfig load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dcrm::data_error("cannot open params file " + path);
    json j;
    try {
        in >> j;
        return params_from_json(j);
    } catch (const json::exception& e) {
        throw dcrm::data_error("params file " + path + ": " + e.what());
    }
}

dcrm::Schema load_schema(const std::string& path) {
    dcrm::Schema schema;
    if (path.empty()) return schema;
    std::ifstream in(path);
    if (!in) throw dcrm::data_error("cannot open schema file " + path);
    try {
        json j;
        in >> j;
        if (j.contains("covariates"))
            schema.covariates = j.at("covariates").get<std::vector<std::string>>();
        if (j.contains("add_intercept"))
            schema.add_intercept = j.at("add_intercept").get<bool>();
        if (j.contains("holdout_year"))
            schema.holdout_year = j.at("holdout_year").get<int>();
    } catch (const json::exception& e) {
        throw dcrm::data_error("schema file " + path + ": " + e.what());
    }
    return schema;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dcrm::data_error("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json glm_to_json(const dcrm::GlmFit& fit) {
    json j;
    j["names"] = fit.names;
    j["coef"] = std::vector<double>(fit.coef.data(), fit.coef.data() + fit.coef.size());
    j["se"] = std::vector<double>(fit.se.data(), fit.se.data() + fit.se.size());
    j["p_value"] =
        std::vector<double>(fit.p_value.data(), fit.p_value.data() + fit.p_value.size());
    j["dispersion"] = fit.dispersion;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["n"] = fit.n;
    return j;
}

int env_threads() {
    if (const char* v = std::getenv("DCRM_THREADS")) {
        int n = std::atoi(v);
        if (n >= 1) return n;
    }
    return 1;
}

// ---- subcommand bodies -------------------------------------------------

int run_fit_glm(const std::string& data_path, const std::string& schema_path,
                const std::string& out_dir, const std::string& variant_name,
                std::uint64_t seed) {
    dcrm::Schema schema = load_schema(schema_path);
    dcrm::Portfolio pf = dcrm::ingest(data_path, schema);
    for (const std::string& w : pf.warnings) std::cerr << "warning: " << w << "\n";

    long rows = 0;
    for (const auto& ph : pf.policies)
        for (const auto& pp : ph.periods)
            if (schema.holdout_year == 0 || pp.year < schema.holdout_year) ++rows;
    std::vector<std::string> names = pf.design_names();
    Eigen::MatrixXd X(rows, static_cast<long>(names.size()));
    Eigen::VectorXd y1(rows), y2(rows);
    long r = 0;
    for (const auto& ph : pf.policies)
        for (const auto& pp : ph.periods) {
            if (schema.holdout_year != 0 && pp.year >= schema.holdout_year) continue;
            for (size_t c = 0; c < pp.x.size(); ++c) X(r, static_cast<long>(c)) = pp.x[c];
            y1(r) = static_cast<double>(pp.y1);
            y2(r) = pp.y2;
            ++r;
        }

    dcrm::GlmFit freq = dcrm::fit_poisson(X, y1, names);
    dcrm::GlmFit sev = dcrm::fit_gamma_severity(X, y1, y2, names, /*include_count=*/true);

    json report;
    report["frequency"] = glm_to_json(freq);
    report["severity"] = glm_to_json(sev);
    write_json(std::filesystem::path(out_dir) / "glm.json", report);

    RunConfig cfg;
    cfg.params.variant = dcrm::variant_from_string(variant_name);
    cfg.params.zeta1.assign(freq.coef.data(), freq.coef.data() + freq.coef.size());
    // severity coefficients exclude the trailing claim-count column
    cfg.params.zeta2.assign(sev.coef.data(), sev.coef.data() + sev.coef.size() - 1);
    cfg.params.eta = sev.coef(sev.coef.size() - 1);
    cfg.params.psi2 = sev.dispersion;
    cfg.seed = seed;
    write_json(std::filesystem::path(out_dir) / "params.json", params_to_json(cfg));

    if (!freq.converged || !sev.converged)
        throw dcrm::convergence_error("GLM did not converge");
    return kOk;
}

int run_fit_dep(const std::string& data_path, const std::string& schema_path,
                const std::string& params_path, const std::string& benchmark_name,
                const std::string& out_dir, int threads) {
    dcrm::Schema schema = load_schema(schema_path);
    dcrm::Portfolio pf = dcrm::ingest(data_path, schema);
    RunConfig cfg = load_params(params_path);
    dcrm::Benchmark bench =
        benchmark_name.empty() ? cfg.benchmark : dcrm::benchmark_from_string(benchmark_name);

    std::vector<dcrm::PolicySeries> series = pf.series_before(schema.holdout_year);
    dcrm::FitResult fit =
        dcrm::fit_dependence(series, cfg.params, bench, cfg.optimizer, threads);

    RunConfig fitted = cfg;
    fitted.params = fit.params;
    fitted.benchmark = bench;
    std::string tag = dcrm::to_string(bench);
    write_json(std::filesystem::path(out_dir) / ("params_" + tag + ".json"),
               params_to_json(fitted));

    json rep;
    rep["benchmark"] = tag;
    rep["loglik"] = fit.loglik;
    rep["converged"] = fit.converged;
    rep["boundary"] = fit.boundary;
    rep["evaluations"] = fit.evaluations;
    rep["grad_norm"] = fit.grad_norm;
    write_json(std::filesystem::path(out_dir) / ("fit_" + tag + ".json"), rep);

    if (!fit.converged) throw dcrm::convergence_error("dependence fit did not converge");
    return kOk;
}

int run_predict(const std::string& data_path, const std::string& schema_path,
                const std::string& params_path, int year, const std::string& out_dir,
                int threads) {
    dcrm::Schema schema = load_schema(schema_path);
    dcrm::Portfolio pf = dcrm::ingest(data_path, schema);
    RunConfig cfg = load_params(params_path);
    if (year == 0) year = schema.holdout_year;
    if (year == 0) throw dcrm::data_error("target year required (--year or schema holdout_year)");

    std::vector<dcrm::PolicyPremium> prem =
        dcrm::predict_portfolio(pf, cfg.params, cfg.benchmark, year, threads);

    std::string csv = "policy_id,year,freq_mean,sev_mean,multiplier_uncapped,multiplier,premium\n";
    for (const dcrm::PolicyPremium& p : prem) {
        csv += p.id + "," + std::to_string(p.year) + "," + fmt17(p.freq_mean) + "," +
               fmt17(p.sev_mean) + "," + fmt17(p.multiplier_uncapped) + "," +
               fmt17(p.multiplier) + "," + fmt17(p.premium) + "\n";
    }
    write_text(std::filesystem::path(out_dir) / "premiums.csv", csv);
    return kOk;
}

int run_validate(const std::string& data_path, const std::string& schema_path,
                 const std::string& params_path, int year, const std::string& out_dir,
                 int threads) {
    dcrm::Schema schema = load_schema(schema_path);
    dcrm::Portfolio pf = dcrm::ingest(data_path, schema);
    RunConfig cfg = load_params(params_path);
    if (year == 0) year = schema.holdout_year;
    if (year == 0) throw dcrm::data_error("hold-out year required (--year or schema holdout_year)");

    std::vector<dcrm::PolicyPremium> prem =
        dcrm::predict_portfolio(pf, cfg.params, cfg.benchmark, year, threads);
    dcrm::ValidationReport rep = dcrm::validate(pf, prem, year);

    json j;
    j["benchmark"] = dcrm::to_string(cfg.benchmark);
    j["year"] = year;
    j["n"] = rep.n;
    j["rmse"] = rep.rmse;
    j["mae"] = rep.mae;
    j["predicted_mean"] = rep.predicted_mean;
    j["actual_mean"] = rep.actual_mean;
    write_json(std::filesystem::path(out_dir) / "report.json", j);
    return kOk;
}

int run_simulate(const std::string& params_path, int n_policies, int n_years,
                 std::uint64_t seed, bool seed_given, const std::string& out_dir) {
    RunConfig cfg = load_params(params_path);
    if (!seed_given) seed = cfg.seed;
    if (cfg.params.zeta1.size() != 1 || cfg.params.zeta2.size() != 1)
        throw dcrm::data_error("simulate supports intercept-only designs");

    dcrm::Rng rng(seed);
    std::vector<std::vector<double>> x_path(static_cast<size_t>(n_years),
                                            std::vector<double>{1.0});
    std::string csv = "policy_id,year,claim_count,total_loss\n";
    for (int i = 0; i < n_policies; ++i) {
        std::vector<dcrm::SimStep> traj = dcrm::simulate(cfg.params, x_path, n_years, rng);
        for (int t = 0; t < n_years; ++t) {
            csv += "P" + std::to_string(i + 1) + "," + std::to_string(t + 1) + "," +
                   std::to_string(traj[static_cast<size_t>(t)].y1) + "," +
                   fmt17(traj[static_cast<size_t>(t)].y2) + "\n";
        }
    }
    write_text(std::filesystem::path(out_dir) / "portfolio.csv", csv);
    return kOk;
}

int run_weights(const std::string& data_path, const std::string& schema_path,
                const std::string& params_path, int year, const std::string& out_dir) {
    dcrm::Schema schema = load_schema(schema_path);
    dcrm::Portfolio pf = dcrm::ingest(data_path, schema);
    RunConfig cfg = load_params(params_path);
    if (year == 0) year = schema.holdout_year;

    std::string csv = "policy_id,chain,period,weight\n";
    for (const dcrm::PolicyHistory& ph : pf.policies) {
        std::vector<dcrm::Period> history;
        std::vector<std::vector<double>> xs;
        for (const dcrm::PolicyPeriod& pp : ph.periods) {
            if (year != 0 && pp.year >= year) continue;
            history.push_back(dcrm::Period{pp.x, pp.y1, pp.y2});
            xs.push_back(pp.x);
        }
        if (!history.empty()) xs.push_back(xs.back()); // forecast-date covariates
        int tau = static_cast<int>(history.size()) + 1;
        dcrm::PremiumWeights w = dcrm::premium_weights(history, xs, cfg.params, tau);
        csv += ph.id + ",count,0," + fmt17(w.freq.b0) + "\n";
        for (size_t t = 0; t < w.freq.b.size(); ++t)
            csv += ph.id + ",count," + std::to_string(t + 1) + "," + fmt17(w.freq.b[t]) + "\n";
        csv += ph.id + ",severity,0," + fmt17(w.sev.b0) + "\n";
        for (size_t t = 0; t < w.sev.b.size(); ++t)
            csv += ph.id + ",severity," + std::to_string(t + 1) + "," + fmt17(w.sev.b[t]) + "\n";
    }
    write_text(std::filesystem::path(out_dir) / "weights.csv", csv);
    return kOk;
}

int run_verify(std::uint64_t seed, const std::string& out_dir) {
    namespace oc = dcrm::oracle;
    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, bool pass, json detail) {
        detail["name"] = name;
        detail["pass"] = pass;
        checks.push_back(std::move(detail));
        all_pass = all_pass && pass;
    };

    // count chain: closed-form filter against quadrature
    {
        dcrm::FreqParams fp = dcrm::FreqParams::constant_rate(0.8, 1.0, 1.0, 0.2, 4);
        std::vector<long long> counts{1, 0, 2, 1};
        auto grid = oc::quadrature_filter_freq(fp, counts);
        dcrm::GammaState s = fp.initial_state();
        double worst = 0.0;
        for (size_t t = 0; t < counts.size(); ++t) {
            s = dcrm::update(s, fp.q, fp.rate(static_cast<int>(t) + 1), counts[t]);
            double mean = s.alpha / s.beta;
            double var = s.alpha / (s.beta * s.beta);
            worst = std::max(worst, std::fabs(grid[t].mean - mean) / mean);
            worst = std::max(worst, std::fabs(grid[t].variance - var) / var);
        }
        record("count_filter_vs_quadrature", worst < 1e-3, {{"max_rel_err", worst}});
    }

    // severity chain: closed-form filter against quadrature
    {
        dcrm::SevParams sp = dcrm::SevParams::constant_rate(
            dcrm::QSchedule{dcrm::QScheduleKind::Standard, 0.8}, 3.0, 2.0, 1.0, 1.5, 3);
        std::vector<double> ys{1.2, 0.7, 2.1};
        auto grid = oc::quadrature_filter_sev(sp, ys);
        dcrm::InvGammaState s = sp.initial_state();
        double worst = 0.0;
        for (size_t t = 0; t < ys.size(); ++t) {
            s = dcrm::update(s, sp.schedule, sp.rate(static_cast<int>(t) + 1), sp.psi, ys[t]);
            double mean = s.beta / (s.alpha - 1.0);
            double var = s.beta * s.beta / ((s.alpha - 1.0) * (s.alpha - 1.0) * (s.alpha - 2.0));
            worst = std::max(worst, std::fabs(grid[t].mean - mean) / mean);
            worst = std::max(worst, std::fabs(grid[t].variance - var) / var);
        }
        record("severity_filter_vs_quadrature", worst < 1e-3, {{"max_rel_err", worst}});
    }

    // joint model: particle filter 3-sigma agreement with the closed form
    {
        dcrm::CrmParams p;
        p.zeta1 = {std::log(0.5)};
        p.zeta2 = {std::log(1.0)};
        p.eta = -0.3;
        p.psi2 = 1.5;
        std::vector<dcrm::Period> hist{{{1.0}, 1, 0.9}, {{1.0}, 0, 0.0}, {{1.0}, 2, 3.4}};
        dcrm::Rng rng(seed);
        oc::PfResult pf = oc::particle_filter(hist, p, 100000, rng);
        dcrm::CrmState s = dcrm::initial_state(p);
        bool ok = true;
        double worst_z = 0.0;
        for (size_t t = 0; t < hist.size(); ++t) {
            s = dcrm::update(s, p, hist[t].x, hist[t]);
            double m1 = s.freq.alpha / s.freq.beta;
            double m2 = s.sev.beta / (s.sev.alpha - 1.0);
            double z1 = std::fabs(pf.freq[t].mean - m1) / pf.freq[t].mean_se;
            double z2 = std::fabs(pf.sev[t].mean - m2) / pf.sev[t].mean_se;
            worst_z = std::max({worst_z, z1, z2});
            ok = ok && z1 < 3.0 && z2 < 3.0;
        }
        record("joint_particle_filter", ok, {{"max_z", worst_z}});
    }

    // transition moment identities by Monte Carlo
    {
        dcrm::Rng rng(seed + 1);
        oc::TransitionCheck c = oc::transition_check_gamma(dcrm::Gamma{2.0, 2.0}, 0.5, 1000000, rng);
        bool ok = std::fabs(c.mean - 1.0) < 4.0 * c.mean_se &&
                  std::fabs(c.variance - 1.0) < 4.0 * c.variance_se;
        record("count_transition_moments", ok, {{"mean", c.mean}, {"variance", c.variance}});
    }
    {
        dcrm::Rng rng(seed + 2);
        // shape high enough that the one-step law has a finite fourth moment
        // (otherwise the empirical variance has no meaningful standard error)
        dcrm::InverseGamma ig{9.0, 8.0};
        oc::TransitionCheck c = oc::transition_check_ig(
            ig, dcrm::QSchedule{dcrm::QScheduleKind::Standard, 0.8}, 1000000, rng);
        double mean = ig.scale / (ig.shape - 1.0);
        double var = ig.scale * ig.scale /
                     ((ig.shape - 1.0) * (ig.shape - 1.0) * (ig.shape - 2.0)) / 0.8;
        bool ok = std::fabs(c.mean - mean) < 4.0 * c.mean_se &&
                  std::fabs(c.variance - var) < 4.0 * c.variance_se;
        record("severity_transition_moments", ok, {{"mean", c.mean}, {"variance", c.variance}});
    }

    json out;
    out["seed"] = seed;
    out["all_pass"] = all_pass;
    out["checks"] = checks;
    if (out_dir.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        write_json(std::filesystem::path(out_dir) / "verify.json", out);
    }
    return all_pass ? kOk : kNumericError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic frequency-severity credibility toolkit"};
    app.require_subcommand(1);

    std::string data_path, schema_path, params_path, out_dir, benchmark_name, variant_name = "plain";
    int year = 0, n_policies = 100, n_years = 5;
    int threads = env_threads();
    std::uint64_t seed = 0;

    auto* fit_glm = app.add_subcommand("fit-glm", "fit the regression step");
    fit_glm->add_option("--data", data_path, "portfolio CSV")->required();
    fit_glm->add_option("--schema", schema_path, "schema JSON");
    fit_glm->add_option("--out", out_dir, "output directory")->required();
    fit_glm->add_option("--variant", variant_name, "model variant for the emitted params");
    fit_glm->add_option("--seed", seed, "seed recorded in the emitted params");

    auto* fit_dep = app.add_subcommand("fit-dep", "fit the dependence step");
    fit_dep->add_option("--data", data_path, "portfolio CSV")->required();
    fit_dep->add_option("--schema", schema_path, "schema JSON");
    fit_dep->add_option("--params", params_path, "params JSON from fit-glm")->required();
    fit_dep->add_option("--benchmark", benchmark_name, "naive|dglm|static|proposed");
    fit_dep->add_option("--out", out_dir, "output directory")->required();
    fit_dep->add_option("--threads", threads, "worker threads");

    auto* predict = app.add_subcommand("predict", "price a target year per policy");
    predict->add_option("--data", data_path, "portfolio CSV")->required();
    predict->add_option("--schema", schema_path, "schema JSON");
    predict->add_option("--params", params_path, "params JSON")->required();
    predict->add_option("--year", year, "target year");
    predict->add_option("--out", out_dir, "output directory")->required();
    predict->add_option("--threads", threads, "worker threads");

    auto* validate = app.add_subcommand("validate", "hold-out error report");
    validate->add_option("--data", data_path, "portfolio CSV")->required();
    validate->add_option("--schema", schema_path, "schema JSON");
    validate->add_option("--params", params_path, "params JSON")->required();
    validate->add_option("--year", year, "hold-out year");
    validate->add_option("--out", out_dir, "output directory")->required();
    validate->add_option("--threads", threads, "worker threads");

    auto* simulate = app.add_subcommand("simulate", "draw a synthetic portfolio");
    simulate->add_option("--params", params_path, "params JSON")->required();
    simulate->add_option("--policies", n_policies, "number of policies");
    simulate->add_option("--years", n_years, "periods per policy");
    auto* seed_opt = simulate->add_option("--seed", seed, "rng seed");
    simulate->add_option("--out", out_dir, "output directory")->required();

    auto* weights = app.add_subcommand("weights", "per-policy premium weight vectors");
    weights->add_option("--data", data_path, "portfolio CSV")->required();
    weights->add_option("--schema", schema_path, "schema JSON");
    weights->add_option("--params", params_path, "params JSON")->required();
    weights->add_option("--year", year, "forecast year");
    weights->add_option("--out", out_dir, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "run the brute-force verification suite");
    verify->add_option("--seed", seed, "rng seed")->required();
    verify->add_option("--out", out_dir, "output directory (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (app.got_subcommand(fit_glm))
            return run_fit_glm(data_path, schema_path, out_dir, variant_name, seed);
        if (app.got_subcommand(fit_dep))
            return run_fit_dep(data_path, schema_path, params_path, benchmark_name, out_dir,
                               threads);
        if (app.got_subcommand(predict))
            return run_predict(data_path, schema_path, params_path, year, out_dir, threads);
        if (app.got_subcommand(validate))
            return run_validate(data_path, schema_path, params_path, year, out_dir, threads);
        if (app.got_subcommand(simulate))
            return run_simulate(params_path, n_policies, n_years, seed, seed_opt->count() > 0,
                                out_dir);
        if (app.got_subcommand(weights))
            return run_weights(data_path, schema_path, params_path, year, out_dir);
        if (app.got_subcommand(verify)) return run_verify(seed, out_dir);
    } catch (const dcrm::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const dcrm::existence_error& e) {
        std::cerr << "existence error: " << e.what() << "\n";
        return kExistenceError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericError;
    }
    return kUsage;
}
