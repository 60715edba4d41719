// Command-line front end: certify / pde / mc / oracle / fit / verify-theorem.
// Exit codes: 0 pass, 1 theorem-check failure, 2 configuration error,
// 3 numerical abort, 4 vacuous bound.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bgkit/bgkit.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitTheoremFail = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalAbort = 3;
constexpr int kExitVacuous = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;  // empty: use config's out_dir
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

bgkit::RunConfig load(const CommonArgs& args) {
    bgkit::RunConfig cfg = bgkit::load_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed) cfg.seed = *args.seed;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

std::string path_in(const bgkit::RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

int run_certify(const CommonArgs& args) {
    const bgkit::RunConfig cfg = load(args);
    const bgkit::Certificate cert = bgkit::certify(cfg.rho, cfg.lambda, cfg.delta);
    const std::string csv = bgkit::certificate_csv(cert, cfg.precision);
    bgkit::write_text(path_in(cfg, "certify.csv"), csv);
    std::cout << csv;
    if (!cert.valid) return kExitTheoremFail;
    return cert.vacuous ? kExitVacuous : kExitPass;
}

int run_pde(const CommonArgs& args) {
    const bgkit::RunConfig cfg = load(args);
    const bgkit::ModelParams p = bgkit::to_model_params(cfg);
    bgkit::DensityField f = bgkit::initial_from_config(cfg, bgkit::grid_from_config(cfg));
    const bgkit::RunResult res = bgkit::run(p, f, bgkit::run_options_from_config(cfg, args.threads));
    bgkit::write_text(path_in(cfg, "pde_series.csv"),
                      bgkit::decay_series_csv(res.series, cfg.precision));
    if (cfg.write_field) bgkit::write_field(path_in(cfg, "final_field.bin"), res.final_field);
    std::cerr << "pde: " << res.series.t.size() << " observations, mass drift = "
              << bgkit::fmt17(res.mass_drift) << "\n";
    return kExitPass;
}

int run_mc(const CommonArgs& args) {
    const bgkit::RunConfig cfg = load(args);
    const bgkit::ModelParams p = bgkit::to_model_params(cfg);
    Eigen::VectorXd m0(2 * p.d);
    for (int k = 0; k < p.d; ++k) {
        m0(k) = cfg.init_mean_x;
        m0(p.d + k) = cfg.init_mean_y;
    }
    Eigen::MatrixXd cov0 = Eigen::MatrixXd::Zero(2 * p.d, 2 * p.d);
    const double s2 = p.sigma * p.sigma;
    for (int k = 0; k < p.d; ++k) {
        cov0(k, k) = s2 / p.rho;
        cov0(p.d + k, p.d + k) = s2;
    }
    bgkit::ParticleEnsemble ens =
        bgkit::make_gaussian_ensemble(p, static_cast<int>(cfg.n_particles), m0, cov0, cfg.seed);
    bgkit::McOptions opt;
    opt.T = cfg.T;
    opt.obs_dt = cfg.observe_every * cfg.dt;
    opt.dt_flight = cfg.dt;
    opt.threads = args.threads;
    const bgkit::MomentSeries series = bgkit::simulate(p, ens, opt);
    bgkit::write_text(path_in(cfg, "mc_moments.csv"),
                      bgkit::moment_series_csv(series, cfg.precision));
    return kExitPass;
}

int run_oracle(const CommonArgs& args) {
    const bgkit::RunConfig cfg = load(args);
    const bgkit::ModelParams p = bgkit::to_model_params(cfg);
    Eigen::VectorXd m0(2 * p.d);
    for (int k = 0; k < p.d; ++k) {
        m0(k) = cfg.init_mean_x;
        m0(p.d + k) = cfg.init_mean_y;
    }
    Eigen::MatrixXd P0 = m0 * m0.transpose();
    const double s2 = p.sigma * p.sigma;
    for (int k = 0; k < p.d; ++k) {
        P0(k, k) += s2 / p.rho;
        P0(p.d + k, p.d + k) += s2;
    }
    const bgkit::MomentSeries series =
        bgkit::moment_ode_oracle(p, m0, P0, cfg.T, cfg.observe_every * cfg.dt, cfg.ode_dt);
    bgkit::write_text(path_in(cfg, "oracle_moments.csv"),
                      bgkit::moment_series_csv(series, cfg.precision));
    return kExitPass;
}

int run_fit(const CommonArgs& args, std::string series_path) {
    bgkit::RunConfig cfg;
    if (!args.config_path.empty()) {
        cfg = load(args);
    } else {
        if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
        std::filesystem::create_directories(cfg.out_dir);
    }
    if (series_path.empty()) series_path = path_in(cfg, "pde_series.csv");
    const bgkit::CsvTable table = bgkit::parse_csv(bgkit::read_text(series_path));
    const std::vector<double> t = table.values("t");

    std::ostringstream out;
    out << "column,rate,intercept,rms_residual,n,t_lo,t_hi\n";
    for (const std::string col : {"I", "I_M", "entropy", "l2"}) {
        double rate = std::numeric_limits<double>::quiet_NaN();
        double icpt = rate, rms = rate, lo = rate, hi = rate;
        std::size_t n = 0;
        try {
            const bgkit::FitResult fit = bgkit::fit_decay_rate(t, table.values(col));
            rate = fit.rate;
            icpt = fit.intercept;
            rms = fit.rms_residual;
            n = fit.n;
            lo = fit.t_lo;
            hi = fit.t_hi;
        } catch (const std::exception& e) {
            std::cerr << "fit: column " << col << " skipped: " << e.what() << "\n";
        }
        out << col << ',' << bgkit::fmt_g(rate, cfg.precision) << ','
            << bgkit::fmt_g(icpt, cfg.precision) << ',' << bgkit::fmt_g(rms, cfg.precision) << ','
            << n << ',' << bgkit::fmt_g(lo, cfg.precision) << ','
            << bgkit::fmt_g(hi, cfg.precision) << '\n';
    }
    const std::string csv = out.str();
    bgkit::write_text(path_in(cfg, "fit.csv"), csv);
    std::cout << csv;
    return kExitPass;
}

int run_verify(const CommonArgs& args, double slack) {
    const bgkit::RunConfig cfg = load(args);
    const bgkit::TheoremReport rep = bgkit::verify_theorem(cfg, slack, args.threads);
    bgkit::write_text(path_in(cfg, "certify.csv"), bgkit::certificate_csv(rep.cert, cfg.precision));
    if (!rep.series.t.empty())
        bgkit::write_text(path_in(cfg, "pde_series.csv"),
                          bgkit::decay_series_csv(rep.series, cfg.precision));
    bgkit::write_text(path_in(cfg, "report.csv"), rep.csv(cfg.precision));
    bgkit::write_text(path_in(cfg, "report.txt"), rep.summary());
    std::cout << rep.summary();
    return static_cast<int>(rep.status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic decay toolkit: certificate algebra, phase-space PDE, jump-process "
                 "Monte Carlo, moment oracles, rate fitting"};
    app.require_subcommand(1);

    CommonArgs args;
    double slack = 0.10;
    std::string series_path;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", args.config_path, "INI config file");
        if (config_required) c->required();
        sub->add_option("--out", args.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", args.seed, "RNG seed (overrides config)");
        sub->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* certify = app.add_subcommand("certify", "decay-rate certificate as CSV");
    add_common(certify, true);
    auto* pde = app.add_subcommand("pde", "grid run: decay functionals time series");
    add_common(pde, true);
    auto* mc = app.add_subcommand("mc", "particle run: empirical moments with standard errors");
    add_common(mc, true);
    auto* oracle = app.add_subcommand("oracle", "closed moment ODE reference series");
    add_common(oracle, true);
    auto* fit = app.add_subcommand("fit", "fit exponential rates to a series CSV");
    add_common(fit, false);
    fit->add_option("series", series_path, "input series CSV (default: OUT/pde_series.csv)");
    auto* verify = app.add_subcommand("verify-theorem", "certify + pde + fit, checked end to end");
    add_common(verify, true);
    verify->add_option("--slack", slack, "relative slack on the pointwise envelope");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        if (certify->parsed()) return run_certify(args);
        if (pde->parsed()) return run_pde(args);
        if (mc->parsed()) return run_mc(args);
        if (oracle->parsed()) return run_oracle(args);
        if (fit->parsed()) return run_fit(args, series_path);
        if (verify->parsed()) return run_verify(args, slack);
    } catch (const bgkit::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfigError;
    } catch (const bgkit::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumericalAbort;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalAbort;
    }
    return kExitConfigError;
}
