// Command-line driver.  Subcommands: simulate | skeleton | mam | tails |
// sample-invariant.  Every run drops a manifest.json into the output
// directory, on failure as well as success; an existing manifest is only
// overwritten under --force.
//
// Exit codes: 0 success, 1 config error, 2 blow-up, 3 non-convergence.

#include "burgers_ldp/action.hpp"
#include "burgers_ldp/experiments.hpp"
#include "burgers_ldp/io.hpp"
#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/solver.hpp"
#include "burgers_ldp/spectral.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace burgers_ldp;
namespace fs = std::filesystem;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

SolverConfig solver_from(const Config& cfg) {
    SolverConfig sc;
    sc.n_modes = static_cast<std::size_t>(cfg.get_u64("solver.n_modes", 64));
    sc.h = cfg.get_double("solver.h", 1e-3);
    sc.nonlinearity = cfg.get_bool("solver.nonlinearity", true);
    sc.dealias_m = static_cast<std::size_t>(cfg.get_u64("solver.dealias_m", 0));
    sc.blowup_factor = cfg.get_double("solver.blowup_factor", 1e3);
    const std::string scheme = cfg.get_string("solver.scheme", "exponential-euler");
    if (scheme == "exponential-euler") {
        sc.scheme = Scheme::exponential_euler;
    } else if (scheme == "semi-implicit") {
        sc.scheme = Scheme::semi_implicit;
    } else {
        throw ConfigError("solver.scheme must be 'exponential-euler' or 'semi-implicit', got '" +
                              scheme + "'",
                          "solver.scheme", 0);
    }
    sc.validate();
    return sc;
}

NoiseSpec noise_from(const Config& cfg, std::size_t n_modes) {
    const double alpha = cfg.get_double("noise.alpha", 0.0);
    const double beta = cfg.get_double("noise.beta", 1.0);
    const double epsilon = cfg.get_double("noise.epsilon");
    double delta = 0.0;
    if (cfg.has("noise.delta")) {
        delta = cfg.get_double("noise.delta");
    } else {
        const double theta =
            cfg.get_double("schedule.theta", DeltaSchedule::standard(alpha, beta).theta);
        delta = DeltaSchedule(theta, alpha, beta).delta(epsilon);
    }
    return NoiseSpec(alpha, beta, delta, epsilon, n_modes);
}

SpectralField field_from(const Config& cfg, const std::string& key, std::size_t n_modes) {
    SpectralField x(n_modes);
    if (!cfg.has(key)) return x;
    const std::vector<double> coeffs = cfg.get_double_list(key);
    if (coeffs.size() > n_modes)
        throw ConfigError("'" + key + "' lists " + std::to_string(coeffs.size()) +
                              " coefficients but only " + std::to_string(n_modes) +
                              " modes are resolved",
                          key, 0);
    std::copy(coeffs.begin(), coeffs.end(), x.c.begin());
    return x;
}

std::size_t horizon_steps(double horizon, double h, const char* key) {
    const auto n = std::llround(horizon / h);
    if (n < 1 || std::abs(static_cast<double>(n) * h - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ConfigError(std::string(key) + " must be a positive integer multiple of solver.h",
                          key, 0);
    return static_cast<std::size_t>(n);
}

ExperimentConfig experiment_from(const Config& cfg) {
    ExperimentConfig ex;
    ex.epsilons = cfg.has("experiment.epsilons") ? cfg.get_double_list("experiment.epsilons")
                                                 : std::vector<double>{0.2, 0.1, 0.05};
    ex.alpha = cfg.get_double("noise.alpha", 0.0);
    ex.beta = cfg.get_double("noise.beta", 1.0);
    const double theta =
        cfg.get_double("schedule.theta", DeltaSchedule::standard(ex.alpha, ex.beta).theta);
    ex.schedule = DeltaSchedule(theta, ex.alpha, ex.beta);
    ex.solver = solver_from(cfg);
    // Ensemble runs default to the desk-scale truncation, not the solver's.
    if (!cfg.has("solver.n_modes")) ex.solver.n_modes = 32;
    ex.n_modes = ex.solver.n_modes;
    ex.n_chains = static_cast<std::size_t>(cfg.get_u64("experiment.chains", 8));
    ex.n_traj = static_cast<std::size_t>(cfg.get_u64("experiment.n_traj", 10000));
    ex.burn_in = cfg.get_double("experiment.burn_in", 10.0);
    ex.horizon = cfg.get_double("experiment.horizon", 110.0);
    ex.spacing = cfg.get_double("experiment.spacing", 1.0);
    ex.radius_grid = cfg.has("experiment.radius_grid")
                         ? cfg.get_double_list("experiment.radius_grid")
                         : std::vector<double>{0.1, 0.2, 0.3};
    ex.sigma_small = cfg.get_double("experiment.sigma_small", 0.1);
    ex.seed = cfg.get_u64("seed", 1);
    ex.validate();
    return ex;
}

int run_simulate(const Config& cfg, const std::string& out, RunManifest& man) {
    const SolverConfig sc = solver_from(cfg);
    const NoiseSpec noise = noise_from(cfg, sc.n_modes);
    const SpectralField x = field_from(cfg, "initial.coefficients", sc.n_modes);
    const double horizon = cfg.get_double("sim.horizon", 1.0);
    const std::size_t n_steps = horizon_steps(horizon, sc.h, "sim.horizon");
    const auto record_every = static_cast<std::size_t>(cfg.get_u64("sim.record_every", 1));

    man.n_modes = sc.n_modes;
    man.scheme = sc.scheme == Scheme::exponential_euler ? "exponential-euler" : "semi-implicit";
    {
        const double stiff = sc.h * laplacian_eigenvalue(sc.n_modes);
        man.notes.push_back("stiffness indicator h * (N pi)^2 = " + std::to_string(stiff) +
                            " (linear part integrated exactly; advection explicit)");
    }

    NormalSampler xi(man.master_seed, 0);
    const SimulationResult sim = simulate_sbe(x, noise, sc, n_steps, record_every, xi);

    const std::string traj_path = out + "/trajectory.csv";
    write_trajectory_csv(traj_path, sim.u);
    man.outputs.push_back(traj_path);
    return 0;
}

int run_skeleton(const Config& cfg, const std::string& out, RunManifest& man) {
    const SolverConfig sc = solver_from(cfg);
    const double alpha = cfg.get_double("noise.alpha", 0.0);
    const SpectralField x = field_from(cfg, "initial.coefficients", sc.n_modes);
    const double horizon = cfg.get_double("sim.horizon", 1.0);
    const std::size_t n_steps = horizon_steps(horizon, sc.h, "sim.horizon");
    const auto record_every = static_cast<std::size_t>(cfg.get_u64("sim.record_every", 1));

    TrajectoryPath controls; // empty: zero forcing
    if (cfg.has("control.path")) controls = read_trajectory_csv(cfg.get_string("control.path"));

    man.n_modes = sc.n_modes;
    man.scheme = sc.scheme == Scheme::exponential_euler ? "exponential-euler" : "semi-implicit";

    const TrajectoryPath u = solve_skeleton(x, controls, alpha, sc, n_steps, record_every);
    const std::string path = out + "/skeleton.csv";
    write_trajectory_csv(path, u);
    man.outputs.push_back(path);
    return 0;
}

int run_mam(const Config& cfg, const std::string& out, RunManifest& man) {
    ActionProblem prob;
    prob.n_modes = static_cast<std::size_t>(cfg.get_u64("mam.n_modes", 16));
    prob.alpha = cfg.get_double("noise.alpha", 0.0);
    prob.nonlinear = cfg.get_bool("mam.nonlinear", true);
    prob.start = field_from(cfg, "mam.start", prob.n_modes);
    if (!cfg.has("mam.target"))
        throw ConfigError("missing required key 'mam.target' (comma-separated coefficients)",
                          "mam.target", 0);
    prob.target = field_from(cfg, "mam.target", prob.n_modes);
    if (cfg.get_bool("mam.sigma_weights", false)) {
        const double eps = cfg.get_double("noise.epsilon", 1.0);
        prob.weight_noise = NoiseSpec(prob.alpha, cfg.get_double("noise.beta", 1.0),
                                      cfg.get_double("noise.delta", 0.0), eps, prob.n_modes);
    }

    QuasipotentialOptions opt;
    opt.t0 = cfg.get_double("mam.t0", 1.0);
    opt.max_rungs = static_cast<std::size_t>(cfg.get_u64("mam.max_rungs", 6));
    opt.rel_tol = cfg.get_double("mam.rel_tol", 1e-3);
    opt.m_per_unit_t = static_cast<std::size_t>(cfg.get_u64("mam.m_per_unit_t", 128));
    opt.m_cap = static_cast<std::size_t>(cfg.get_u64("mam.m_cap", 4096));
    opt.mam.grad_tol = cfg.get_double("mam.grad_tol", 1e-8);
    opt.mam.max_iter = static_cast<std::size_t>(cfg.get_u64("mam.max_iter", 5000));
    opt.mam.verbose = cfg.get_bool("mam.verbose", false);

    man.n_modes = prob.n_modes;
    man.scheme = "minimum-action";

    const QuasipotentialResult res = quasipotential(prob, opt);

    nlohmann::json j;
    j["value"] = res.value;
    j["horizon"] = res.horizon;
    j["ladder"] = res.ladder;
    j["converged"] = res.converged;
    j["grad_norm"] = res.best.grad_norm;
    j["iterations"] = res.best.iterations;
    j["intervals"] = res.best.path.n_steps();
    j["alpha"] = prob.alpha;
    j["n_modes"] = prob.n_modes;
    j["note"] = "the horizon-doubling ladder approximates the infimum over T heuristically; "
                "'converged' covers both the ladder settling and the final minimization";
    const std::string json_path = out + "/quasipotential.json";
    {
        std::ofstream f(json_path);
        f << j.dump(2) << '\n';
        if (!f) throw std::runtime_error("write failed on '" + json_path + "'");
    }
    man.outputs.push_back(json_path);

    const std::string path_csv = out + "/instanton.csv";
    write_trajectory_csv(path_csv, res.best.path);
    man.outputs.push_back(path_csv);

    if (!res.converged) {
        man.notes.push_back("minimization did not converge; best value written");
        return 3;
    }
    return 0;
}

int run_tails(const Config& cfg, const std::string& out, RunManifest& man) {
    const std::string kind = cfg.get_string("tails.kind", "invariant");
    TailReport report;
    if (kind == "invariant") {
        const ExperimentConfig ex = experiment_from(cfg);
        man.n_modes = ex.n_modes;
        man.scheme =
            ex.solver.scheme == Scheme::exponential_euler ? "exponential-euler" : "semi-implicit";
        std::vector<InvariantEnsemble> ensembles;
        ensembles.reserve(ex.epsilons.size());
        for (std::size_t i = 0; i < ex.epsilons.size(); ++i)
            ensembles.push_back(sample_invariant(ex, i));
        report = invariant_tail_report(ensembles, ex);
    } else if (kind == "time-average") {
        const ExperimentConfig ex = experiment_from(cfg);
        man.n_modes = ex.n_modes;
        man.scheme =
            ex.solver.scheme == Scheme::exponential_euler ? "exponential-euler" : "semi-implicit";
        report = time_average_tail_report(ex);
    } else if (kind == "gaussian") {
        const auto n_modes = static_cast<std::size_t>(cfg.get_u64("solver.n_modes", 1));
        GaussianTailConfig gc(NoiseSpec(cfg.get_double("noise.alpha", 0.0),
                                        cfg.get_double("noise.beta", 1.0),
                                        cfg.get_double("noise.delta", 0.0), 1.0, n_modes));
        gc.radius = cfg.get_double("tails.radius", 0.5);
        gc.epsilons = cfg.get_double_list("experiment.epsilons");
        gc.n_samples.clear();
        for (double v : cfg.get_double_list("experiment.n_samples"))
            gc.n_samples.push_back(static_cast<std::size_t>(std::llround(v)));
        gc.spacing = cfg.get_double("experiment.spacing", 1.0);
        gc.burn_steps = static_cast<std::size_t>(cfg.get_u64("experiment.burn_steps", 16));
        gc.seed = cfg.get_u64("seed", 9);
        man.n_modes = n_modes;
        man.scheme = "ou-exact";
        report = gaussian_tail_experiment(gc);
    } else {
        throw ConfigError("tails.kind must be 'invariant', 'time-average' or 'gaussian', got '" +
                              kind + "'",
                          "tails.kind", 0);
    }

    const std::string path = out + "/tails.csv";
    write_tail_report_csv(path, report);
    man.outputs.push_back(path);
    return 0;
}

int run_sample_invariant(const Config& cfg, const std::string& out, RunManifest& man) {
    const ExperimentConfig ex = experiment_from(cfg);
    const auto eps_index = static_cast<std::size_t>(cfg.get_u64("experiment.eps_index", 0));
    man.n_modes = ex.n_modes;
    man.scheme =
        ex.solver.scheme == Scheme::exponential_euler ? "exponential-euler" : "semi-implicit";

    const InvariantEnsemble ens = sample_invariant(ex, eps_index);

    const std::string states_path = out + "/ensemble.csv";
    {
        std::ofstream f(states_path);
        if (!f) throw std::runtime_error("cannot open '" + states_path + "' for writing");
        f << "chain,sample";
        for (std::size_t k = 1; k <= ex.n_modes; ++k) f << ",u_" << k;
        f << '\n';
        char buf[40];
        for (std::size_t c = 0; c < ens.n_chains; ++c) {
            for (std::size_t j = 0; j < ens.n_per_chain; ++j) {
                f << c << ',' << j;
                const SpectralField& s = ens.states[c * ens.n_per_chain + j];
                for (double v : s.c) {
                    std::snprintf(buf, sizeof buf, "%.17g", v);
                    f << ',' << buf;
                }
                f << '\n';
            }
        }
        if (!f) throw std::runtime_error("write failed on '" + states_path + "'");
    }
    man.outputs.push_back(states_path);

    const MomentEstimate h1 = ensemble_moment(ens, 1.0);
    const MomentEstimate h0 = ensemble_moment(ens, 0.0);
    nlohmann::json j;
    j["epsilon"] = ens.epsilon;
    j["n_chains"] = ens.n_chains;
    j["n_per_chain"] = ens.n_per_chain;
    j["h1_sq_mean"] = h1.mean;
    j["h1_sq_std_err"] = h1.std_err;
    j["h_sq_mean"] = h0.mean;
    j["h_sq_std_err"] = h0.std_err;
    const std::string json_path = out + "/moments.json";
    {
        std::ofstream f(json_path);
        f << j.dump(2) << '\n';
        if (!f) throw std::runtime_error("write failed on '" + json_path + "'");
    }
    man.outputs.push_back(json_path);
    return 0;
}

using CommandBody = std::function<int(const Config&, const std::string&, RunManifest&)>;

int run_command(const CliOptions& opt, const std::string& name, const CommandBody& body) {
    RunManifest man;
    man.command = name;
    man.start_time = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();

    std::string out_dir = opt.out_dir;
    bool preserve_existing = false;
    int code = 0;

    try {
        Config cfg = Config::load(opt.config_path);
        if (opt.seed) cfg.set_u64("seed", *opt.seed);
        if (out_dir.empty()) out_dir = cfg.get_string("output.dir", ".");
        fs::create_directories(out_dir);

        const std::string manifest_path = out_dir + "/manifest.json";
        if (fs::exists(manifest_path) && !opt.force) {
            preserve_existing = true;
            throw ConfigError("'" + manifest_path +
                                  "' already exists; pass --force to overwrite this run",
                              "", 0);
        }

        man.master_seed = cfg.get_u64("seed", 1);
        man.config_echo = cfg.serialize();
        code = body(cfg, out_dir, man);
        if (code == 0) man.status = "ok";
        else if (code == 3) man.status = "no-convergence";
        else man.status = "error";
    } catch (const BlowUpError& e) {
        man.status = "blow-up";
        man.notes.push_back(e.what());
        std::fprintf(stderr, "error: %s\n", e.what());
        code = 2;
    } catch (const std::exception& e) {
        man.status = "config-error";
        man.notes.push_back(e.what());
        std::fprintf(stderr, "error: %s\n", e.what());
        code = 1;
    }

    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!out_dir.empty() && !preserve_existing) {
        try {
            man.write_atomic(out_dir + "/manifest.json");
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            if (code == 0) code = 1;
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral solver and large-deviations toolkit for the stochastic Burgers "
                 "equation on (0,1)"};
    app.require_subcommand(1);

    CliOptions opt;
    int exit_code = 0;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "integrate the stochastic equation and write the trajectory"},
        {"skeleton", "integrate the controlled deterministic equation"},
        {"mam", "minimize the action and estimate the quasipotential"},
        {"tails", "estimate tail probabilities and their LDP diagnostics"},
        {"sample-invariant", "sample the invariant law and write the ensemble"},
    };
    const std::map<std::string, CommandBody> bodies = {
        {"simulate", run_simulate},
        {"skeleton", run_skeleton},
        {"mam", run_mam},
        {"tails", run_tails},
        {"sample-invariant", run_sample_invariant},
    };

    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "config file (flat key = value)")
            ->required();
        sub->add_option("--out", opt.out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
        sub->add_flag("--force", opt.force, "overwrite an existing manifest");
        sub->callback(
            [&, name = name] { exit_code = run_command(opt, name, bodies.at(name)); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int c = app.exit(e);
        return c == 0 ? 0 : 1;
    }
    return exit_code;
}
