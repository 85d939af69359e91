// Command-line driver: experiment orchestration and data emission.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chainheat/experiment.hpp"

namespace {

using namespace chainheat;

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    std::uint64_t budget = 0;
    bool budget_set = false;
};

void attach_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "override RNG seed")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--budget", flags.budget, "override substep budget")
        ->each([&](const std::string&) { flags.budget_set = true; });
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config_file(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.budget_set) cfg.budget = flags.budget;
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

void emit(const ExperimentConfig& cfg, const std::string& name,
          const std::string& payload) {
    std::cout << payload << std::endl;
    if (!cfg.out_dir.empty()) {
        std::ofstream out(cfg.out_dir + "/" + name);
        out << payload << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"harmonic-chain heat-transport toolkit"};
    app.require_subcommand(1);

    double diff_omega0 = 1.0;
    int diff_quad = 4096;
    CommonFlags fl_diffusion, fl_gamma, fl_simulate, fl_covariance, fl_heat,
        fl_compare, fl_regimes, fl_equi;

    auto* c_diff = app.add_subcommand("diffusion", "three routes to the diffusion coefficient");
    c_diff->add_option("--omega0", diff_omega0, "pinning frequency (> 0)");
    c_diff->add_option("--quad-points", diff_quad, "quadrature points for the kinetic integral");
    attach_common(c_diff, fl_diffusion);

    auto* c_gamma = app.add_subcommand("gamma", "noise strength of the chaotic forcing");
    attach_common(c_gamma, fl_gamma);
    auto* c_sim = app.add_subcommand("simulate", "deterministic ensemble leg");
    attach_common(c_sim, fl_simulate);
    auto* c_cov = app.add_subcommand("covariance", "covariance-flow leg");
    attach_common(c_cov, fl_covariance);
    auto* c_heat = app.add_subcommand("heat", "macroscopic heat-equation reference");
    attach_common(c_heat, fl_heat);
    auto* c_cmp = app.add_subcommand("compare", "deterministic vs covariance vs heat equation");
    attach_common(c_cmp, fl_compare);
    auto* c_reg = app.add_subcommand("regimes", "sub/diffusive/super time-scale scan");
    attach_common(c_reg, fl_regimes);
    auto* c_eq = app.add_subcommand("equipartition", "kinetic vs total energy balance");
    attach_common(c_eq, fl_equi);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_diff->parsed()) {
            if (diff_omega0 <= 0.0) {
                std::cerr << "error: omega0 must be > 0\n";
                return 2;
            }
            ExperimentConfig cfg = resolve_config(fl_diffusion);
            DiffusionReport r = cmd_diffusion(diff_omega0, diff_quad);
            emit(cfg, "diffusion.json", to_json(r));
            return r.pass ? 0 : 1;
        }
        if (c_gamma->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_gamma);
            GammaReport r = cmd_gamma(cfg);
            emit(cfg, "gamma.json", to_json(r));
            return r.pass ? 0 : 1;
        }
        if (c_sim->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_simulate);
            ChainParams params(cfg.n, cfg.omega0, cfg.epsilon, cfg.substeps);
            MapModel map(cfg.map_degree, cfg.map_perturbation);
            DensityGrid rho = invariant_density(map, cfg.grid_size, 1e-13);
            Observable b = center_observable(Observable{cfg.observable}, rho);
            TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, std::min(cfg.k_max, (cfg.n - 1) / 2));
            RunRequest req;
            req.t_macro = cfg.t_macro;
            req.ensemble = cfg.ensemble;
            req.seed = cfg.seed;
            req.budget = cfg.budget;
            req.workers = (cfg.workers > 0) ? cfg.workers : workers_from_env();
            try {
                RunResult rr = run(params, map, b, T0, req);
                std::vector<ProfileRow> rows;
                for (std::size_t i = 0; i < rr.t_macro_actual.size(); ++i)
                    for (int x = 0; x < cfg.n; ++x)
                        rows.push_back({"deterministic", rr.t_macro_actual[i], x,
                                        rr.mean_energy[i][x], rr.stderr_energy[i][x]});
                std::string path = cfg.out_dir.empty() ? std::string("profiles_deterministic.csv")
                                                       : cfg.out_dir + "/profiles_deterministic.csv";
                write_profiles_csv(path, rows);
                std::cout << "wrote " << path << " (" << rr.substeps_executed
                          << " substeps)\n";
            } catch (const budget_error& e) {
                std::cerr << "refused: estimated " << e.estimated_substeps
                          << " substeps exceeds budget " << cfg.budget << "\n";
                return 3;
            }
            return 0;
        }
        if (c_cov->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_covariance);
            ResolvedPhysics phys = resolve_physics(cfg);
            GeneratorParams gp(cfg.n, cfg.omega0, phys.gamma);
            int km = std::min(cfg.k_max, (cfg.n - 1) / 2);
            TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, km);
            CovMatrix S(cfg.n);
            for (int x = 0; x < cfg.n; ++x)
                S.p(x, x) = 2.0 * T0.density(static_cast<double>(x) / cfg.n);
            double reached = 0.0;
            std::vector<ProfileRow> rows;
            for (double t : cfg.t_macro) {
                double micro = t * cfg.n * cfg.n;
                if (micro > reached) {
                    S = evolve_covariance(S, gp, micro - reached);
                    reached = micro;
                }
                std::vector<double> prof = energy_profile_from_cov(S, cfg.omega0);
                for (int x = 0; x < cfg.n; ++x)
                    rows.push_back({"covariance_ode", t, x, prof[x], 0.0});
            }
            if (!cfg.out_dir.empty()) {
                write_profiles_csv(cfg.out_dir + "/profiles_covariance_ode.csv", rows);
                write_covariance_csv(cfg.out_dir + "/covariance_final.csv", S);
                write_covariance_binary(cfg.out_dir + "/covariance_final.bin", S);
                std::cout << "wrote covariance leg outputs to " << cfg.out_dir << "\n";
            } else {
                write_profiles_csv("profiles_covariance_ode.csv", rows);
                std::cout << "wrote profiles_covariance_ode.csv\n";
            }
            return 0;
        }
        if (c_heat->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_heat);
            ResolvedPhysics phys = resolve_physics(cfg);
            TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, cfg.k_max);
            for (double t : cfg.t_macro) {
                TorusMeasure m = heat_evolve(T0, t, phys.diffusion, phys.gamma);
                std::string payload = measure_to_json(m);
                char name[64];
                std::snprintf(name, sizeof(name), "heat_t%g.json", t);
                emit(cfg, name, payload);
            }
            return 0;
        }
        if (c_cmp->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_compare);
            CompareReport r = cmd_compare(cfg);
            emit(cfg, "summary.json", to_json(r));
            if (!r.deterministic_ran)
                std::cerr << "notice: deterministic leg skipped, estimated "
                          << r.deterministic_estimate << " substeps over budget\n";
            return 0;
        }
        if (c_reg->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_regimes);
            RegimesReport r = cmd_regimes(cfg);
            emit(cfg, "regimes.json", to_json(r));
            return 0;
        }
        if (c_eq->parsed()) {
            ExperimentConfig cfg = resolve_config(fl_equi);
            EquipartitionReport r = cmd_equipartition(cfg);
            emit(cfg, "equipartition.json", to_json(r));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
