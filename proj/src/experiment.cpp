#include "chainheat/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace chainheat {

using nlohmann::json;

namespace {

json trig_to_json(const TrigPoly& p) {
    return json{{"const", p.c0}, {"cos", p.cos_c}, {"sin", p.sin_c}};
}

TrigPoly trig_from_json(const json& j, const TrigPoly& fallback) {
    if (j.is_null()) return fallback;
    TrigPoly p;
    p.c0 = j.value("const", 0.0);
    p.cos_c = j.value("cos", std::vector<double>{});
    p.sin_c = j.value("sin", std::vector<double>{});
    return p;
}

// slope of a least-squares line through (x, y)
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct Pipeline {
    MapModel map;
    Observable observable; // centered
    DensityGrid rho_star;
};

Pipeline build_pipeline(const ExperimentConfig& cfg) {
    MapModel map(cfg.map_degree, cfg.map_perturbation);
    DensityGrid rho = invariant_density(map, cfg.grid_size, 1e-13);
    Observable raw{cfg.observable};
    Observable b = center_observable(raw, rho);
    return {std::move(map), std::move(b), std::move(rho)};
}

int effective_kmax(const ExperimentConfig& cfg) {
    return std::min(cfg.k_max, (cfg.n - 1) / 2);
}

CovMatrix kinetic_initial_covariance(const ExperimentConfig& cfg,
                                     const TorusMeasure& T0) {
    CovMatrix S(cfg.n);
    for (int x = 0; x < cfg.n; ++x)
        S.p(x, x) = 2.0 * T0.density(static_cast<double>(x) / cfg.n);
    return S;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json j = json::parse(json_text);
    ExperimentConfig cfg;
    if (j.contains("map")) {
        cfg.map_degree = j["map"].value("degree", 2);
        cfg.map_perturbation.clear();
        if (j["map"].contains("perturbation"))
            for (const auto& pair : j["map"]["perturbation"])
                cfg.map_perturbation.push_back(
                    {pair.at(0).get<double>(), pair.at(1).get<int>()});
    }
    cfg.observable = trig_from_json(j.value("observable", json()), cfg.observable);
    cfg.n = j.value("n", cfg.n);
    cfg.omega0 = j.value("omega0", cfg.omega0);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.substeps = j.value("substeps", cfg.substeps);
    if (j.contains("gamma")) {
        if (j["gamma"].is_string() && j["gamma"] == "computed") {
            cfg.gamma_computed = true;
        } else {
            cfg.gamma_computed = false;
            cfg.gamma_explicit = j["gamma"].get<double>();
        }
    }
    cfg.t0 = trig_from_json(j.value("t0", json()), cfg.t0);
    cfg.t_macro = j.value("t_macro", cfg.t_macro);
    cfg.ensemble = j.value("ensemble", cfg.ensemble);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.budget = j.value("budget", cfg.budget);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.grid_size = j.value("grid_size", cfg.grid_size);
    cfg.k_max = j.value("k_max", cfg.k_max);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.workers = j.value("workers", cfg.workers);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json pert = json::array();
    for (const auto& h : cfg.map_perturbation)
        pert.push_back(json::array({h.amplitude, h.harmonic}));
    json j{
        {"map", {{"degree", cfg.map_degree}, {"perturbation", pert}}},
        {"observable", trig_to_json(cfg.observable)},
        {"n", cfg.n},
        {"omega0", cfg.omega0},
        {"epsilon", cfg.epsilon},
        {"substeps", cfg.substeps},
        {"t0", trig_to_json(cfg.t0)},
        {"t_macro", cfg.t_macro},
        {"ensemble", cfg.ensemble},
        {"seed", cfg.seed},
        {"budget", cfg.budget},
        {"out", cfg.out_dir},
        {"grid_size", cfg.grid_size},
        {"k_max", cfg.k_max},
        {"beta", cfg.beta},
        {"workers", cfg.workers},
    };
    if (cfg.gamma_computed)
        j["gamma"] = "computed";
    else
        j["gamma"] = cfg.gamma_explicit;
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::string text = config_to_json(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int workers_from_env() {
    const char* env = std::getenv("CHAINHEAT_WORKERS");
    if (!env) return 0;
    int v = std::atoi(env);
    return (v > 0) ? v : 0;
}

DiffusionReport cmd_diffusion(double omega0, int quad_points) {
    if (omega0 <= 0.0) throw std::invalid_argument("diffusion: need omega0 > 0");
    DiffusionReport r;
    r.omega0 = omega0;
    r.closed_form = diffusion_closed_form(omega0);
    r.kinetic = diffusion_kinetic(omega0, quad_points);
    r.fluctuation_dissipation = diffusion_fd(omega0);
    r.max_discrepancy = std::max({std::abs(r.closed_form - r.kinetic),
                                  std::abs(r.closed_form - r.fluctuation_dissipation),
                                  std::abs(r.kinetic - r.fluctuation_dissipation)});
    r.pass = r.max_discrepancy <= 1e-8;
    return r;
}

std::string to_json(const DiffusionReport& r) {
    json j{{"omega0", r.omega0},
           {"closed_form", r.closed_form},
           {"kinetic", r.kinetic},
           {"fluctuation_dissipation", r.fluctuation_dissipation},
           {"max_discrepancy", r.max_discrepancy},
           {"pass", r.pass}};
    return j.dump(2);
}

GammaReport cmd_gamma(const ExperimentConfig& cfg) {
    Pipeline pipe = build_pipeline(cfg);
    GammaReport r;
    GammaResult gk = green_kubo_gamma_adaptive(pipe.map, pipe.observable, pipe.rho_star);
    r.gamma_spectral = gk.gamma;
    r.nu = gk.nu;
    r.tail_bound = gk.tail_bound;
    r.truncation = gk.truncation;
    NuEstimate nu = decay_rate(pipe.map, pipe.observable, pipe.rho_star);
    r.nu_fitted = nu.fitted;
    const int n_bv = 1024;
    r.gamma_birkhoff = birkhoff_variance(pipe.map, pipe.observable, pipe.rho_star, n_bv);
    double e_half = std::abs(
        birkhoff_variance(pipe.map, pipe.observable, pipe.rho_star, n_bv / 2) -
        r.gamma_spectral);
    r.gap = std::abs(r.gamma_birkhoff - r.gamma_spectral);
    // O(1/n) consistency: the error must shrink with n, or both estimators sit
    // below the tail bound already
    r.gap_tolerance = std::max(0.75 * e_half, r.tail_bound + 1e-9);
    r.pass = r.gap <= r.gap_tolerance;
    r.certificate = periodic_orbit_certificate(pipe.map, pipe.observable, 6);
    if (!cfg.out_dir.empty())
        write_density_csv(cfg.out_dir + "/invariant_density.csv", pipe.rho_star);
    return r;
}

std::string to_json(const GammaReport& r) {
    json j{{"gamma_spectral", r.gamma_spectral},
           {"gamma_birkhoff", r.gamma_birkhoff},
           {"gap", r.gap},
           {"gap_tolerance", r.gap_tolerance},
           {"nu", r.nu},
           {"nu_fitted", r.nu_fitted},
           {"tail_bound", r.tail_bound},
           {"truncation", r.truncation},
           {"pass", r.pass}};
    if (r.certificate) {
        j["certificate"] = {{"period", r.certificate->period},
                            {"orbit", r.certificate->orbit},
                            {"orbit_sum", r.certificate->orbit_sum}};
    } else {
        j["certificate"] = nullptr;
    }
    return j.dump(2);
}

ResolvedPhysics resolve_physics(const ExperimentConfig& cfg) {
    ResolvedPhysics r;
    if (cfg.gamma_computed) {
        Pipeline pipe = build_pipeline(cfg);
        r.gamma = green_kubo_gamma_adaptive(pipe.map, pipe.observable, pipe.rho_star).gamma;
    } else {
        r.gamma = cfg.gamma_explicit;
    }
    if (r.gamma <= 0.0)
        throw std::runtime_error("resolve_physics: gamma must be positive for the heat scaling");
    r.diffusion = diffusion_closed_form(cfg.omega0);
    r.kappa = r.diffusion / (2.0 * r.gamma);
    return r;
}

CompareReport cmd_compare(const ExperimentConfig& cfg) {
    auto t_start = std::chrono::steady_clock::now();
    CompareReport rep;
    rep.physics = resolve_physics(cfg);
    rep.t_requested = cfg.t_macro;
    rep.config_digest = config_hash(cfg);
    rep.seed = cfg.seed;
    const int km = effective_kmax(cfg);
    TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, km);

    // heat reference per output time
    std::vector<TorusMeasure> heat_ref;
    for (double t : cfg.t_macro) {
        heat_ref.push_back(heat_evolve(T0, t, rep.physics.diffusion, rep.physics.gamma));
        rep.heat_mode1.push_back(std::abs(heat_ref.back().coeff(1)));
    }

    // covariance-ODE leg (always feasible)
    {
        GeneratorParams gp(cfg.n, cfg.omega0, rep.physics.gamma);
        CovMatrix S = kinetic_initial_covariance(cfg, T0);
        LegDistances leg;
        leg.leg = "covariance_ode";
        double reached = 0.0;
        std::vector<ProfileRow> rows;
        for (std::size_t i = 0; i < cfg.t_macro.size(); ++i) {
            double micro = cfg.t_macro[i] * cfg.n * cfg.n;
            if (micro > reached) {
                S = evolve_covariance(S, gp, micro - reached);
                reached = micro;
            }
            std::vector<double> prof = energy_profile_from_cov(S, cfg.omega0);
            TorusMeasure xi = xi_extract(prof, km);
            leg.distance_to_heat.push_back(measure_distance(xi, heat_ref[i]).value);
            leg.mode1_amplitude.push_back(std::abs(xi.coeff(1)));
            for (int x = 0; x < cfg.n; ++x)
                rows.push_back({"covariance_ode", cfg.t_macro[i], x, prof[x], 0.0});
        }
        rep.legs.push_back(std::move(leg));
        if (!cfg.out_dir.empty())
            write_profiles_csv(cfg.out_dir + "/profiles_covariance_ode.csv", rows);
    }

    // deterministic leg (budgeted)
    {
        ChainParams params(cfg.n, cfg.omega0, cfg.epsilon, cfg.substeps);
        RunRequest req;
        req.t_macro = cfg.t_macro;
        req.ensemble = cfg.ensemble;
        req.seed = cfg.seed;
        req.budget = cfg.budget;
        req.workers = (cfg.workers > 0) ? cfg.workers : workers_from_env();
        rep.deterministic_estimate = estimate_substeps(params, req);
        try {
            MapModel map(cfg.map_degree, cfg.map_perturbation);
            DensityGrid rho = invariant_density(map, cfg.grid_size, 1e-13);
            Observable b = center_observable(Observable{cfg.observable}, rho);
            RunResult rr = run(params, map, b, T0, req);
            rep.deterministic_ran = true;
            rep.t_actual_deterministic = rr.t_macro_actual;
            LegDistances leg;
            leg.leg = "deterministic";
            std::vector<ProfileRow> rows;
            for (std::size_t i = 0; i < cfg.t_macro.size(); ++i) {
                TorusMeasure xi = xi_extract(rr.mean_energy[i], km);
                leg.distance_to_heat.push_back(measure_distance(xi, heat_ref[i]).value);
                leg.mode1_amplitude.push_back(std::abs(xi.coeff(1)));
                for (int x = 0; x < cfg.n; ++x)
                    rows.push_back({"deterministic", rr.t_macro_actual[i], x,
                                    rr.mean_energy[i][x], rr.stderr_energy[i][x]});
            }
            rep.psi_initial =
                convergence_rate_psi(rr.mean_energy.front(), T0, km).psi;
            rep.legs.push_back(std::move(leg));
            if (!cfg.out_dir.empty())
                write_profiles_csv(cfg.out_dir + "/profiles_deterministic.csv", rows);
        } catch (const budget_error& e) {
            rep.deterministic_ran = false;
            rep.deterministic_estimate = e.estimated_substeps;
        }
    }

    rep.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    return rep;
}

std::string to_json(const CompareReport& r) {
    json legs = json::array();
    for (const auto& leg : r.legs)
        legs.push_back(json{{"leg", leg.leg},
                            {"distance_to_heat", leg.distance_to_heat},
                            {"mode1_amplitude", leg.mode1_amplitude}});
    json j{{"version", version_string},
           {"gamma", r.physics.gamma},
           {"diffusion", r.physics.diffusion},
           {"kappa", r.physics.kappa},
           {"t_requested", r.t_requested},
           {"t_actual_deterministic", r.t_actual_deterministic},
           {"heat_mode1", r.heat_mode1},
           {"legs", legs},
           {"psi_initial", r.psi_initial},
           {"deterministic_ran", r.deterministic_ran},
           {"deterministic_estimate", r.deterministic_estimate},
           {"config_digest", r.config_digest},
           {"seed", r.seed},
           {"wall_ms", r.wall_ms}};
    return j.dump(2);
}

RegimesReport cmd_regimes(const ExperimentConfig& cfg) {
    if (cfg.beta <= 0.0 || cfg.beta > 1.0)
        throw std::invalid_argument("cmd_regimes: beta must be in (0, 1]");
    RegimesReport rep;
    rep.physics = resolve_physics(cfg);
    rep.beta = cfg.beta;
    const int km = effective_kmax(cfg);
    TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, km);
    TorusMeasure uniform(km);
    uniform.set_coeff(0, T0.coeff(0)); // mass * Lebesgue
    GeneratorParams gp(cfg.n, cfg.omega0, rep.physics.gamma);

    struct Scaling {
        const char* name;
        double exponent;
    };
    const Scaling scalings[3] = {{"subdiffusive", 2.0 - cfg.beta},
                                 {"diffusive", 2.0},
                                 {"superdiffusive", 2.0 + cfg.beta}};
    for (double t : cfg.t_macro) {
        TorusMeasure heat_t = heat_evolve(T0, t, rep.physics.diffusion, rep.physics.gamma);
        for (const auto& sc : scalings) {
            double micro = t * std::pow(static_cast<double>(cfg.n), sc.exponent);
            CovMatrix S = kinetic_initial_covariance(cfg, T0);
            EvolveOptions opts;
            opts.check_interval = 1000;
            S = evolve_covariance(S, gp, micro, opts);
            TorusMeasure xi = xi_extract(energy_profile_from_cov(S, cfg.omega0), km);
            RegimeRow row;
            row.t = t;
            row.scaling = sc.name;
            row.micro_time = micro;
            row.d_initial = measure_distance(xi, T0).value;
            row.d_heat = measure_distance(xi, heat_t).value;
            row.d_uniform = measure_distance(xi, uniform).value;
            row.closest = "initial";
            double best = row.d_initial;
            if (row.d_heat < best) {
                best = row.d_heat;
                row.closest = "heat";
            }
            if (row.d_uniform < best) row.closest = "uniform";
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

std::string to_json(const RegimesReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back(json{{"t", row.t},
                            {"scaling", row.scaling},
                            {"micro_time", row.micro_time},
                            {"d_initial", row.d_initial},
                            {"d_heat", row.d_heat},
                            {"d_uniform", row.d_uniform},
                            {"closest", row.closest}});
    json j{{"gamma", r.physics.gamma},
           {"diffusion", r.physics.diffusion},
           {"kappa", r.physics.kappa},
           {"beta", r.beta},
           {"rows", rows}};
    return j.dump(2);
}

namespace {

// |N^{-1} sum_x phi(x/N) int_0^t (E p_x^2 - E e_x)(N^2 s) ds| accumulated
// along the covariance flow with a per-step trapezoid rule.
double equipartition_discrepancy(const CovMatrix& S0, const GeneratorParams& gp,
                                 double t_macro, const TrigPoly& phi) {
    const int n = gp.n;
    auto functional = [&](const CovMatrix& S) {
        std::vector<double> e = energy_profile_from_cov(S, gp.omega0);
        double acc = 0.0;
        for (int x = 0; x < n; ++x)
            acc += phi.eval(static_cast<double>(x) / n) * (S.p(x, x) - e[x]);
        return acc / n;
    };
    double integral = 0.0;
    double prev = functional(S0);
    double prev_t = 0.0;
    EvolveOptions opts;
    opts.check_interval = 1000;
    opts.observer = [&](double t_now, const CovMatrix& S) {
        double g = functional(S);
        integral += 0.5 * (g + prev) * (t_now - prev_t);
        prev = g;
        prev_t = t_now;
    };
    double micro = t_macro * n * n;
    evolve_covariance(S0, gp, micro, opts);
    return std::abs(integral) / (static_cast<double>(n) * n);
}

} // namespace

EquipartitionReport cmd_equipartition(const ExperimentConfig& cfg) {
    EquipartitionReport rep;
    ResolvedPhysics phys = resolve_physics(cfg);
    rep.t = cfg.t_macro.back();
    TrigPoly flat{1.0, {}, {}};
    TrigPoly cosine{0.0, {1.0}, {}};
    int n_top = cfg.n;
    for (int n = std::max(8, n_top / 8); n <= n_top; n *= 2) rep.sweep_n.push_back(n);
    for (int n : rep.sweep_n) {
        GeneratorParams gp(n, cfg.omega0, phys.gamma);
        TorusMeasure T0 = TorusMeasure::from_trig(cfg.t0, std::min(cfg.k_max, (n - 1) / 2));
        CovMatrix S0(n);
        for (int x = 0; x < n; ++x)
            S0.p(x, x) = 2.0 * T0.density(static_cast<double>(x) / n);
        rep.discrepancy_flat.push_back(equipartition_discrepancy(S0, gp, rep.t, flat));
        rep.discrepancy_cos.push_back(equipartition_discrepancy(S0, gp, rep.t, cosine));
    }
    {
        std::vector<double> lx, lyf, lyc;
        for (std::size_t i = 0; i < rep.sweep_n.size(); ++i) {
            lx.push_back(std::log(static_cast<double>(rep.sweep_n[i])));
            lyf.push_back(std::log(std::max(rep.discrepancy_flat[i], 1e-300)));
            lyc.push_back(std::log(std::max(rep.discrepancy_cos[i], 1e-300)));
        }
        rep.slope_flat = fit_slope(lx, lyf);
        rep.slope_cos = fit_slope(lx, lyc);
    }
    {
        GeneratorParams gp(cfg.n, cfg.omega0, phys.gamma);
        CovMatrix gibbs = gibbs_covariance(gp, 1.0);
        rep.gibbs_discrepancy = equipartition_discrepancy(gibbs, gp, rep.t, cosine);
    }
    return rep;
}

std::string to_json(const EquipartitionReport& r) {
    json j{{"sweep_n", r.sweep_n},
           {"discrepancy_flat", r.discrepancy_flat},
           {"discrepancy_cos", r.discrepancy_cos},
           {"slope_flat", r.slope_flat},
           {"slope_cos", r.slope_cos},
           {"gibbs_discrepancy", r.gibbs_discrepancy},
           {"t", r.t}};
    return j.dump(2);
}

void write_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "leg,t_macro,x,mean_energy,stderr\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.leg << ',' << r.t_macro << ',' << r.x << ',' << r.mean_energy
            << ',' << r.stderr_energy << '\n';
}

void write_density_csv(const std::string& path, const DensityGrid& rho) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "theta,rho\n";
    out.precision(17);
    for (int i = 0; i < rho.size(); ++i)
        out << rho.node(i) << ',' << rho.values[i] << '\n';
}

std::string measure_to_json(const TorusMeasure& m) {
    json arr = json::array();
    for (int k = -m.k_max(); k <= m.k_max(); ++k)
        arr.push_back(json::array({k, m.coeff(k).real(), m.coeff(k).imag()}));
    return json{{"k_max", m.k_max()}, {"coefficients", arr}}.dump(2);
}

TorusMeasure measure_from_json(const std::string& text) {
    json j = json::parse(text);
    int k_max = j.at("k_max").get<int>();
    TorusMeasure m(k_max);
    for (const auto& entry : j.at("coefficients")) {
        int k = entry.at(0).get<int>();
        if (k < 0) continue; // negative modes follow by symmetry
        m.set_coeff(k, {entry.at(1).get<double>(), entry.at(2).get<double>()});
    }
    return m;
}

void write_covariance_csv(const std::string& path, const CovMatrix& S) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "x,y,qq,qp,pq,pp\n";
    out.precision(17);
    const int n = S.size();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            out << x << ',' << y << ',' << S.q(x, y) << ',' << S.qp(x, y) << ','
                << S.qp(y, x) << ',' << S.p(x, y) << '\n';
}

void write_covariance_binary(const std::string& path, const CovMatrix& S) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const char magic[8] = {'C', 'H', 'C', 'O', 'V', '1', '\n', '\0'};
    out.write(magic, sizeof(magic));
    std::int64_t n = S.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    auto dump = [&](const Eigen::MatrixXd& m) {
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                double v = m(x, y);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    };
    dump(S.q);
    dump(S.qp);
    dump(S.p);
}

CovMatrix read_covariance_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::string(magic, 6) != "CHCOV1")
        throw std::runtime_error("bad covariance file magic");
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    CovMatrix S(static_cast<int>(n));
    auto slurp = [&](Eigen::MatrixXd& m) {
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                m(x, y) = v;
            }
    };
    slurp(S.q);
    slurp(S.qp);
    slurp(S.p);
    if (!in) throw std::runtime_error("truncated covariance file");
    return S;
}

} // namespace chainheat
