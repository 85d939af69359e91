#ifndef CHAINHEAT_EXPERIMENT_HPP
#define CHAINHEAT_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainheat/chain.hpp"

namespace chainheat {

inline constexpr const char* version_string = "chainheat 0.1.0";

/// Declarative description of one run. Defaults are part of the contract:
/// the emitted summary echoes every resolved value.
struct ExperimentConfig {
    int map_degree = 2;
    std::vector<MapModel::Harmonic> map_perturbation;
    TrigPoly observable{0.0, {1.0}, {}}; // b(theta) = cos(2 pi theta)
    int n = 64;
    double omega0 = 1.0;
    double epsilon = 1e-3;
    int substeps = 2;
    bool gamma_computed = true;   // otherwise gamma_explicit is used
    double gamma_explicit = 1.0;
    TrigPoly t0{1.0, {1.0}, {}};  // T0(u) = 1 + cos(2 pi u)
    std::vector<double> t_macro{0.02, 0.05, 0.1};
    int ensemble = 1000;
    std::uint64_t seed = 1;
    std::uint64_t budget = 4000000000ull; // substep cap for the deterministic leg
    std::string out_dir;
    int grid_size = 4096; // transfer-operator grid
    int k_max = 16;       // measure truncation
    double beta = 0.5;    // regime-scan exponent
    int workers = 0;      // 0 = CHAINHEAT_WORKERS env or hardware concurrency
};

ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg); // canonical form
std::uint64_t config_hash(const ExperimentConfig& cfg);  // FNV-1a of the canonical form

int workers_from_env();

struct DiffusionReport {
    double omega0 = 0.0;
    double closed_form = 0.0;
    double kinetic = 0.0;
    double fluctuation_dissipation = 0.0;
    double max_discrepancy = 0.0;
    bool pass = false; // max pairwise discrepancy <= 1e-8
};

DiffusionReport cmd_diffusion(double omega0, int quad_points = 4096);
std::string to_json(const DiffusionReport& r);

struct GammaReport {
    double gamma_spectral = 0.0;
    double gamma_birkhoff = 0.0; // at n = 1024
    double gap = 0.0;
    double gap_tolerance = 0.0;
    double nu = 0.0;
    bool nu_fitted = false;
    double tail_bound = 0.0;
    int truncation = 0;
    std::optional<OrbitCertificate> certificate;
    bool pass = false; // estimators agree within the combined tolerance
};

GammaReport cmd_gamma(const ExperimentConfig& cfg);
std::string to_json(const GammaReport& r);

/// Resolved physical constants for a config.
struct ResolvedPhysics {
    double gamma = 0.0;
    double diffusion = 0.0;
    double kappa = 0.0; // D / (2 gamma)
};

ResolvedPhysics resolve_physics(const ExperimentConfig& cfg);

struct LegDistances {
    std::string leg; // "deterministic" | "covariance_ode"
    std::vector<double> distance_to_heat; // d(xi(t), T(t)) per output time
    std::vector<double> mode1_amplitude;  // |c_1(xi(t))|
};

struct CompareReport {
    ResolvedPhysics physics;
    std::vector<double> t_requested;
    std::vector<double> t_actual_deterministic; // epsilon-rounded, empty if leg skipped
    std::vector<double> heat_mode1;             // |c_1(T(t))| reference
    std::vector<LegDistances> legs;
    double psi_initial = 0.0; // deterministic leg at t=0 when available, else ODE leg
    bool deterministic_ran = false;
    std::uint64_t deterministic_estimate = 0; // substeps (also when refused)
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0; // excluded from the determinism contract
};

CompareReport cmd_compare(const ExperimentConfig& cfg);
std::string to_json(const CompareReport& r);

struct RegimeRow {
    double t = 0.0;
    std::string scaling; // "subdiffusive" | "diffusive" | "superdiffusive"
    double micro_time = 0.0;
    double d_initial = 0.0;  // to T0
    double d_heat = 0.0;     // to T(t)
    double d_uniform = 0.0;  // to mass * Lebesgue
    std::string closest;
};

struct RegimesReport {
    ResolvedPhysics physics;
    double beta = 0.0;
    std::vector<RegimeRow> rows;
};

RegimesReport cmd_regimes(const ExperimentConfig& cfg);
std::string to_json(const RegimesReport& r);

struct EquipartitionReport {
    // |N^{-1} sum_x phi(x/N) int_0^t (E p_x^2 - E e_x) ds| for the covariance leg
    std::vector<int> sweep_n;
    std::vector<double> discrepancy_flat;   // phi = 1
    std::vector<double> discrepancy_cos;    // phi = cos(2 pi u)
    double slope_flat = 0.0;                // log-log fit over the sweep
    double slope_cos = 0.0;
    double gibbs_discrepancy = 0.0;         // same functional from Gibbs data
    double t = 0.0;
};

EquipartitionReport cmd_equipartition(const ExperimentConfig& cfg);
std::string to_json(const EquipartitionReport& r);

// --- output writers -------------------------------------------------------

struct ProfileRow {
    std::string leg;
    double t_macro = 0.0;
    int x = 0;
    double mean_energy = 0.0;
    double stderr_energy = 0.0;
};

void write_profiles_csv(const std::string& path, const std::vector<ProfileRow>& rows);
void write_density_csv(const std::string& path, const DensityGrid& rho);
std::string measure_to_json(const TorusMeasure& m);
TorusMeasure measure_from_json(const std::string& text);
void write_covariance_csv(const std::string& path, const CovMatrix& S);
void write_covariance_binary(const std::string& path, const CovMatrix& S);
CovMatrix read_covariance_binary(const std::string& path);

} // namespace chainheat

#endif
