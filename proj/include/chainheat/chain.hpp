#ifndef CHAINHEAT_CHAIN_HPP
#define CHAINHEAT_CHAIN_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chainheat/circle_map.hpp"
#include "chainheat/covariance.hpp"
#include "chainheat/heat.hpp"
#include "chainheat/rng.hpp"
#include "chainheat/spectral.hpp"

namespace chainheat {

struct budget_error : std::runtime_error {
    std::uint64_t estimated_substeps;
    explicit budget_error(std::uint64_t est)
        : std::runtime_error("step budget exceeded"), estimated_substeps(est) {}
};

struct ChainParams {
    int n = 0;            // particles
    double omega0 = 0.0;  // pinning frequency
    double epsilon = 0.0; // fast time scale
    int substeps = 1;     // splitting substeps per epsilon interval

    ChainParams(int n_, double omega0_, double epsilon_, int substeps_ = 1)
        : n(n_), omega0(omega0_), epsilon(epsilon_), substeps(substeps_) {
        if (n < 1) throw std::invalid_argument("ChainParams: need n >= 1");
        if (omega0 <= 0.0) throw std::invalid_argument("ChainParams: need omega0 > 0");
        if (epsilon <= 0.0) throw std::invalid_argument("ChainParams: need epsilon > 0");
        if (substeps < 1) throw std::invalid_argument("ChainParams: need substeps >= 1");
    }
};

/// Positions and momenta are two-vectors per site, stored interleaved:
/// q[2x], q[2x+1]. The field phases theta advance by one application of the
/// map per crossing of a multiple of epsilon.
///
/// For purely linear maps (no perturbation) the phases are also kept in
/// 64-bit fixed point (theta = theta_bits / 2^64) and iterated exactly:
/// multiplication by the degree wraps mod 2^64 and the bits shifted out by
/// even degrees are replaced with fresh ones from the trajectory stream.
/// This lazily materializes the binary expansion of the random initial
/// phase; a double-precision orbit of the doubling map would collapse to
/// the fixed point 0 within ~53 iterations and silently freeze the forcing.
struct ChainState {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> theta;
    std::vector<std::uint64_t> theta_bits;
    Rng bit_stream{0};
    std::int64_t field_index = 0;
    double t_micro = 0.0;

    explicit ChainState(int n)
        : q(2 * static_cast<std::size_t>(n), 0.0),
          p(2 * static_cast<std::size_t>(n), 0.0),
          theta(static_cast<std::size_t>(n), 0.0),
          theta_bits(static_cast<std::size_t>(n), 0) {}

    int sites() const { return static_cast<int>(theta.size()); }
};

double site_energy(const ChainState& s, int x, double omega0);
double total_energy(const ChainState& s, double omega0);
/// j_{x,x+1} = -p_x . (q_{x+1} - q_x)
double current(const ChainState& s, int x);

/// Exact flow of the uncoupled harmonic part: rotate each Fourier mode pair
/// (q_j, p_j) by angle omega_j * delta, omega_j = sqrt(omega0^2 + 4 sin^2(pi j/N)).
/// The two components of each site are packed into one complex transform.
/// Not thread-safe: each worker owns its propagator.
class HarmonicPropagator {
public:
    HarmonicPropagator(int n, double omega0);

    /// Advances (q, p) only; the interval clock is owned by step_interval.
    void flow(std::vector<double>& q, std::vector<double>& p, double delta) const;
    void flow(ChainState& state, double delta) const { flow(state.q, state.p, delta); }

private:
    int n_;
    ModeData modes_;
    Dft plan_;
    mutable cvector zq_, zp_;
    mutable std::vector<double> cos_, sin_over_w_, w_sin_;
    mutable double cached_delta_ = std::numeric_limits<double>::quiet_NaN();
};

/// Rotate each momentum by angle eps^{-1/2} b(theta_x) delta; |p_x| and q
/// unchanged. The field value is frozen within the current interval.
void rotation_flow(ChainState& state, const Observable& b, double delta,
                   double epsilon);

/// One epsilon interval: substeps Strang compositions
/// [rotation delta/2, harmonic delta, rotation delta/2] with
/// delta = epsilon / substeps, then theta_x <- f(theta_x).
/// Requires t_micro aligned to a multiple of epsilon.
void step_interval(ChainState& state, const HarmonicPropagator& prop,
                   const MapModel& map, const Observable& b,
                   const ChainParams& params);

/// Kinetic-only initial state: q = 0, |p_x|^2 = 2 T0(x/N) with uniform random
/// momentum angle, theta uniform. Rejects negative temperature densities.
ChainState init_state(const ChainParams& params, const TorusMeasure& T0,
                      std::uint64_t seed, std::uint64_t trajectory_id);

struct RunRequest {
    std::vector<double> t_macro;       // output times (macroscopic, t_micro / N^2)
    int ensemble = 1;
    std::uint64_t seed = 0;
    std::uint64_t budget = 0;          // max total substeps, 0 = unlimited
    int workers = 0;                   // 0 = hardware concurrency
    bool covariance_snapshots = false;
};

struct RunResult {
    std::vector<double> t_macro_requested;
    std::vector<double> t_macro_actual;  // rounded to epsilon multiples
    std::vector<std::int64_t> interval_index;
    // profiles[t][x]: ensemble mean site energy, with standard errors
    std::vector<std::vector<double>> mean_energy;
    std::vector<std::vector<double>> stderr_energy;
    std::vector<CovMatrix> covariance;   // present if requested
    std::uint64_t substeps_executed = 0;
};

/// Seeded ensemble of trajectories; the reduction order is fixed by
/// trajectory chunk, so results are identical for any worker count.
RunResult run(const ChainParams& params, const MapModel& map, const Observable& b,
              const TorusMeasure& T0, const RunRequest& req);

/// Total substeps the request would execute (budget check).
std::uint64_t estimate_substeps(const ChainParams& params, const RunRequest& req);

/// Pathwise rotation-noise trajectory: Strang composition of the exact
/// harmonic flow and exact momentum rotations by Gaussian angles
/// sqrt(2 gamma) dW. Conserves energy pathwise; ensemble covariance
/// converges to the covariance flow.
void sde_step(ChainState& state, const HarmonicPropagator& prop, double gamma,
              double dt, Rng& rng);

/// Ensemble-averaged covariance of the rotation-noise dynamics at time t.
CovMatrix sde_ensemble_covariance(const ChainParams& params, double gamma,
                                  const TorusMeasure& T0, double t, double dt,
                                  int paths, std::uint64_t seed);

} // namespace chainheat

#endif
