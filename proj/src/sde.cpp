#include <cmath>

#include "chainheat/chain.hpp"

namespace chainheat {

namespace {

inline void rotate(std::vector<double>& p, int x, double angle) {
    double c = std::cos(angle);
    double s = std::sin(angle);
    double p1 = p[2 * x];
    double p2 = p[2 * x + 1];
    p[2 * x] = c * p1 + s * p2;
    p[2 * x + 1] = -s * p1 + c * p2;
}

} // namespace

void sde_step(ChainState& state, const HarmonicPropagator& prop, double gamma,
              double dt, Rng& rng) {
    // Strang: half-interval rotation noise, harmonic flow, half-interval noise.
    // The rotation by sqrt(2 gamma) dW is the exact pathwise solution of the
    // Stratonovich kick, so each piece conserves energy.
    const double amp = std::sqrt(2.0 * gamma) * std::sqrt(dt / 2.0);
    const int n = state.sites();
    for (int x = 0; x < n; ++x) rotate(state.p, x, amp * rng.gaussian());
    prop.flow(state.q, state.p, dt);
    for (int x = 0; x < n; ++x) rotate(state.p, x, amp * rng.gaussian());
    state.t_micro += dt;
}

CovMatrix sde_ensemble_covariance(const ChainParams& params, double gamma,
                                  const TorusMeasure& T0, double t, double dt,
                                  int paths, std::uint64_t seed) {
    if (gamma <= 0.0) throw std::invalid_argument("sde_ensemble_covariance: need gamma > 0");
    if (paths < 1) throw std::invalid_argument("sde_ensemble_covariance: need paths >= 1");
    const int n = params.n;
    HarmonicPropagator prop(n, params.omega0);
    auto steps = static_cast<long long>(std::llround(t / dt));
    CovMatrix acc(n);
    for (int path = 0; path < paths; ++path) {
        ChainState s = init_state(params, T0, seed, static_cast<std::uint64_t>(path));
        Rng rng = Rng::for_trajectory(seed ^ 0xA5A5A5A5A5A5A5A5ull,
                                      static_cast<std::uint64_t>(path));
        for (long long i = 0; i < steps; ++i) sde_step(s, prop, gamma, dt, rng);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                acc.q(x, y) += s.q[2 * x] * s.q[2 * y] + s.q[2 * x + 1] * s.q[2 * y + 1];
                acc.qp(x, y) += s.q[2 * x] * s.p[2 * y] + s.q[2 * x + 1] * s.p[2 * y + 1];
                acc.p(x, y) += s.p[2 * x] * s.p[2 * y] + s.p[2 * x + 1] * s.p[2 * y + 1];
            }
    }
    acc.q /= paths;
    acc.qp /= paths;
    acc.p /= paths;
    return acc;
}

} // namespace chainheat
