#include "chainheat/chain.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <thread>

namespace chainheat {

double site_energy(const ChainState& s, int x, double omega0) {
    const int n = s.sites();
    int xm = (x - 1 + n) % n;
    double p2 = s.p[2 * x] * s.p[2 * x] + s.p[2 * x + 1] * s.p[2 * x + 1];
    double d0 = s.q[2 * x] - s.q[2 * xm];
    double d1 = s.q[2 * x + 1] - s.q[2 * xm + 1];
    double q2 = s.q[2 * x] * s.q[2 * x] + s.q[2 * x + 1] * s.q[2 * x + 1];
    return 0.5 * p2 + 0.5 * (d0 * d0 + d1 * d1) + 0.5 * omega0 * omega0 * q2;
}

double total_energy(const ChainState& s, double omega0) {
    double e = 0.0;
    for (int x = 0; x < s.sites(); ++x) e += site_energy(s, x, omega0);
    return e;
}

double current(const ChainState& s, int x) {
    const int n = s.sites();
    int xp = (x + 1) % n;
    double d0 = s.q[2 * xp] - s.q[2 * x];
    double d1 = s.q[2 * xp + 1] - s.q[2 * x + 1];
    return -(s.p[2 * x] * d0 + s.p[2 * x + 1] * d1);
}

HarmonicPropagator::HarmonicPropagator(int n, double omega0)
    : n_(n), modes_(n, omega0), plan_(n) {
    zq_.resize(n);
    zp_.resize(n);
    cos_.resize(n);
    sin_over_w_.resize(n);
    w_sin_.resize(n);
}

void HarmonicPropagator::flow(std::vector<double>& q, std::vector<double>& p,
                              double delta) const {
    if (delta == 0.0) return;
    if (delta != cached_delta_) {
        for (int j = 0; j < n_; ++j) {
            double w = std::sqrt(modes_.mu[j]);
            double c = std::cos(w * delta);
            double s = std::sin(w * delta);
            cos_[j] = c;
            sin_over_w_[j] = s / w;
            w_sin_[j] = w * s;
        }
        cached_delta_ = delta;
    }
    // the two components ride as real/imaginary parts of one transform
    for (int x = 0; x < n_; ++x) {
        zq_[x] = {q[2 * x], q[2 * x + 1]};
        zp_[x] = {p[2 * x], p[2 * x + 1]};
    }
    plan_.forward(zq_);
    plan_.forward(zp_);
    for (int j = 0; j < n_; ++j) {
        auto a = zq_[j];
        auto b = zp_[j];
        zq_[j] = cos_[j] * a + sin_over_w_[j] * b;
        zp_[j] = -w_sin_[j] * a + cos_[j] * b;
    }
    plan_.inverse(zq_);
    plan_.inverse(zp_);
    for (int x = 0; x < n_; ++x) {
        q[2 * x] = zq_[x].real();
        q[2 * x + 1] = zq_[x].imag();
        p[2 * x] = zp_[x].real();
        p[2 * x + 1] = zp_[x].imag();
    }
}

namespace {

inline void rotate_momentum(std::vector<double>& p, int x, double angle) {
    double c = std::cos(angle);
    double s = std::sin(angle);
    double p1 = p[2 * x];
    double p2 = p[2 * x + 1];
    p[2 * x] = c * p1 + s * p2;
    p[2 * x + 1] = -s * p1 + c * p2;
}

} // namespace

void rotation_flow(ChainState& state, const Observable& b, double delta,
                   double epsilon) {
    const double scale = delta / std::sqrt(epsilon);
    for (int x = 0; x < state.sites(); ++x)
        rotate_momentum(state.p, x, scale * b.eval(state.theta[x]));
}

namespace {

// one exact fixed-point application of a linear degree-d map, with the
// entropy shifted out by even degrees refilled from the trajectory stream
inline std::uint64_t advance_linear_phase(std::uint64_t bits, int degree, Rng& stream) {
    int refill = std::countr_zero(static_cast<unsigned>(degree));
    bits *= static_cast<std::uint64_t>(degree); // wraps mod 2^64 = mod 1
    if (refill > 0) {
        std::uint64_t fresh = stream.next() & ((std::uint64_t{1} << refill) - 1);
        bits |= fresh;
    }
    return bits;
}

inline double phase_to_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace

void step_interval(ChainState& state, const HarmonicPropagator& prop,
                   const MapModel& map, const Observable& b,
                   const ChainParams& params) {
    const double eps = params.epsilon;
    double expected = static_cast<double>(state.field_index) * eps;
    if (std::abs(state.t_micro - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
        throw std::logic_error("step_interval: time not aligned to the field grid");
    const int m = params.substeps;
    const double delta = eps / m;
    // [R(d/2) H(d) R(d/2)]^m with the interior half-rotations merged
    rotation_flow(state, b, delta / 2.0, eps);
    for (int i = 0; i < m; ++i) {
        prop.flow(state, delta);
        rotation_flow(state, b, (i + 1 < m) ? delta : delta / 2.0, eps);
    }
    if (map.perturbation().empty()) {
        for (int x = 0; x < state.sites(); ++x) {
            state.theta_bits[x] =
                advance_linear_phase(state.theta_bits[x], map.degree(), state.bit_stream);
            state.theta[x] = phase_to_double(state.theta_bits[x]);
        }
    } else {
        for (auto& th : state.theta) th = map.eval(th);
    }
    state.field_index += 1;
    state.t_micro = static_cast<double>(state.field_index) * eps;
}

ChainState init_state(const ChainParams& params, const TorusMeasure& T0,
                      std::uint64_t seed, std::uint64_t trajectory_id) {
    ChainState s(params.n);
    Rng rng = Rng::for_trajectory(seed, trajectory_id);
    s.bit_stream = Rng::for_trajectory(seed ^ 0xC2B2AE3D27D4EB4Full, trajectory_id);
    for (int x = 0; x < params.n; ++x) {
        double temp = T0.density(static_cast<double>(x) / params.n);
        if (temp < -1e-12)
            throw std::domain_error("init_state: negative temperature density");
        temp = std::max(temp, 0.0);
        double r = std::sqrt(2.0 * temp);
        double phi = two_pi * rng.uniform();
        s.p[2 * x] = r * std::cos(phi);
        s.p[2 * x + 1] = r * std::sin(phi);
        s.theta_bits[x] = rng.next();
        s.theta[x] = phase_to_double(s.theta_bits[x]);
    }
    return s;
}

std::uint64_t estimate_substeps(const ChainParams& params, const RunRequest& req) {
    std::uint64_t max_intervals = 0;
    for (double t : req.t_macro) {
        double micro = t * params.n * params.n;
        auto k = static_cast<std::uint64_t>(std::llround(micro / params.epsilon));
        max_intervals = std::max(max_intervals, k);
    }
    return max_intervals * static_cast<std::uint64_t>(params.substeps) *
           static_cast<std::uint64_t>(req.ensemble);
}

namespace {

struct ChunkAccumulator {
    // per output time: sums over trajectories
    std::vector<std::vector<double>> sum_e;   // [t][x]
    std::vector<std::vector<double>> sum_e2;  // [t][x]
    std::vector<CovMatrix> sum_cov;           // [t], optional
    int count = 0;

    ChunkAccumulator(int times, int n, bool with_cov) {
        sum_e.assign(times, std::vector<double>(n, 0.0));
        sum_e2.assign(times, std::vector<double>(n, 0.0));
        if (with_cov) sum_cov.assign(times, CovMatrix(n));
    }
};

void accumulate_snapshot(ChunkAccumulator& acc, int t_idx, const ChainState& s,
                         double omega0, bool with_cov) {
    const int n = s.sites();
    for (int x = 0; x < n; ++x) {
        double e = site_energy(s, x, omega0);
        acc.sum_e[t_idx][x] += e;
        acc.sum_e2[t_idx][x] += e * e;
    }
    if (with_cov) {
        CovMatrix& c = acc.sum_cov[t_idx];
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                double qq = s.q[2 * x] * s.q[2 * y] + s.q[2 * x + 1] * s.q[2 * y + 1];
                double qp = s.q[2 * x] * s.p[2 * y] + s.q[2 * x + 1] * s.p[2 * y + 1];
                double pp = s.p[2 * x] * s.p[2 * y] + s.p[2 * x + 1] * s.p[2 * y + 1];
                c.q(x, y) += qq;
                c.qp(x, y) += qp;
                c.p(x, y) += pp;
            }
        }
    }
}

} // namespace

RunResult run(const ChainParams& params, const MapModel& map, const Observable& b,
              const TorusMeasure& T0, const RunRequest& req) {
    if (req.ensemble < 1) throw std::invalid_argument("run: need ensemble >= 1");
    for (std::size_t i = 1; i < req.t_macro.size(); ++i)
        if (req.t_macro[i] < req.t_macro[i - 1])
            throw std::invalid_argument("run: output times must be non-decreasing");

    RunResult res;
    res.t_macro_requested = req.t_macro;
    const double n2 = static_cast<double>(params.n) * params.n;
    std::vector<std::int64_t> marks;
    for (double t : req.t_macro) {
        auto k = static_cast<std::int64_t>(std::llround(t * n2 / params.epsilon));
        marks.push_back(k);
        res.interval_index.push_back(k);
        res.t_macro_actual.push_back(static_cast<double>(k) * params.epsilon / n2);
    }

    std::uint64_t estimate = estimate_substeps(params, req);
    if (req.budget > 0 && estimate > req.budget) throw budget_error(estimate);

    const int times = static_cast<int>(marks.size());
    const int chunk_size = 64;
    const int n_chunks = (req.ensemble + chunk_size - 1) / chunk_size;
    std::vector<ChunkAccumulator> chunks(
        static_cast<std::size_t>(n_chunks),
        ChunkAccumulator(times, params.n, req.covariance_snapshots));

    std::atomic<int> next_chunk{0};
    auto worker_fn = [&]() {
        HarmonicPropagator prop(params.n, params.omega0);
        for (;;) {
            int c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            ChunkAccumulator& acc = chunks[c];
            int lo = c * chunk_size;
            int hi = std::min(lo + chunk_size, req.ensemble);
            for (int traj = lo; traj < hi; ++traj) {
                ChainState s = init_state(params, T0, req.seed,
                                          static_cast<std::uint64_t>(traj));
                int t_idx = 0;
                std::int64_t k = 0;
                while (t_idx < times) {
                    while (t_idx < times && marks[t_idx] == k) {
                        accumulate_snapshot(acc, t_idx, s, params.omega0,
                                            req.covariance_snapshots);
                        ++t_idx;
                    }
                    if (t_idx >= times) break;
                    step_interval(s, prop, map, b, params);
                    ++k;
                }
                ++acc.count;
            }
        }
    };

    int workers = req.workers;
    if (workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        workers = (hc == 0) ? 1 : static_cast<int>(hc);
    }
    workers = std::min(workers, n_chunks);
    if (workers <= 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
        for (auto& th : pool) th.join();
    }

    // deterministic reduction in chunk order
    const int total = req.ensemble;
    res.mean_energy.assign(times, std::vector<double>(params.n, 0.0));
    res.stderr_energy.assign(times, std::vector<double>(params.n, 0.0));
    if (req.covariance_snapshots)
        res.covariance.assign(times, CovMatrix(params.n));
    for (int t = 0; t < times; ++t) {
        std::vector<double> se(params.n, 0.0), se2(params.n, 0.0);
        for (int c = 0; c < n_chunks; ++c) {
            for (int x = 0; x < params.n; ++x) {
                se[x] += chunks[c].sum_e[t][x];
                se2[x] += chunks[c].sum_e2[t][x];
            }
            if (req.covariance_snapshots) {
                res.covariance[t].q += chunks[c].sum_cov[t].q;
                res.covariance[t].qp += chunks[c].sum_cov[t].qp;
                res.covariance[t].p += chunks[c].sum_cov[t].p;
            }
        }
        for (int x = 0; x < params.n; ++x) {
            double mean = se[x] / total;
            res.mean_energy[t][x] = mean;
            if (total > 1) {
                double var = (se2[x] - total * mean * mean) / (total - 1);
                res.stderr_energy[t][x] = std::sqrt(std::max(var, 0.0) / total);
            }
        }
        if (req.covariance_snapshots) {
            res.covariance[t].q /= total;
            res.covariance[t].qp /= total;
            res.covariance[t].p /= total;
        }
    }
    res.substeps_executed = estimate;
    return res;
}

} // namespace chainheat
