#include "chainheat/circle_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chainheat {

namespace {

constexpr double branch_tol = 1e-13;
constexpr int branch_max_iter = 50;

// 8-point Lagrange weights for equispaced nodes i0-3..i0+4 at fractional
// offset t in [0,1) past node i0.
void lagrange8_weights(double t, double w[8]) {
    // nodes at offsets -3..4 relative to i0
    static const double denom[8] = {
        // prod_{k != j} (x_j - x_k) for x = {-3,-2,-1,0,1,2,3,4}
        -5040.0, 720.0, -240.0, 144.0, -144.0, 240.0, -720.0, 5040.0};
    double diff[8];
    for (int j = 0; j < 8; ++j) diff[j] = t - (j - 3);
    // full product with one term removed, via prefix/suffix products
    double pre[9], suf[9];
    pre[0] = 1.0;
    for (int j = 0; j < 8; ++j) pre[j + 1] = pre[j] * diff[j];
    suf[8] = 1.0;
    for (int j = 7; j >= 0; --j) suf[j] = suf[j + 1] * diff[j];
    for (int j = 0; j < 8; ++j) w[j] = pre[j] * suf[j + 1] / denom[j];
}

} // namespace

MapModel::MapModel(int degree, std::vector<Harmonic> perturbation)
    : degree_(degree), pert_(std::move(perturbation)) {
    if (degree_ < 2) throw std::invalid_argument("MapModel: degree must be >= 2");
    double margin = 0.0;
    for (const auto& h : pert_) {
        if (h.harmonic < 1) throw std::invalid_argument("MapModel: harmonic must be >= 1");
        margin += two_pi * h.harmonic * std::abs(h.amplitude);
    }
    floor_ = degree_ - margin;
    if (floor_ <= 1.0)
        throw std::invalid_argument("MapModel: expansion floor <= 1, perturbation too large");
    // fine-grid check of the analytic bound
    const int grid = 1 << 14;
    for (int i = 0; i < grid; ++i) {
        if (deriv(static_cast<double>(i) / grid) < floor_ - 1e-9)
            throw std::invalid_argument("MapModel: derivative dips below certified floor");
    }
}

double MapModel::lift(double u) const {
    // periodic part evaluated on the wrapped argument, so the lift stays
    // accurate when composed (arguments grow like d^p)
    double frac = u - std::floor(u);
    double v = degree_ * u;
    for (const auto& h : pert_) v += h.amplitude * std::sin(two_pi * h.harmonic * frac);
    return v;
}

double MapModel::eval(double theta) const { return wrap_unit(lift(theta)); }

double MapModel::deriv(double theta) const {
    double v = degree_;
    for (const auto& h : pert_)
        v += h.amplitude * two_pi * h.harmonic * std::cos(two_pi * h.harmonic * theta);
    return v;
}

double MapModel::second_deriv(double theta) const {
    double v = 0.0;
    for (const auto& h : pert_) {
        double w = two_pi * h.harmonic;
        v -= h.amplitude * w * w * std::sin(w * theta);
    }
    return v;
}

double MapModel::iterate(double theta, int k) const {
    double t = wrap_unit(theta);
    for (int i = 0; i < k; ++i) t = eval(t);
    return t;
}

double MapModel::distortion_bound() const {
    const int grid = 1 << 13;
    double best = 0.0;
    for (int i = 0; i < grid; ++i) {
        double u = static_cast<double>(i) / grid;
        double d = deriv(u);
        best = std::max(best, std::abs(second_deriv(u)) / (d * d));
    }
    return best;
}

std::vector<MapModel::Branch> MapModel::inverse_branches(double theta) const {
    double t0 = wrap_unit(theta);
    std::vector<Branch> out;
    out.reserve(degree_);
    // F maps [0,1] monotonically onto [0, d]; branch k solves F(y) = t0 + k.
    for (int k = 0; k < degree_; ++k) {
        double target = t0 + k;
        double lo = 0.0, hi = 1.0;
        double y = target / degree_; // exact for the unperturbed map
        bool ok = false;
        for (int it = 0; it < branch_max_iter; ++it) {
            double r = lift(y) - target;
            if (std::abs(r) <= branch_tol) {
                ok = true;
                break;
            }
            if (r > 0.0) hi = y; else lo = y;
            double step = r / deriv(y);
            double yn = y - step;
            if (yn <= lo || yn >= hi) yn = 0.5 * (lo + hi); // bisection fallback
            y = yn;
        }
        if (!ok && std::abs(lift(y) - target) > branch_tol)
            throw branch_inversion_error("inverse_branches: Newton did not converge");
        out.push_back({wrap_unit(y), deriv(y)});
    }
    std::sort(out.begin(), out.end(),
              [](const Branch& a, const Branch& b) { return a.point < b.point; });
    return out;
}

double DensityGrid::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / size();
}

double DensityGrid::min_value() const {
    double m = std::numeric_limits<double>::max();
    for (double v : values) m = std::min(m, v);
    return m;
}

double DensityGrid::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double DensityGrid::interpolate(double u) const {
    const int m = size();
    double s = wrap_unit(u) * m;
    int i0 = static_cast<int>(std::floor(s));
    if (i0 >= m) i0 = m - 1;
    double t = s - i0;
    double w[8];
    lagrange8_weights(t, w);
    double acc = 0.0;
    for (int j = 0; j < 8; ++j) {
        int idx = i0 + j - 3;
        idx %= m;
        if (idx < 0) idx += m;
        acc += w[j] * values[idx];
    }
    return acc;
}

double DensityGrid::log_derivative_bound() const {
    const int m = size();
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
        double rho = values[i];
        if (rho <= 0.0) throw std::domain_error("log_derivative_bound: density not positive");
        double d = (values[(i + 1) % m] - values[(i - 1 + m) % m]) * m / 2.0;
        best = std::max(best, std::abs(d) / rho);
    }
    return best;
}

double quadrature(const DensityGrid& f, const DensityGrid& g) {
    if (f.size() != g.size()) throw std::invalid_argument("quadrature: size mismatch");
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f.values[i] * g.values[i];
    return s / f.size();
}

double quadrature(const DensityGrid& f) { return f.integral(); }

namespace {

// preimages of every grid node, reused across repeated applications
struct BranchTable {
    int m = 0;
    int d = 0;
    std::vector<MapModel::Branch> entries; // m * d, grouped by node
};

BranchTable build_branch_table(const MapModel& map, int m) {
    BranchTable t;
    t.m = m;
    t.d = map.degree();
    t.entries.reserve(static_cast<std::size_t>(m) * t.d);
    for (int i = 0; i < m; ++i) {
        auto branches = map.inverse_branches(static_cast<double>(i) / m);
        for (const auto& br : branches) t.entries.push_back(br);
    }
    return t;
}

DensityGrid apply_with_table(const DensityGrid& rho, const BranchTable& t) {
    const int m = rho.size();
    const bool nonneg = rho.min_value() >= 0.0;
    DensityGrid out(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        const MapModel::Branch* row = &t.entries[static_cast<std::size_t>(i) * t.d];
        for (int k = 0; k < t.d; ++k)
            acc += rho.interpolate(row[k].point) / row[k].deriv;
        if (nonneg && acc < 0.0) acc = 0.0;
        out.values[i] = acc;
    }
    return out;
}

} // namespace

DensityGrid transfer_apply(const MapModel& map, const DensityGrid& rho) {
    const int m = rho.size();
    if (m < 64) throw std::invalid_argument("transfer_apply: need at least 64 grid points");
    return apply_with_table(rho, build_branch_table(map, m));
}

DensityGrid invariant_density(const MapModel& map, int grid_size, double tol,
                              int max_iterations) {
    if (grid_size < 64) throw std::invalid_argument("invariant_density: grid too coarse");
    BranchTable table = build_branch_table(map, grid_size);
    DensityGrid rho(grid_size, 1.0);
    for (int it = 0; it < max_iterations; ++it) {
        DensityGrid next = apply_with_table(rho, table);
        double diff = 0.0;
        for (int i = 0; i < grid_size; ++i)
            diff = std::max(diff, std::abs(next.values[i] - rho.values[i]));
        rho = std::move(next);
        if (diff <= tol) {
            double mass = rho.integral();
            for (auto& v : rho.values) v /= mass;
            if (rho.min_value() <= 0.0)
                throw std::runtime_error("invariant_density: fixed point not positive");
            return rho;
        }
    }
    throw std::runtime_error("invariant_density: no convergence; grid too coarse or map degenerate");
}

Observable center_observable(const Observable& b, const DensityGrid& rho_star) {
    const int m = rho_star.size();
    double mean = 0.0;
    for (int i = 0; i < m; ++i) mean += b.eval(rho_star.node(i)) * rho_star.values[i];
    mean /= m;
    Observable out = b;
    out.c0 -= mean;
    out.centered = true;
    return out;
}

namespace {

DensityGrid sample_observable(const Observable& b, int m) {
    DensityGrid g(m, 0.0);
    for (int i = 0; i < m; ++i) g.values[i] = b.eval(g.node(i));
    return g;
}

} // namespace

std::vector<double> autocorrelations(const MapModel& map, const Observable& b,
                                     const DensityGrid& rho_star, int k_max) {
    const int m = rho_star.size();
    BranchTable table = build_branch_table(map, m);
    DensityGrid bg = sample_observable(b, m);
    DensityGrid pushed(m, 0.0); // L^k (b rho_star)
    for (int i = 0; i < m; ++i) pushed.values[i] = bg.values[i] * rho_star.values[i];
    std::vector<double> c;
    c.reserve(k_max + 1);
    c.push_back(quadrature(bg, pushed));
    for (int k = 1; k <= k_max; ++k) {
        pushed = apply_with_table(pushed, table);
        c.push_back(quadrature(bg, pushed));
    }
    return c;
}

double autocorrelation(const MapModel& map, const Observable& b,
                       const DensityGrid& rho_star, int k) {
    return autocorrelations(map, b, rho_star, k).back();
}

NuEstimate decay_rate(const MapModel& map, const Observable& b,
                      const DensityGrid& rho_star) {
    const int k_probe = 24;
    std::vector<double> c = autocorrelations(map, b, rho_star, k_probe);
    double floor = 1e-13 * std::max(1.0, std::abs(c[0]));
    std::vector<std::pair<double, double>> pts; // (k, log|C(k)|)
    for (int k = 1; k <= k_probe; ++k)
        if (std::abs(c[k]) > floor) pts.push_back({double(k), std::log(std::abs(c[k]))});
    NuEstimate est;
    if (pts.size() < 5) {
        est.nu = 1.0 / map.expansion_floor();
        est.fitted = false;
        return est;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    double rss = 0.0;
    for (auto [x, y] : pts) {
        double r = y - (slope * x + icept);
        rss += r * r;
    }
    est.residual = std::sqrt(rss / n);
    est.nu = std::exp(slope);
    est.nu = std::min(std::max(est.nu, 1e-6), 1.0 - 1e-9);
    est.fitted = true;
    return est;
}

GammaResult green_kubo_gamma(const MapModel& map, const Observable& b,
                             const DensityGrid& rho_star, int truncation) {
    if (!b.centered) throw std::invalid_argument("green_kubo_gamma: observable not centered");
    if (truncation < 1) throw std::invalid_argument("green_kubo_gamma: need K >= 1");
    std::vector<double> c = autocorrelations(map, b, rho_star, truncation);
    GammaResult res;
    res.truncation = truncation;
    NuEstimate nu = decay_rate(map, b, rho_star);
    res.nu = nu.nu;
    res.gamma = c[0];
    for (int k = 1; k <= truncation; ++k) res.gamma += 2.0 * c[k];
    // tail model Const * nu^k fitted on the computed correlations
    double scale = std::abs(c[0]);
    for (int k = 1; k <= truncation; ++k)
        scale = std::max(scale, std::abs(c[k]) / std::pow(res.nu, k));
    res.tail_bound = 2.0 * scale * std::pow(res.nu, truncation + 1) / (1.0 - res.nu);
    double predicted = scale * std::pow(res.nu, truncation);
    res.tail_warning = std::abs(c[truncation]) > 10.0 * predicted + 1e-13;
    if (res.gamma < -res.tail_bound)
        throw std::runtime_error("green_kubo_gamma: negative beyond tail bound");
    return res;
}

GammaResult green_kubo_gamma_adaptive(const MapModel& map, const Observable& b,
                                      const DensityGrid& rho_star) {
    NuEstimate nu = decay_rate(map, b, rho_star);
    int k = static_cast<int>(std::ceil(-12.0 * std::log(10.0) / std::log(nu.nu)));
    k = std::min(std::max(k, 8), 400);
    return green_kubo_gamma(map, b, rho_star, k);
}

double birkhoff_variance(const MapModel& map, const Observable& b,
                         const DensityGrid& rho_star, int n) {
    if (!b.centered) throw std::invalid_argument("birkhoff_variance: observable not centered");
    if (n < 1) throw std::invalid_argument("birkhoff_variance: need n >= 1");
    const int m = rho_star.size();
    DensityGrid bg = sample_observable(b, m);
    double c0 = 0.0;
    for (int i = 0; i < m; ++i)
        c0 += bg.values[i] * bg.values[i] * rho_star.values[i];
    c0 /= m;
    // V_n = n C(0) + 2 sum_{l=1..n-1} (n-l) C(l), with C(l) = int b . L^l(b rho_star)
    // accumulated through the running transfer iterate.
    double total = n * c0;
    if (n > 1) {
        BranchTable table = build_branch_table(map, m);
        DensityGrid feed(m, 0.0);
        for (int i = 0; i < m; ++i) feed.values[i] = bg.values[i] * rho_star.values[i];
        for (int l = 1; l <= n - 1; ++l) {
            feed = apply_with_table(feed, table);
            total += 2.0 * (n - l) * quadrature(bg, feed);
        }
    }
    double v = total / n;
    return (v > 0.0) ? v : 0.0;
}

std::optional<OrbitCertificate> periodic_orbit_certificate(const MapModel& map,
                                                           const Observable& b,
                                                           int p_max) {
    if (p_max < 1 || p_max > 12)
        throw std::invalid_argument("periodic_orbit_certificate: p_max must be in 1..12");
    const double sum_threshold = 1e-6;
    for (int p = 1; p <= p_max; ++p) {
        // periodic points of f^p: F_p(y) - y = j for integer j, F_p the p-fold
        // lift (monotone on [0,1] with F_p(0) = 0, F_p(1) = d^p)
        auto lift_p = [&](double u) {
            double v = u;
            for (int i = 0; i < p; ++i) v = map.lift(v);
            return v;
        };
        long long count = 1;
        for (int i = 0; i < p; ++i) count *= map.degree();
        // G(y) = F_p(y) - y increases from 0 to d^p - 1 on [0,1)
        for (long long j = 0; j < count - 1; ++j) {
            double lo = 0.0, hi = 1.0;
            double target = static_cast<double>(j);
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                if (lift_p(mid) - mid < target) lo = mid; else hi = mid;
                if (hi - lo < 1e-15) break;
            }
            double y = 0.5 * (lo + hi);
            OrbitCertificate cert;
            cert.period = p;
            cert.orbit.reserve(p);
            double t = wrap_unit(y);
            double sum = 0.0;
            for (int i = 0; i < p; ++i) {
                cert.orbit.push_back(t);
                sum += b.eval(t);
                t = map.eval(t);
            }
            cert.orbit_sum = sum;
            if (std::abs(sum) > sum_threshold) return cert;
        }
    }
    return std::nullopt;
}

} // namespace chainheat
