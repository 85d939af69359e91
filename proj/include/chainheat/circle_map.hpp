#ifndef CHAINHEAT_CIRCLE_MAP_HPP
#define CHAINHEAT_CIRCLE_MAP_HPP

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chainheat/trig.hpp"

namespace chainheat {

struct branch_inversion_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Smooth expanding degree-d circle map
///   f(theta) = d theta + sum_m a_m sin(2 pi m theta)  (mod 1),
/// with a certified expansion floor lambda <= min f' obtained from the
/// analytic bound d - sum_m 2 pi m |a_m| and checked on a fine grid.
class MapModel {
public:
    struct Harmonic {
        double amplitude = 0.0;
        int harmonic = 1;
    };

    MapModel(int degree, std::vector<Harmonic> perturbation = {});

    int degree() const { return degree_; }
    double expansion_floor() const { return floor_; }
    const std::vector<Harmonic>& perturbation() const { return pert_; }

    double eval(double theta) const;     // f(theta) in [0,1)
    double deriv(double theta) const;    // f'(theta) >= lambda
    double second_deriv(double theta) const;
    double lift(double u) const;         // F(u) = d u + periodic part, F(u+1) = F(u)+d
    double iterate(double theta, int k) const;

    /// sup |f''| / |f'|^2, the distortion constant entering the cone bound.
    double distortion_bound() const;

    struct Branch {
        double point = 0.0; // y with f(y) = theta
        double deriv = 0.0; // f'(y)
    };

    /// The d monotone-branch preimages of theta, sorted ascending, each
    /// verified by |f(y) - theta| <= 1e-12 in circle distance.
    /// Safeguarded Newton (tolerance 1e-13, max 50 iterations).
    std::vector<Branch> inverse_branches(double theta) const;

private:
    int degree_;
    std::vector<Harmonic> pert_;
    double floor_;
};

inline double wrap_unit(double u) {
    double w = u - std::floor(u);
    return (w < 1.0) ? w : 0.0;
}

inline double circle_distance(double a, double b) {
    double d = std::abs(wrap_unit(a) - wrap_unit(b));
    return std::min(d, 1.0 - d);
}

/// Forcing observable: a trig polynomial with a record of whether the mean
/// against the invariant density has been removed.
struct Observable : TrigPoly {
    bool centered = false;

    Observable() = default;
    explicit Observable(TrigPoly p, bool centered_ = false)
        : TrigPoly(std::move(p)), centered(centered_) {}
};

/// Density (or any smooth function) sampled on a uniform periodic grid.
/// Quadrature is the periodic trapezoid rule; off-grid evaluation uses
/// 8-point local Lagrange interpolation.
struct DensityGrid {
    std::vector<double> values;

    DensityGrid() = default;
    explicit DensityGrid(std::vector<double> v) : values(std::move(v)) {}
    DensityGrid(int size, double fill) : values(static_cast<std::size_t>(size), fill) {}

    int size() const { return static_cast<int>(values.size()); }
    double node(int i) const { return static_cast<double>(i) / size(); }

    double integral() const;
    double min_value() const;
    double max_abs() const;
    double interpolate(double u) const;

    /// max |rho'/rho| by centered finite differences; requires rho > 0.
    double log_derivative_bound() const;
};

double quadrature(const DensityGrid& f, const DensityGrid& g); // int f g
double quadrature(const DensityGrid& f);                       // int f

/// Transfer operator: (L rho)(x) = sum_{f(y)=x} rho(y) / f'(y), evaluated
/// pointwise on the grid. Preserves total mass; non-negative input stays
/// non-negative (interpolation undershoot near zeros is clamped).
DensityGrid transfer_apply(const MapModel& map, const DensityGrid& rho);

/// Fixed point of the transfer operator from rho = 1, normalized to mass 1.
DensityGrid invariant_density(const MapModel& map, int grid_size, double tol,
                              int max_iterations = 2000);

/// Shift c0 so that int b rho_star = 0.
Observable center_observable(const Observable& b, const DensityGrid& rho_star);

/// C(k) = int b(x) b(f^k x) rho_star(x) dx, computed as int b . L^k(b rho_star):
/// the transfer operator keeps iterates smooth, so the quadrature stays
/// accurate for every k.
double autocorrelation(const MapModel& map, const Observable& b,
                       const DensityGrid& rho_star, int k);
std::vector<double> autocorrelations(const MapModel& map, const Observable& b,
                                     const DensityGrid& rho_star, int k_max);

struct NuEstimate {
    double nu = 0.0;       // decay rate in (0,1)
    bool fitted = false;   // false -> noise-floor fallback 1/lambda
    double residual = 0.0; // rms residual of the log-linear fit
};

/// Least-squares decay rate of |C(k)| ~ nu^k; falls back to 1/lambda when
/// correlations sit at the noise floor. Used only for tail bounds.
NuEstimate decay_rate(const MapModel& map, const Observable& b,
                      const DensityGrid& rho_star);

struct GammaResult {
    double gamma = 0.0;
    double tail_bound = 0.0;
    double nu = 0.0;
    int truncation = 0;
    bool tail_warning = false; // |C(K)| far above the tail-model prediction
};

/// gamma = C(0) + 2 sum_{k=1..K} C(k) with a geometric tail bound.
GammaResult green_kubo_gamma(const MapModel& map, const Observable& b,
                             const DensityGrid& rho_star, int truncation);

/// Same with K chosen so nu^K <= 1e-12 (capped at 400).
GammaResult green_kubo_gamma_adaptive(const MapModel& map, const Observable& b,
                                      const DensityGrid& rho_star);

/// || n^{-1/2} sum_{k<n} b o f^k ||^2_{L2(rho_star)}; equals gamma + O(1/n).
/// Evaluated through the running transfer-operator recursion
///   g_{m+1} = L(b rho_star + g_m),   V_n = n C(0) + 2 sum_{m<n} int b g_m,
/// which is the same functional without grid orbits (direct quadrature of
/// the squared sum is impossible: the integrand oscillates at frequency d^n).
double birkhoff_variance(const MapModel& map, const Observable& b,
                         const DensityGrid& rho_star, int n);

struct OrbitCertificate {
    int period = 0;
    std::vector<double> orbit;
    double orbit_sum = 0.0;
};

/// Search periodic orbits of f^p, p <= p_max, for one with |sum b| > 1e-6.
/// Such an orbit certifies gamma > 0; absence is a valid "none".
std::optional<OrbitCertificate> periodic_orbit_certificate(const MapModel& map,
                                                           const Observable& b,
                                                           int p_max);

} // namespace chainheat

#endif
