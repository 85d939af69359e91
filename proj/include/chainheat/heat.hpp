#ifndef CHAINHEAT_HEAT_HPP
#define CHAINHEAT_HEAT_HPP

#include <complex>
#include <vector>

#include "chainheat/trig.hpp"

namespace chainheat {

/// Finite positive measure on the circle stored as truncated Fourier
/// coefficients c_k = int e^{-2 pi i k u} T(du), |k| <= k_max; Hermitian
/// symmetry (real measure) is enforced on construction.
class TorusMeasure {
public:
    explicit TorusMeasure(int k_max);
    TorusMeasure(int k_max, const std::vector<std::complex<double>>& coeffs_full);

    /// Measure with density given by a trig polynomial.
    static TorusMeasure from_trig(const TrigPoly& density, int k_max);

    int k_max() const { return k_max_; }
    std::complex<double> coeff(int k) const;
    void set_coeff(int k, std::complex<double> v); // also sets the -k partner
    double mass() const { return coeff(0).real(); }

    double density(double u) const; // truncated Fourier sum

private:
    int k_max_;
    std::vector<std::complex<double>> c_; // index k + k_max
};

/// Exact per-mode heat semigroup: c_k(t) = c_k(0) exp(-4 pi^2 k^2 (D/2gamma) t).
TorusMeasure heat_evolve(const TorusMeasure& T0, double t, double diffusion,
                         double gamma);

/// Residual of the weak form
///   int phi dT(t) - int phi dT0 - (D/2gamma) int_0^t int phi'' dT(s) ds,
/// with the time integral evaluated by composite Simpson on the series
/// (uniform in time, odd number of samples, series.front() at s=0,
/// series.back() at s=t).
double weak_test(const std::vector<TorusMeasure>& series, const TrigPoly& phi,
                 double t, double diffusion, double gamma);

/// Empirical measure of a per-site energy profile:
/// c_k = N^{-1} sum_x e^{-2 pi i k x/N} e_x. Requires N >= 2 k_max + 1.
TorusMeasure xi_extract(const std::vector<double>& profile, int k_max);

struct MeasureDistance {
    double value = 0.0;
    double truncation_tail = 0.0; // bound on the omitted |k| > k_max terms
};

/// d(mu, nu) = sum_k 2^{-|k|} min{1, |c_k(mu) - c_k(nu)|} over the shared
/// truncation window.
MeasureDistance measure_distance(const TorusMeasure& a, const TorusMeasure& b);

struct ConvergenceRate {
    std::vector<double> varpi; // |k| = 1..k_max
    double psi = 0.0;          // sum k^{-2} varpi over 1 <= |k| <= k_max
};

/// Mode-wise deviation of a profile from the target measure, normalized by
/// the total energy; rejects zero-mass targets.
ConvergenceRate convergence_rate_psi(const std::vector<double>& profile,
                                     const TorusMeasure& T0, int k_max);

} // namespace chainheat

#endif
