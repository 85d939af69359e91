#include "chainheat/heat.hpp"

#include <cmath>
#include <stdexcept>

namespace chainheat {

TorusMeasure::TorusMeasure(int k_max) : k_max_(k_max) {
    if (k_max_ < 1) throw std::invalid_argument("TorusMeasure: need k_max >= 1");
    c_.assign(2 * k_max_ + 1, {0.0, 0.0});
}

TorusMeasure::TorusMeasure(int k_max,
                           const std::vector<std::complex<double>>& coeffs_full)
    : TorusMeasure(k_max) {
    if (coeffs_full.size() != c_.size())
        throw std::invalid_argument("TorusMeasure: coefficient count mismatch");
    c_ = coeffs_full;
    // enforce Hermitian symmetry (real measure)
    for (int k = 1; k <= k_max_; ++k) {
        auto avg = 0.5 * (c_[k_max_ + k] + std::conj(c_[k_max_ - k]));
        c_[k_max_ + k] = avg;
        c_[k_max_ - k] = std::conj(avg);
    }
    c_[k_max_] = {c_[k_max_].real(), 0.0};
}

TorusMeasure TorusMeasure::from_trig(const TrigPoly& density, int k_max) {
    TorusMeasure t(k_max);
    for (int k = -k_max; k <= k_max; ++k) t.c_[k_max + k] = density.fourier_coeff(k);
    return t;
}

std::complex<double> TorusMeasure::coeff(int k) const {
    if (std::abs(k) > k_max_) return {0.0, 0.0};
    return c_[k_max_ + k];
}

void TorusMeasure::set_coeff(int k, std::complex<double> v) {
    if (std::abs(k) > k_max_)
        throw std::invalid_argument("TorusMeasure: mode outside truncation");
    if (k == 0) {
        c_[k_max_] = {v.real(), 0.0};
        return;
    }
    c_[k_max_ + k] = v;
    c_[k_max_ - k] = std::conj(v);
}

double TorusMeasure::density(double u) const {
    // c_k are coefficients against e^{-2 pi i k u}; density = sum_k c_k e^{+2 pi i k u}
    double v = c_[k_max_].real();
    for (int k = 1; k <= k_max_; ++k) {
        std::complex<double> ph{std::cos(two_pi * k * u), std::sin(two_pi * k * u)};
        v += 2.0 * (c_[k_max_ + k] * ph).real();
    }
    return v;
}

TorusMeasure heat_evolve(const TorusMeasure& T0, double t, double diffusion,
                         double gamma) {
    if (t < 0.0) throw std::invalid_argument("heat_evolve: need t >= 0");
    if (gamma <= 0.0) throw std::invalid_argument("heat_evolve: need gamma > 0");
    double kappa = diffusion / (2.0 * gamma);
    TorusMeasure out = T0;
    for (int k = 1; k <= T0.k_max(); ++k) {
        // 4 pi^2 k^2 = (2 pi k)^2
        double factor = std::exp(-(two_pi * k) * (two_pi * k) * kappa * t);
        out.set_coeff(k, T0.coeff(k) * factor);
    }
    return out;
}

double weak_test(const std::vector<TorusMeasure>& series, const TrigPoly& phi,
                 double t, double diffusion, double gamma) {
    if (series.size() < 3 || series.size() % 2 == 0)
        throw std::invalid_argument("weak_test: need an odd number (>= 3) of time samples");
    auto pairing = [&](const TrigPoly& g, const TorusMeasure& m) {
        // int g dT = sum_k g_hat(k) conj(c_k) for real measures
        double acc = 0.0;
        int kk = std::min(m.k_max(), g.degree());
        for (int k = -kk; k <= kk; ++k)
            acc += (g.fourier_coeff(k) * std::conj(m.coeff(k))).real();
        return acc;
    };
    TrigPoly phi2 = phi.second_derivative();
    const std::size_t n = series.size();
    double h = t / static_cast<double>(n - 1);
    double integral = 0.0; // composite Simpson
    for (std::size_t i = 0; i < n; ++i) {
        double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        integral += w * pairing(phi2, series[i]);
    }
    integral *= h / 3.0;
    double lhs = pairing(phi, series.back()) - pairing(phi, series.front());
    return std::abs(lhs - diffusion / (2.0 * gamma) * integral);
}

TorusMeasure xi_extract(const std::vector<double>& profile, int k_max) {
    const int n = static_cast<int>(profile.size());
    if (n < 2 * k_max + 1)
        throw std::invalid_argument("xi_extract: profile shorter than 2 k_max + 1");
    TorusMeasure out(k_max);
    for (int k = 0; k <= k_max; ++k) {
        std::complex<double> acc = 0.0;
        for (int x = 0; x < n; ++x) {
            double a = -two_pi * k * x / n;
            acc += profile[x] * std::complex<double>{std::cos(a), std::sin(a)};
        }
        out.set_coeff(k, acc / static_cast<double>(n));
    }
    return out;
}

MeasureDistance measure_distance(const TorusMeasure& a, const TorusMeasure& b) {
    if (a.k_max() != b.k_max())
        throw std::invalid_argument("measure_distance: measures must share k_max");
    MeasureDistance out;
    out.value = std::min(1.0, std::abs(a.coeff(0) - b.coeff(0)));
    for (int k = 1; k <= a.k_max(); ++k) {
        double d = std::abs(a.coeff(k) - b.coeff(k));
        out.value += 2.0 * std::pow(2.0, -k) * std::min(1.0, d);
    }
    out.truncation_tail = std::pow(2.0, -(a.k_max() - 1));
    return out;
}

ConvergenceRate convergence_rate_psi(const std::vector<double>& profile,
                                     const TorusMeasure& T0, int k_max) {
    if (T0.mass() <= 0.0)
        throw std::invalid_argument("convergence_rate_psi: zero-mass target rejected");
    TorusMeasure xi = xi_extract(profile, k_max);
    ConvergenceRate out;
    out.varpi.resize(k_max);
    for (int k = 1; k <= k_max; ++k) {
        out.varpi[k - 1] = std::abs(xi.coeff(k) - T0.coeff(k)) / T0.mass();
        out.psi += 2.0 * out.varpi[k - 1] / (static_cast<double>(k) * k);
    }
    return out;
}

} // namespace chainheat
