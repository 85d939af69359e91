#ifndef CHAINHEAT_TRIG_HPP
#define CHAINHEAT_TRIG_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace chainheat {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Real trigonometric polynomial on the unit circle,
///   g(u) = c0 + sum_m cos_c[m-1] cos(2 pi m u) + sin_c[m-1] sin(2 pi m u).
struct TrigPoly {
    double c0 = 0.0;
    std::vector<double> cos_c;
    std::vector<double> sin_c;

    TrigPoly() = default;
    TrigPoly(double constant, std::vector<double> cosines, std::vector<double> sines)
        : c0(constant), cos_c(std::move(cosines)), sin_c(std::move(sines)) {}

    int degree() const {
        return static_cast<int>(std::max(cos_c.size(), sin_c.size()));
    }

    double eval(double u) const {
        double v = c0;
        for (std::size_t m = 0; m < cos_c.size(); ++m)
            v += cos_c[m] * std::cos(two_pi * static_cast<double>(m + 1) * u);
        for (std::size_t m = 0; m < sin_c.size(); ++m)
            v += sin_c[m] * std::sin(two_pi * static_cast<double>(m + 1) * u);
        return v;
    }

    double deriv(double u) const {
        double v = 0.0;
        for (std::size_t m = 0; m < cos_c.size(); ++m) {
            double w = two_pi * static_cast<double>(m + 1);
            v -= cos_c[m] * w * std::sin(w * u);
        }
        for (std::size_t m = 0; m < sin_c.size(); ++m) {
            double w = two_pi * static_cast<double>(m + 1);
            v += sin_c[m] * w * std::cos(w * u);
        }
        return v;
    }

    /// Second derivative: differentiates each harmonic twice.
    TrigPoly second_derivative() const {
        TrigPoly d;
        d.c0 = 0.0;
        d.cos_c.resize(cos_c.size(), 0.0);
        d.sin_c.resize(sin_c.size(), 0.0);
        for (std::size_t m = 0; m < cos_c.size(); ++m) {
            double w = two_pi * static_cast<double>(m + 1);
            d.cos_c[m] = -w * w * cos_c[m];
        }
        for (std::size_t m = 0; m < sin_c.size(); ++m) {
            double w = two_pi * static_cast<double>(m + 1);
            d.sin_c[m] = -w * w * sin_c[m];
        }
        return d;
    }

    /// Fourier coefficient  int g(u) e^{-2 pi i k u} du.
    std::complex<double> fourier_coeff(int k) const {
        if (k == 0) return {c0, 0.0};
        int m = std::abs(k);
        double cc = (static_cast<std::size_t>(m) <= cos_c.size()) ? cos_c[m - 1] : 0.0;
        double ss = (static_cast<std::size_t>(m) <= sin_c.size()) ? sin_c[m - 1] : 0.0;
        // cos -> (c/2, c/2), sin -> (-i s/2 at +m, +i s/2 at -m) wait: see below
        double sign = (k > 0) ? 1.0 : -1.0;
        return {cc / 2.0, -sign * ss / 2.0};
    }

    /// Sup of |g^{(order)}| estimated on a fine grid (exact for order 0 up to
    /// grid resolution; used for norm bounds in tests).
    double sup_norm(int order = 0, int grid = 8192) const {
        TrigPoly g = *this;
        for (int r = 0; r + 1 < order; r += 2) g = g.second_derivative();
        double best = 0.0;
        for (int i = 0; i < grid; ++i) {
            double u = static_cast<double>(i) / grid;
            double v = (order % 2 == 0) ? g.eval(u) : g.deriv(u);
            best = std::max(best, std::abs(v));
        }
        return best;
    }
};

} // namespace chainheat

#endif
