#include "chainheat/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "chainheat/trig.hpp"

namespace chainheat {

namespace {
constexpr double pi = 3.14159265358979323846264338328;
}

ModeData::ModeData(int n_in, double omega0_in) : n(n_in), omega0(omega0_in) {
    if (n < 1) throw std::invalid_argument("ModeData: need n >= 1");
    if (omega0 <= 0.0) throw std::invalid_argument("ModeData: need omega0 > 0");
    mu.resize(n);
    for (int j = 0; j < n; ++j) {
        double s = std::sin(pi * j / n);
        mu[j] = omega0 * omega0 + 4.0 * s * s;
    }
}

double ModeData::frequency(int j) const {
    return std::sqrt(mu[((j % n) + n) % n]);
}

int ModeData::representative(int j) const {
    int r = ((j % n) + n) % n;
    // J_N: {-(N-1)/2..(N-1)/2} for odd N, {-N/2+1..N/2} for even N
    if (r > n / 2) r -= n;
    return r;
}

Dft::Dft(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("Dft: need n >= 1");
    pow2_ = (n & (n - 1)) == 0;
    scale_ = 1.0 / std::sqrt(static_cast<double>(n));
    twiddle_.resize(n);
    for (int k = 0; k < n; ++k) {
        double a = -two_pi * k / n;
        twiddle_[k] = {std::cos(a), std::sin(a)};
    }
    if (pow2_) {
        rev_.resize(n);
        int lg = 0;
        while ((1 << lg) < n) ++lg;
        for (int i = 0; i < n; ++i) {
            int r = 0;
            for (int b = 0; b < lg; ++b)
                if (i & (1 << b)) r |= 1 << (lg - 1 - b);
            rev_[i] = r;
        }
    }
    work_.resize(n);
}

void Dft::fft(cvector& v, bool inv) const {
    const int n = n_;
    for (int i = 0; i < n; ++i)
        if (rev_[i] > i) std::swap(v[i], v[rev_[i]]);
    for (int len = 2; len <= n; len <<= 1) {
        int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> w = twiddle_[static_cast<std::size_t>(k) * step];
                if (inv) w = std::conj(w);
                std::complex<double> a = v[i + k];
                std::complex<double> b = v[i + k + len / 2] * w;
                v[i + k] = a + b;
                v[i + k + len / 2] = a - b;
            }
        }
    }
}

void Dft::forward(cvector& v) const {
    if (static_cast<int>(v.size()) != n_)
        throw std::invalid_argument("Dft::forward: size mismatch");
    if (pow2_) {
        fft(v, false);
    } else {
        for (int j = 0; j < n_; ++j) {
            std::complex<double> acc = 0.0;
            for (int x = 0; x < n_; ++x)
                acc += v[x] * twiddle_[(static_cast<std::size_t>(j) * x) % n_];
            work_[j] = acc;
        }
        v = work_;
    }
    for (auto& z : v) z *= scale_;
}

void Dft::inverse(cvector& v) const {
    if (static_cast<int>(v.size()) != n_)
        throw std::invalid_argument("Dft::inverse: size mismatch");
    if (pow2_) {
        fft(v, true);
    } else {
        for (int j = 0; j < n_; ++j) {
            std::complex<double> acc = 0.0;
            for (int x = 0; x < n_; ++x)
                acc += v[x] * std::conj(twiddle_[(static_cast<std::size_t>(j) * x) % n_]);
            work_[j] = acc;
        }
        v = work_;
    }
    for (auto& z : v) z *= scale_;
}

cvector dft(const std::vector<double>& v) {
    cvector z(v.begin(), v.end());
    Dft(static_cast<int>(v.size())).forward(z);
    return z;
}

cvector dft(const cvector& v) {
    cvector z = v;
    Dft(static_cast<int>(v.size())).forward(z);
    return z;
}

cvector idft(const cvector& coeffs) {
    cvector z = coeffs;
    Dft(static_cast<int>(coeffs.size())).inverse(z);
    return z;
}

double green_function(double omega0, long long x) {
    if (omega0 <= 0.0) throw std::invalid_argument("green_function: need omega0 > 0");
    double w2 = omega0 * omega0;
    double root = std::sqrt(1.0 + w2 / 4.0);
    double base = 1.0 + w2 / 2.0 + omega0 * root;
    double amp = 1.0 / (omega0 * std::sqrt(w2 + 4.0));
    return amp * std::pow(base, -static_cast<double>(std::llabs(x)));
}

double diffusion_closed_form(double omega0) {
    if (omega0 <= 0.0) throw std::invalid_argument("diffusion: need omega0 > 0");
    double w2 = omega0 * omega0;
    return 2.0 / (2.0 + w2 + omega0 * std::sqrt(4.0 + w2));
}

double diffusion_kinetic(double omega0, int quad_points) {
    if (omega0 <= 0.0) throw std::invalid_argument("diffusion: need omega0 > 0");
    if (quad_points < 1000) throw std::invalid_argument("diffusion_kinetic: need >= 1000 points");
    // periodic trapezoid rule, exponentially accurate for this integrand
    double w2 = omega0 * omega0;
    double sum = 0.0;
    for (int i = 0; i < quad_points; ++i) {
        double k = static_cast<double>(i) / quad_points;
        double s = std::sin(pi * k);
        double disp = w2 + 4.0 * s * s;
        sum += (1.0 - std::cos(4.0 * pi * k)) / disp;
    }
    return sum / quad_points;
}

double diffusion_fd(double omega0) {
    if (omega0 <= 0.0) throw std::invalid_argument("diffusion: need omega0 > 0");
    double w2 = omega0 * omega0;
    return 1.0 - w2 * (green_function(omega0, 0) + green_function(omega0, 1));
}

double phi_tilde(double mu_a, double mu_b, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("phi_tilde: need gamma > 0");
    double diff = mu_a - mu_b;
    double den = 2.0 * gamma * gamma * (mu_a + mu_b) + diff * diff;
    return 4.0 * gamma * gamma * diff / den;
}

std::complex<double> effective_derivative_sum(int n, int k, double omega0,
                                              double gamma) {
    ModeData modes(n, omega0);
    std::complex<double> acc = 0.0;
    for (int j = 0; j < n; ++j) {
        double a = two_pi * j / n;
        std::complex<double> factor{std::cos(a) - 1.0, std::sin(a)};
        int jp = (((k - j) % n) + n) % n;
        acc += factor * phi_tilde(modes.mu[j], modes.mu[jp], gamma);
    }
    return acc;
}

double heat_kernel_integral(double omega0) {
    if (omega0 <= 0.0) throw std::invalid_argument("heat_kernel_integral: need omega0 > 0");
    const int m = 1 << 16;
    double w2 = omega0 * omega0;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        double t = two_pi * i / m;
        double s = std::sin(t);
        sum += s * s / (w2 + 2.0 - 2.0 * std::cos(t));
    }
    return sum * two_pi / m;
}

} // namespace chainheat
