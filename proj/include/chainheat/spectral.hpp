#ifndef CHAINHEAT_SPECTRAL_HPP
#define CHAINHEAT_SPECTRAL_HPP

#include <complex>
#include <vector>

namespace chainheat {

using cvector = std::vector<std::complex<double>>;

/// Eigendata of the pinned lattice operator omega0^2 - Laplacian on Z_N:
/// mu_j = omega0^2 + 4 sin^2(pi j / N). Mode indices run over the symmetric
/// representatives J_N = {-(N-1)/2..(N-1)/2} (N odd), {-N/2+1..N/2} (N even);
/// storage is by residue j mod N.
struct ModeData {
    int n = 0;
    double omega0 = 0.0;
    std::vector<double> mu; // mu[j], j = 0..n-1

    ModeData(int n_, double omega0_);

    double frequency(int j) const; // sqrt(mu_j)
    /// Symmetric representative of residue j.
    int representative(int j) const;
};

/// Unitary discrete Fourier transform, v_hat_j = N^{-1/2} sum_x v_x e^{-2pi i jx/N}.
/// Radix-2 FFT for power-of-two sizes, cached direct transform otherwise.
class Dft {
public:
    explicit Dft(int n);

    int size() const { return n_; }
    void forward(cvector& v) const;
    void inverse(cvector& v) const;

private:
    void fft(cvector& v, bool inv) const;

    int n_;
    bool pow2_;
    double scale_;
    cvector twiddle_;        // e^{-2pi i k/n}, k = 0..n-1 (direct path)
    std::vector<int> rev_;   // bit-reversal permutation (fft path)
    mutable cvector work_;
};

cvector dft(const std::vector<double>& v);
cvector dft(const cvector& v);
cvector idft(const cvector& coeffs);

/// Green's function of (-Laplacian + omega0^2) on the integer lattice,
/// closed geometric form.
double green_function(double omega0, long long x);

/// Thermal diffusivity, three routes that must agree:
/// closed form, kinetic integral (periodic trapezoid), fluctuation-dissipation.
double diffusion_closed_form(double omega0);
double diffusion_kinetic(double omega0, int quad_points);
double diffusion_fd(double omega0);

/// Antisymmetric mode kernel
///   Phi(a, b) = 4 g^2 (a - b) / (2 g^2 (a + b) + (a - b)^2),
/// defined for gamma > 0; denominator is bounded below by 4 g^2 omega0^2
/// when a, b >= omega0^2.
double phi_tilde(double mu_a, double mu_b, double gamma);

/// sum_j (e^{2pi i j/N} - 1) Phi(mu_j, mu_{k-j}), which approaches
/// 2 pi i k D with imaginary-part defect O(k^3/N) and real part O(k^2/N).
std::complex<double> effective_derivative_sum(int n, int k, double omega0,
                                              double gamma);

/// int_0^{2pi} sin^2(t) / (omega0^2 + 2 - 2 cos t) dt  =  pi D.
double heat_kernel_integral(double omega0);

} // namespace chainheat

#endif
