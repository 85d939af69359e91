#include "chainheat/covariance.hpp"

#include <cmath>
#include <complex>

#include "chainheat/spectral.hpp"
#include "chainheat/trig.hpp"

namespace chainheat {

namespace {

// (omega0^2 - Lap) M, applied row-wise: K M where K is the circulant
// tridiagonal with diagonal omega0^2 + 2 and -1 off-diagonals.
void apply_pinned_left(const Eigen::MatrixXd& m, double omega0, Eigen::MatrixXd& out) {
    const int n = static_cast<int>(m.rows());
    const double diag = omega0 * omega0 + 2.0;
    for (int x = 0; x < n; ++x) {
        int xp = (x + 1) % n;
        int xm = (x - 1 + n) % n;
        out.row(x) = diag * m.row(x) - m.row(xp) - m.row(xm);
    }
}

void apply_pinned_right(const Eigen::MatrixXd& m, double omega0, Eigen::MatrixXd& out) {
    const int n = static_cast<int>(m.cols());
    const double diag = omega0 * omega0 + 2.0;
    for (int y = 0; y < n; ++y) {
        int yp = (y + 1) % n;
        int ym = (y - 1 + n) % n;
        out.col(y) = diag * m.col(y) - m.col(yp) - m.col(ym);
    }
}

} // namespace

double CovMatrix::max_abs() const {
    return std::max({q.cwiseAbs().maxCoeff(), qp.cwiseAbs().maxCoeff(),
                     p.cwiseAbs().maxCoeff()});
}

Eigen::MatrixXd CovMatrix::full() const {
    const int n = size();
    Eigen::MatrixXd f(2 * n, 2 * n);
    f.topLeftCorner(n, n) = q;
    f.topRightCorner(n, n) = qp;
    f.bottomLeftCorner(n, n) = qp.transpose();
    f.bottomRightCorner(n, n) = p;
    return f;
}

bool CovMatrix::positive_semidefinite(double tol_scale) const {
    Eigen::MatrixXd f = full();
    double shift = tol_scale * f.trace() / size();
    f.diagonal().array() += std::max(shift, 1e-300);
    Eigen::LLT<Eigen::MatrixXd> llt(f);
    return llt.info() == Eigen::Success;
}

CovMatrix generator_drift(const CovMatrix& S, const GeneratorParams& params) {
    const int n = params.n;
    if (S.size() != n) throw std::invalid_argument("generator_drift: dimension mismatch");
    const double g = params.gamma;
    CovMatrix d(n);
    // dq = qp + qp^T
    d.q = S.qp + S.qp.transpose();
    // dqp = p - q K - g qp
    Eigen::MatrixXd qk(n, n);
    apply_pinned_right(S.q, params.omega0, qk);
    d.qp = S.p - qk - g * S.qp;
    // dp = -(K qp + (K qp)^T) - 2 g (p - Diag(p))
    Eigen::MatrixXd kqp(n, n);
    apply_pinned_left(S.qp, params.omega0, kqp);
    d.p = -(kqp + kqp.transpose());
    d.p.noalias() -= 2.0 * g * S.p;
    d.p.diagonal() += 2.0 * g * S.p.diagonal();
    return d;
}

double default_cov_dt(const GeneratorParams& params) {
    return 0.1 / (3.0 * (params.omega0 * params.omega0 + 2.0) + params.gamma);
}

std::vector<double> energy_profile_from_cov(const CovMatrix& S, double omega0) {
    const int n = S.size();
    std::vector<double> e(n);
    for (int x = 0; x < n; ++x) {
        int xm = (x - 1 + n) % n;
        double stretch = S.q(x, x) - 2.0 * S.q(x, xm) + S.q(xm, xm);
        e[x] = 0.5 * S.p(x, x) + 0.5 * stretch + 0.5 * omega0 * omega0 * S.q(x, x);
    }
    return e;
}

double total_energy_from_cov(const CovMatrix& S, double omega0) {
    double total = 0.0;
    for (double v : energy_profile_from_cov(S, omega0)) total += v;
    return total;
}

CovMatrix evolve_covariance(const CovMatrix& S0, const GeneratorParams& params,
                            double t_micro, const EvolveOptions& opts) {
    if (t_micro < 0.0) throw std::invalid_argument("evolve_covariance: need t >= 0");
    double dt = (opts.dt > 0.0) ? opts.dt : default_cov_dt(params);
    CovMatrix S = S0;
    S.symmetrize();
    const double e0 = total_energy_from_cov(S, params.omega0);
    double t = 0.0;
    long long step = 0;
    auto rk_stage = [&](const CovMatrix& base, const CovMatrix& slope, double h) {
        CovMatrix out(params.n);
        out.q = base.q + h * slope.q;
        out.qp = base.qp + h * slope.qp;
        out.p = base.p + h * slope.p;
        return out;
    };
    while (t < t_micro - 1e-12) {
        double h = std::min(dt, t_micro - t);
        CovMatrix k1 = generator_drift(S, params);
        CovMatrix k2 = generator_drift(rk_stage(S, k1, h / 2.0), params);
        CovMatrix k3 = generator_drift(rk_stage(S, k2, h / 2.0), params);
        CovMatrix k4 = generator_drift(rk_stage(S, k3, h), params);
        S.q += h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
        S.qp += h / 6.0 * (k1.qp + 2.0 * k2.qp + 2.0 * k3.qp + k4.qp);
        S.p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        S.symmetrize();
        t += h;
        ++step;
        if (opts.check_interval > 0 && step % opts.check_interval == 0) {
            double e = total_energy_from_cov(S, params.omega0);
            if (std::abs(e - e0) > opts.energy_tol * std::max(std::abs(e0), 1e-300))
                throw std::runtime_error(
                    "evolve_covariance: energy drift beyond tolerance, reduce dt");
            if (!S.positive_semidefinite())
                throw std::runtime_error("evolve_covariance: covariance lost positivity");
        }
        if (opts.observer) opts.observer(t, S);
    }
    return S;
}

CovMatrix gibbs_covariance(const GeneratorParams& params, double temperature) {
    if (temperature < 0.0) throw std::invalid_argument("gibbs_covariance: need T >= 0");
    const int n = params.n;
    CovMatrix S(n);
    if (temperature == 0.0) return S;
    S.p = 2.0 * temperature * Eigen::MatrixXd::Identity(n, n);
    // S^q = 2T (omega0^2 - Lap)^{-1}
    Eigen::MatrixXd k = (params.omega0 * params.omega0 + 2.0) *
                        Eigen::MatrixXd::Identity(n, n);
    for (int x = 0; x < n; ++x) {
        k(x, (x + 1) % n) -= 1.0;
        k(x, (x - 1 + n) % n) -= 1.0;
    }
    S.q = 2.0 * temperature * k.llt().solve(Eigen::MatrixXd::Identity(n, n));
    S.q = 0.5 * (S.q + S.q.transpose()).eval();
    return S;
}

Eigen::MatrixXd assemble_B(const std::vector<double>& momentum_diagonal,
                           const GeneratorParams& params) {
    const int n = params.n;
    if (params.gamma <= 0.0) throw std::invalid_argument("assemble_B: need gamma > 0");
    if (static_cast<int>(momentum_diagonal.size()) != n)
        throw std::invalid_argument("assemble_B: diagonal length mismatch");
    ModeData modes(n, params.omega0);
    // F_{j,j'} = N^{-1/2} sum_y psi^*_{j+j'}(y) S^p_{y,y} depends on j+j' only
    cvector f(momentum_diagonal.size());
    for (int y = 0; y < n; ++y) f[y] = momentum_diagonal[y];
    Dft plan(n);
    plan.forward(f); // unitary transform; F_{j,j'} = f[(j+j') mod N] / sqrt(N)
    const double root_n = std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd bhat(n, n);
    for (int j = 0; j < n; ++j)
        for (int jp = 0; jp < n; ++jp)
            bhat(j, jp) = phi_tilde(modes.mu[j], modes.mu[jp], params.gamma) *
                          f[(j + jp) % n] / root_n;
    // B = U^{-1} bhat U^{-1} with (U^{-1})_{x,j} = psi_j(x)
    Eigen::MatrixXcd uinv(n, n);
    for (int x = 0; x < n; ++x)
        for (int j = 0; j < n; ++j) {
            double a = two_pi * static_cast<double>(j) * x / n;
            uinv(x, j) = std::complex<double>{std::cos(a), std::sin(a)} /
                         std::sqrt(static_cast<double>(n));
        }
    Eigen::MatrixXcd b = uinv * bhat * uinv.transpose();
    double imag_max = b.imag().cwiseAbs().maxCoeff();
    double real_max = std::max(b.real().cwiseAbs().maxCoeff(), 1.0);
    if (imag_max > 1e-9 * real_max)
        throw std::runtime_error("assemble_B: output not real");
    return b.real();
}

} // namespace chainheat
