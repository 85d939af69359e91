#ifndef CHAINHEAT_COVARIANCE_HPP
#define CHAINHEAT_COVARIANCE_HPP

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

namespace chainheat {

struct GeneratorParams {
    int n = 0;
    double omega0 = 0.0;
    double gamma = 0.0; // noise strength, >= 0

    GeneratorParams(int n_, double omega0_, double gamma_)
        : n(n_), omega0(omega0_), gamma(gamma_) {
        if (n < 1) throw std::invalid_argument("GeneratorParams: need n >= 1");
        if (omega0 <= 0.0) throw std::invalid_argument("GeneratorParams: need omega0 > 0");
        if (gamma < 0.0) throw std::invalid_argument("GeneratorParams: need gamma >= 0");
    }
};

/// Block covariance of pair sums <q_x . q_y> etc. (two-component dot
/// products). The (p,q) block is the transpose of (q,p) by construction.
struct CovMatrix {
    Eigen::MatrixXd q;  // symmetric
    Eigen::MatrixXd qp;
    Eigen::MatrixXd p;  // symmetric

    CovMatrix() = default;
    explicit CovMatrix(int n)
        : q(Eigen::MatrixXd::Zero(n, n)),
          qp(Eigen::MatrixXd::Zero(n, n)),
          p(Eigen::MatrixXd::Zero(n, n)) {}

    int size() const { return static_cast<int>(q.rows()); }

    void symmetrize() {
        q = 0.5 * (q + q.transpose()).eval();
        p = 0.5 * (p + p.transpose()).eval();
    }

    double max_abs() const;

    /// Full 2N x 2N matrix [[q, qp], [qp^T, p]].
    Eigen::MatrixXd full() const;

    /// Smallest eigenvalue >= -tol_scale * trace / N, tested by a shifted
    /// Cholesky factorization.
    bool positive_semidefinite(double tol_scale = 1e-9) const;
};

/// Right-hand side of the covariance flow,
///   dS/dt = -A S - S A^T + 2 gamma Sigma(S^p),
/// with A = [[0, -I], [omega0^2 I - Lap, gamma I]] and Sigma keeping the
/// diagonal of the momentum block.
CovMatrix generator_drift(const CovMatrix& S, const GeneratorParams& params);

struct EvolveOptions {
    double dt = 0.0;          // 0 -> default 0.1 / (3 (omega0^2 + 2) + gamma)
    int check_interval = 100; // symmetry/PSD/energy checks every this many steps
    double energy_tol = 1e-8; // relative drift triggering step-size rejection
    /// Called after every accepted step with the micro time and state.
    std::function<void(double, const CovMatrix&)> observer;
};

double default_cov_dt(const GeneratorParams& params);

/// Classic fixed-step 4th-order integration with per-step symmetrization.
CovMatrix evolve_covariance(const CovMatrix& S0, const GeneratorParams& params,
                            double t_micro, const EvolveOptions& opts = {});

/// Equilibrium state: S^p = 2T I, S^q = 2T (omega0^2 - Lap)^{-1}, S^qp = 0.
/// The generator drift of the result vanishes.
CovMatrix gibbs_covariance(const GeneratorParams& params, double temperature);

/// e_x = p_xx/2 + (q_xx - 2 q_{x,x-1} + q_{x-1,x-1})/2 + omega0^2 q_xx / 2.
std::vector<double> energy_profile_from_cov(const CovMatrix& S, double omega0);

double total_energy_from_cov(const CovMatrix& S, double omega0);

/// B_{x,y} = sum_{j,j'} Phi(mu_j, mu_{j'}) F_{j,j'} psi_j(x) psi_{j'}(y)
/// with F_{j,j'} = N^{-1/2} sum_y psi^*_{j+j'}(y) S^p_{y,y}. Real output.
Eigen::MatrixXd assemble_B(const std::vector<double>& momentum_diagonal,
                           const GeneratorParams& params);

} // namespace chainheat

#endif
