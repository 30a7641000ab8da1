#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "pargate/common.hpp"

namespace pargate {

// Motional structure of the ion chain: transverse mode frequencies and
// Lamb-Dicke couplings. Immutable after construction.
struct ChainSpec {
    int n_ions = 0;
    Eigen::VectorXd mode_freqs;   // rad/s, sorted descending (mode 1 = common)
    Eigen::MatrixXd lamb_dicke;   // n_ions x n_ions, eta(i,k), dimensionless
    Eigen::VectorXd nbar;         // mean phonon number per mode
    double qubit_splitting = 0.0; // rad/s, informational

    void validate() const {
        const int n = n_ions;
        if (n <= 0) throw ConfigError("n_ions must be positive");
        if (mode_freqs.size() != n)
            throw ConfigError("mode_freqs size does not match n_ions");
        if (lamb_dicke.rows() != n || lamb_dicke.cols() != n)
            throw ConfigError("lamb_dicke must be n_ions x n_ions");
        if (nbar.size() != n) throw ConfigError("nbar size does not match n_ions");
        for (int k = 0; k < n; ++k) {
            if (!(mode_freqs[k] > 0.0))
                throw ConfigError("mode frequencies must be strictly positive");
            if (k > 0 && mode_freqs[k] > mode_freqs[k - 1])
                throw ConfigError("mode frequencies must be sorted descending");
            if (nbar[k] < 0.0) throw ConfigError("nbar must be non-negative");
        }
        if (!lamb_dicke.allFinite()) throw ConfigError("lamb_dicke has non-finite entries");
    }
};

namespace detail {

// Dimensionless equilibrium positions of a harmonically confined Coulomb
// chain, in units of (e^2 / (4 pi eps0 m wax^2))^(1/3). Newton iteration on
// the force balance.
inline Eigen::VectorXd equilibrium_positions(int n) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i)
        u[i] = (n == 1) ? 0.0 : (-1.0 + 2.0 * i / (n - 1)) * 0.6 * std::pow(n, 0.6);

    for (int iter = 0; iter < 200; ++iter) {
        Eigen::VectorXd f = u;
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d = u[i] - u[j];
                f[i] -= (d > 0 ? 1.0 : -1.0) / (d * d);
                const double c = 2.0 / std::abs(d * d * d);
                J(i, i) += c;
                J(i, j) -= c;
            }
        }
        const Eigen::VectorXd step = J.ldlt().solve(f);
        u -= step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-14) {
            std::sort(u.data(), u.data() + n);
            return u;
        }
    }
    throw SolveError("equilibrium position Newton iteration did not converge");
}

}  // namespace detail

// Transverse normal modes of an n-ion linear chain plus Lamb-Dicke matrix.
// eta(i,k) = b(i,k) * k_eff * sqrt(hbar / (2 m w_k)), eigenvectors b
// orthonormal, modes sorted descending (common mode first).
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> compute_transverse_modes(
    int n_ions, double axial_freq, double transverse_freq, double mass, double k_eff) {
    if (n_ions <= 0) throw ConfigError("n_ions must be positive");
    if (axial_freq <= 0 || transverse_freq <= 0)
        throw ConfigError("trap frequencies must be positive");
    // Linear-chain (zigzag) stability threshold.
    const double critical = 0.77 * std::pow(double(n_ions), 0.86);
    if (transverse_freq / axial_freq <= critical)
        throw ConfigError("transverse/axial ratio below linear-chain stability threshold");

    const Eigen::VectorXd u = detail::equilibrium_positions(n_ions);
    const double ratio2 = (transverse_freq / axial_freq) * (transverse_freq / axial_freq);
    Eigen::MatrixXd A(n_ions, n_ions);
    for (int i = 0; i < n_ions; ++i) {
        double diag = ratio2;
        for (int p = 0; p < n_ions; ++p) {
            if (p == i) continue;
            const double inv3 = 1.0 / std::pow(std::abs(u[i] - u[p]), 3);
            A(i, p) = inv3;
            diag -= inv3;
        }
        A(i, i) = diag;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    Eigen::VectorXd w(n_ions);
    Eigen::MatrixXd b(n_ions, n_ions);
    // eigh returns ascending eigenvalues; we want frequencies descending.
    for (int k = 0; k < n_ions; ++k) {
        const double lam = es.eigenvalues()[n_ions - 1 - k];
        if (lam <= 0) throw ConfigError("non-positive transverse mode (unstable chain)");
        w[k] = axial_freq * std::sqrt(lam);
        b.col(k) = es.eigenvectors().col(n_ions - 1 - k);
        // Fix eigenvector sign for determinism: first nonzero component positive.
        for (int i = 0; i < n_ions; ++i) {
            if (std::abs(b(i, k)) > 1e-12) {
                if (b(i, k) < 0) b.col(k) = -b.col(k);
                break;
            }
        }
    }
    Eigen::MatrixXd eta(n_ions, n_ions);
    for (int k = 0; k < n_ions; ++k)
        eta.col(k) = b.col(k) * (k_eff * std::sqrt(hbar / (2.0 * mass * w[k])));
    return {w, eta};
}

}  // namespace pargate
