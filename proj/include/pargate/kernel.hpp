#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "pargate/chain.hpp"
#include "pargate/common.hpp"

namespace pargate {

// Uniform segmentation of the gate window [0, tau]. Boundaries computed as
// s*tau/S (not accumulated) so spacing is exact.
struct SegmentGrid {
    double tau = 0.0;
    int n_segments = 0;

    double boundary(int s) const { return s * tau / n_segments; }
    double width() const { return tau / n_segments; }

    void validate() const {
        if (!(tau > 0.0)) throw ConfigError("tau must be positive");
        if (n_segments < 1) throw ConfigError("n_segments must be >= 1");
    }
};

// Signed segment Rabi frequencies, one vector per entangling pair (both ions
// of a pair share the pulse; negative values encode a pi beatnote phase flip).
struct AmplitudeVector {
    std::vector<std::array<int, 2>> pairs;  // 0-based ion indices
    std::vector<Eigen::VectorXd> omegas;    // per pair, length S, rad/s

    int pair_of(int ion) const {
        for (size_t p = 0; p < pairs.size(); ++p)
            if (pairs[p][0] == ion || pairs[p][1] == ion) return int(p);
        throw ConfigError("ion is not involved in any pair");
    }
};

namespace detail {

// phi1(z) = (e^z - 1)/z, series branch near zero.
inline cplx phi1(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx sum = 0.0, term = 1.0;
        for (int k = 0; k < 20; ++k) {
            term /= double(k + 1);  // term = z^k/(k+1)! after multiply below
            sum += term;
            term *= z;
        }
        return sum;
    }
    return (std::exp(z) - 1.0) / z;
}

// Integral of e^{i a t} over [u0, u1].
inline cplx seg_exp(double a, double u0, double u1) {
    const double h = u1 - u0;
    return std::exp(cplx(0.0, a * u0)) * h * phi1(cplx(0.0, a * h));
}

// psi(A, B) = (phi1(A+B) - phi1(B)) / A with a series branch for small A:
// sum_{m>=1} A^{m-1}/m! * phi1^{(m)}(B), phi1^{(m)}(B) = sum_k B^k/(k!(k+m+1)).
inline cplx psi(cplx A, cplx B) {
    if (std::abs(A) > 1e-3 * std::max(1.0, std::abs(B)))
        return (phi1(A + B) - phi1(B)) / A;
    cplx total = 0.0;
    double mfact = 1.0;
    cplx Apow = 1.0;
    for (int m = 1; m <= 8; ++m) {
        mfact *= m;
        cplx deriv = 0.0, Bpow = 1.0;
        double kfact = 1.0;
        for (int k = 0; k < 30; ++k) {
            deriv += Bpow / (kfact * double(k + m + 1));
            Bpow *= B;
            kfact *= double(k + 1);
        }
        total += Apow / mfact * deriv;
        Apow *= A;
    }
    return total;
}

// Double integral of e^{i p t + i q t'} over the triangle u0 <= t <= t' <= u1.
inline cplx tri_exp(double p, double q, double u0, double u1) {
    const double h = u1 - u0;
    return std::exp(cplx(0.0, (p + q) * u0)) * h * h *
           psi(cplx(0.0, p * h), cplx(0.0, q * h));
}

// Integral of sin(mu t) e^{i w t} over [u0, u1] (unit coupling).
inline cplx spin_motion_seg(double mu, double w, double u0, double u1) {
    return (seg_exp(w + mu, u0, u1) - seg_exp(w - mu, u0, u1)) / cplx(0.0, 2.0);
}

// Double integral of sin(mu t) sin(mu t') sin(w (t' - t)) over
// [a0,a1] x [b0,b1] with the a-segment strictly earlier (rectangle case).
inline double spin_spin_rect(double mu, double w, double a0, double a1,
                             double b0, double b1) {
    cplx total = 0.0;
    for (int rho : {1, -1}) {
        const cplx xa = seg_exp(mu - rho * w, a0, a1) - seg_exp(-mu - rho * w, a0, a1);
        const cplx xb = seg_exp(mu + rho * w, b0, b1) - seg_exp(-mu + rho * w, b0, b1);
        total += double(rho) * xa * xb;
    }
    return (cplx(0.0, 1.0) / 8.0 * total).real();
}

// Same integrand over the triangle u0 <= t <= t' <= u1 (diagonal case).
inline double spin_spin_diag(double mu, double w, double u0, double u1) {
    cplx total = 0.0;
    for (int s : {1, -1})
        for (int sp : {1, -1})
            for (int rho : {1, -1})
                total += double(s * sp * rho) *
                         tri_exp(s * mu - rho * w, sp * mu + rho * w, u0, u1);
    return (cplx(0.0, 1.0) / 8.0 * total).real();
}

}  // namespace detail

// Pre-computed constraint matrices for a detuning and segment grid.
// c_mats[p] is S x N complex for involved ion p: alpha_{i,k} = sum_s Omega_s C(s,k).
// d_mats holds an S x S real matrix per unordered involved-ion pair; time
// ordering is baked in one-sidedly: rows index the earlier segment s, columns
// the later segment s', entries with s > s' are zero.
struct ConstraintSystem {
    double mu = 0.0;
    SegmentGrid grid;
    std::vector<int> ions;                  // involved ions, 0-based
    Eigen::VectorXd mode_freqs;             // rad/s, copied from the chain
    Eigen::MatrixXd eta;                    // n_involved x N couplings
    std::vector<Eigen::MatrixXcd> c_mats;   // per involved ion
    std::vector<Eigen::MatrixXd> d_mats;    // per unordered position pair
    std::vector<Eigen::MatrixXd> d_syms;    // (D + D^T)/2, cached for evaluation

    int position_of(int ion) const {
        for (size_t p = 0; p < ions.size(); ++p)
            if (ions[p] == ion) return int(p);
        throw ConfigError("ion not involved in this system");
    }
    int pair_index(int pa, int pb) const {
        if (pa > pb) std::swap(pa, pb);
        const int n = int(ions.size());
        return pa * (2 * n - pa - 1) / 2 + (pb - pa - 1);
    }
    const Eigen::MatrixXd& d(int ion_a, int ion_b) const {
        return d_mats[pair_index(position_of(ion_a), position_of(ion_b))];
    }
    const Eigen::MatrixXd& d_sym(int ion_a, int ion_b) const {
        return d_syms[pair_index(position_of(ion_a), position_of(ion_b))];
    }
};

inline ConstraintSystem build_system(const ChainSpec& chain,
                                     const std::vector<int>& involved_ions,
                                     double mu, const SegmentGrid& grid) {
    grid.validate();
    const int n_inv = int(involved_ions.size());
    const int n_modes = int(chain.mode_freqs.size());
    for (int p = 0; p < n_inv; ++p) {
        if (involved_ions[p] < 0 || involved_ions[p] >= chain.n_ions)
            throw ConfigError("involved ion index out of range");
        for (int q = p + 1; q < n_inv; ++q)
            if (involved_ions[p] == involved_ions[q])
                throw ConfigError("duplicate involved ion");
    }
    for (int k = 0; k < n_modes; ++k)
        if (std::abs(mu - chain.mode_freqs[k]) < 1e-6)
            throw ConfigError("detuning coincides with mode " + std::to_string(k + 1));

    ConstraintSystem sys;
    sys.mu = mu;
    sys.grid = grid;
    sys.ions = involved_ions;
    sys.mode_freqs = chain.mode_freqs;
    sys.eta.resize(n_inv, n_modes);
    for (int p = 0; p < n_inv; ++p)
        sys.eta.row(p) = chain.lamb_dicke.row(involved_ions[p]);
    const int S = grid.n_segments;

    // Spin-motion matrices.
    Eigen::MatrixXcd base(S, n_modes);  // unit-coupling segment integrals
    for (int s = 0; s < S; ++s)
        for (int k = 0; k < n_modes; ++k)
            base(s, k) = detail::spin_motion_seg(mu, chain.mode_freqs[k],
                                                 grid.boundary(s), grid.boundary(s + 1));
    sys.c_mats.reserve(n_inv);
    for (int p = 0; p < n_inv; ++p) {
        Eigen::MatrixXcd c = base;
        for (int k = 0; k < n_modes; ++k)
            c.col(k) *= chain.lamb_dicke(involved_ions[p], k);
        sys.c_mats.push_back(std::move(c));
    }

    // Per-mode spin-spin kernels, shared across ion pairs.
    std::vector<Eigen::MatrixXd> kernels(n_modes, Eigen::MatrixXd::Zero(S, S));
    for (int k = 0; k < n_modes; ++k) {
        const double w = chain.mode_freqs[k];
        for (int a = 0; a < S; ++a) {
            kernels[k](a, a) = detail::spin_spin_diag(mu, w, grid.boundary(a),
                                                      grid.boundary(a + 1));
            for (int b = a + 1; b < S; ++b)
                kernels[k](a, b) = detail::spin_spin_rect(
                    mu, w, grid.boundary(a), grid.boundary(a + 1),
                    grid.boundary(b), grid.boundary(b + 1));
        }
    }
    for (int pa = 0; pa < n_inv; ++pa) {
        for (int pb = pa + 1; pb < n_inv; ++pb) {
            Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(S, S);
            for (int k = 0; k < n_modes; ++k)
                dmat += 2.0 * chain.lamb_dicke(involved_ions[pa], k) *
                        chain.lamb_dicke(involved_ions[pb], k) * kernels[k];
            sys.d_mats.push_back(dmat);
            sys.d_syms.push_back(0.5 * (dmat + dmat.transpose()));
        }
    }
    return sys;
}

// Accumulated displacement of (ion, mode) at gate end for the pulse of the
// pair containing the ion.
inline cplx alpha_of(const ConstraintSystem& sys, const AmplitudeVector& amps,
                     int ion, int mode) {
    const Eigen::VectorXd& omega = amps.omegas[amps.pair_of(ion)];
    if (omega.size() != sys.grid.n_segments)
        throw ConfigError("amplitude vector length does not match grid");
    const Eigen::MatrixXcd& c = sys.c_mats[sys.position_of(ion)];
    cplx a = 0.0;
    for (int s = 0; s < sys.grid.n_segments; ++s) a += omega[s] * c(s, mode);
    return a;
}

// Entangling angle chi for an (ordered-irrelevant) ion pair. Cross pairs mix
// the two pairs' amplitude vectors through the symmetrized kernel; for a
// same-pair query this equals the one-sided quadratic form exactly.
inline double chi_of(const ConstraintSystem& sys, const AmplitudeVector& amps,
                     int ion_a, int ion_b) {
    const Eigen::VectorXd& oa = amps.omegas[amps.pair_of(ion_a)];
    const Eigen::VectorXd& ob = amps.omegas[amps.pair_of(ion_b)];
    return oa.dot(sys.d_sym(ion_a, ion_b) * ob);
}

// alpha_{i,k}(t) sampled at n_samples uniform times in [0, tau]. Full
// segments reuse the stored C entries; the partial head of the current
// segment is integrated in closed form.
inline std::vector<cplx> trajectory(const ConstraintSystem& sys,
                                    const AmplitudeVector& amps, int ion,
                                    int mode, int n_samples) {
    if (n_samples < 2) throw ConfigError("trajectory needs n_samples >= 2");
    const Eigen::VectorXd& omega = amps.omegas[amps.pair_of(ion)];
    const int pos = sys.position_of(ion);
    const Eigen::MatrixXcd& c = sys.c_mats[pos];
    const double eta_ik = sys.eta(pos, mode);
    const double w = sys.mode_freqs[mode];
    const int S = sys.grid.n_segments;

    std::vector<cplx> path(n_samples);
    for (int m = 0; m < n_samples; ++m) {
        const double t = sys.grid.tau * m / (n_samples - 1);
        cplx a = 0.0;
        for (int s = 0; s < S; ++s) {
            const double u0 = sys.grid.boundary(s), u1 = sys.grid.boundary(s + 1);
            if (t >= u1) {
                a += omega[s] * c(s, mode);
            } else {
                if (t > u0)
                    a += omega[s] * eta_ik * detail::spin_motion_seg(sys.mu, w, u0, t);
                break;
            }
        }
        path[m] = a;
    }
    return path;
}

}  // namespace pargate
