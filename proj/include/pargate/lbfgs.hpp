#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>

#include "pargate/common.hpp"

namespace pargate {

struct LbfgsOptions {
    int max_iterations = 5000;
    int history = 20;
    double grad_tol_rel = 1e-9;   // vs. initial gradient norm
    double f_tol = 1e-12;         // objective decrease over the window below
    int f_tol_window = 5;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with two-loop recursion and Armijo backtracking.
// fg(x, grad) must fill grad and return the objective value.
inline LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
    Eigen::VectorXd x, const LbfgsOptions& opt = {}) {
    const int n = int(x.size());
    Eigen::VectorXd g(n), g_new(n);
    double f = fg(x, g);
    const double g0_norm = std::max(g.norm(), 1e-300);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::deque<double> f_hist;

    LbfgsResult res;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        if (g.norm() < opt.grad_tol_rel * g0_norm) {
            res.converged = true;
            res.iterations = iter;
            break;
        }
        f_hist.push_back(f);
        if (int(f_hist.size()) > opt.f_tol_window + 1) f_hist.pop_front();
        if (int(f_hist.size()) == opt.f_tol_window + 1 &&
            f_hist.front() - f < opt.f_tol * std::max(1.0, std::abs(f))) {
            res.converged = true;
            res.iterations = iter;
            break;
        }

        // Two-loop recursion for the search direction.
        Eigen::VectorXd q = g;
        const int m = int(s_hist.size());
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (m > 0) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;
        double dg = dir.dot(g);
        if (!(dg < 0.0)) {  // not a descent direction; fall back to steepest
            dir = -g;
            dg = -g.squaredNorm();
        }

        // Armijo backtracking.
        double step = 1.0;
        const double c1 = 1e-4;
        double f_new = f;
        Eigen::VectorXd x_new;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + c1 * step * dg) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            res.iterations = iter;
            break;  // line search failed; report unconverged at current point
        }

        Eigen::VectorXd s_vec = x_new - x;
        Eigen::VectorXd y_vec = g_new - g;
        const double sy = s_vec.dot(y_vec);
        if (sy > 1e-14 * s_vec.norm() * y_vec.norm()) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho_hist.push_back(1.0 / sy);
            if (int(s_hist.size()) > opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        g = g_new;
        f = f_new;
        res.iterations = iter + 1;
    }
    res.x = std::move(x);
    res.f = f;
    res.grad_norm = g.norm();
    return res;
}

}  // namespace pargate
