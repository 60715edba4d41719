#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "bgkit/certificate.hpp"
#include "bgkit/grid.hpp"

namespace bgkit {

namespace detail {

// Central differences inside, one-sided at the box edges. Near-equilibrium
// fields are flat there, so the first-order edge bias sits below quadrature error.
inline void gradient_at(const DensityField& f, int i, int j, double& gx, double& gy) {
    const auto& g = *f.grid;
    const auto& h = f.h;
    if (i == 0)
        gx = (h[g.idx(1, j)] - h[g.idx(0, j)]) / g.dx;
    else if (i == g.Nx - 1)
        gx = (h[g.idx(i, j)] - h[g.idx(i - 1, j)]) / g.dx;
    else
        gx = (h[g.idx(i + 1, j)] - h[g.idx(i - 1, j)]) / (2.0 * g.dx);
    if (j == 0)
        gy = (h[g.idx(i, 1)] - h[g.idx(i, 0)]) / g.dy;
    else if (j == g.Ny - 1)
        gy = (h[g.idx(i, j)] - h[g.idx(i, j - 1)]) / g.dy;
    else
        gy = (h[g.idx(i, j + 1)] - h[g.idx(i, j - 1)]) / (2.0 * g.dy);
}

}  // namespace detail

// Twisted Fisher information: integral of (grad h)^T M (grad h) / h against
// the grid measure, with the denominator floored at floor_eps rather than
// skipping nodes (keeps the estimator monotone in h).
inline double fisher(const DensityField& f, const TwistMatrix& M, double floor_eps = 1e-30) {
    const auto& g = *f.grid;
    return pairwise_sum(std::size_t{0}, g.size(), [&](std::size_t k) {
        const int i = static_cast<int>(k % g.Nx);
        const int j = static_cast<int>(k / g.Nx);
        double gx, gy;
        detail::gradient_at(f, i, j, gx, gy);
        const double quad = gx * gx + 2.0 * M.b * gx * gy + M.a * gy * gy;
        return g.weight(i, j) * quad / std::max(f.h[k], floor_eps);
    });
}

/// Plain Fisher information (identity twist, same code path).
inline double fisher(const DensityField& f, double floor_eps = 1e-30) {
    return fisher(f, TwistMatrix::identity(), floor_eps);
}

/// Relative entropy against the grid measure, with 0 log 0 = 0.
inline double relative_entropy(const DensityField& f) {
    const auto& g = *f.grid;
    return pairwise_sum(std::size_t{0}, g.size(), [&](std::size_t k) {
        const double h = f.h[k];
        if (h <= 0.0) return 0.0;
        return g.wx[k % g.Nx] * g.wy[k / g.Nx] * h * std::log(h);
    });
}

/// Squared L2(mu) distance to equilibrium: integral of (h - 1)^2.
inline double l2_distance(const DensityField& f) {
    const auto& g = *f.grid;
    return pairwise_sum(std::size_t{0}, g.size(), [&](std::size_t k) {
        const double r = f.h[k] - 1.0;
        return g.wx[k % g.Nx] * g.wy[k / g.Nx] * r * r;
    });
}

/// First and second moments of the field measure h d(mu).
struct PhaseMoments {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
};

inline PhaseMoments field_moments(const DensityField& f) {
    const auto& g = *f.grid;
    auto moment = [&](auto&& fn) {
        return pairwise_sum(std::size_t{0}, g.size(), [&](std::size_t k) {
            const int i = static_cast<int>(k % g.Nx);
            const int j = static_cast<int>(k / g.Nx);
            return g.weight(i, j) * f.h[k] * fn(g.xs[i], g.ys[j]);
        });
    };
    PhaseMoments m;
    m.mean(0) = moment([](double x, double) { return x; });
    m.mean(1) = moment([](double, double y) { return y; });
    m.second(0, 0) = moment([](double x, double) { return x * x; });
    m.second(1, 1) = moment([](double, double y) { return y * y; });
    m.second(0, 1) = m.second(1, 0) = moment([](double x, double y) { return x * y; });
    return m;
}

// Exact twisted Fisher information of the ratio N(m, S) / N(0, Sinf):
// with A = Sinf^-1 - S^-1, the value is tr(M A S A) + (Sinf^-1 m)^T M (Sinf^-1 m).
inline double gaussian_fisher_oracle(const Eigen::VectorXd& m, const Eigen::MatrixXd& S,
                                     const Eigen::MatrixXd& Sinf, const Eigen::MatrixXd& M) {
    Eigen::LLT<Eigen::MatrixXd> ls(S), li(Sinf);
    require(ls.info() == Eigen::Success && li.info() == Eigen::Success,
            "gaussian_fisher_oracle: covariance matrices must be positive definite");
    const Eigen::MatrixXd A = Sinf.inverse() - S.inverse();
    const Eigen::VectorXd w = Sinf.inverse() * m;
    return (M * A * S * A).trace() + w.dot(M * w);
}

/// KL divergence of N(m, S) from N(0, Sinf) in closed form.
inline double gaussian_kl_oracle(const Eigen::VectorXd& m, const Eigen::MatrixXd& S,
                                 const Eigen::MatrixXd& Sinf) {
    Eigen::LLT<Eigen::MatrixXd> ls(S), li(Sinf);
    require(ls.info() == Eigen::Success && li.info() == Eigen::Success,
            "gaussian_kl_oracle: covariance matrices must be positive definite");
    const Eigen::MatrixXd W = Sinf.inverse() * S;
    const double k = static_cast<double>(m.size());
    return 0.5 * (W.trace() - k - std::log(W.determinant()) + m.dot(Sinf.inverse() * m));
}

/// Dense 2d x 2d matrix of the block twist, for feeding the Gaussian oracle.
inline Eigen::MatrixXd twist_dense(const TwistMatrix& M) {
    const int d = M.d;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    for (int k = 0; k < d; ++k) {
        out(k, k) = 1.0;
        out(k, d + k) = out(d + k, k) = M.b;
        out(d + k, d + k) = M.a;
    }
    return out;
}

// Time series of the decay functionals along a run, plus the final fitted
// rates. Values are recorded at the observation cadence.
struct DecaySeries {
    std::vector<double> t;
    std::vector<double> fisher_plain;  // I
    std::vector<double> fisher_twist;  // I_M
    std::vector<double> entropy;
    std::vector<double> l2;
    std::vector<double> mass;
};

struct FitResult {
    double rate = 0.0;       // minus the log-linear slope
    double intercept = 0.0;  // fitted log-value at t = 0
    double rms_residual = 0.0;
    int n = 0;
    double t_lo = 0.0, t_hi = 0.0;
};

// Least-squares slope of log(value) against t over [t_lo, t_hi].
inline FitResult fit_decay_rate(std::span<const double> t, std::span<const double> v, double t_lo,
                                double t_hi) {
    require(t.size() == v.size(), "fit_decay_rate: size mismatch");
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        if (!(v[i] > 0.0))
            throw std::invalid_argument("fit_decay_rate: nonpositive value in fit window");
        ts.push_back(t[i]);
        ys.push_back(std::log(v[i]));
    }
    require(ts.size() >= 2, "fit_decay_rate: need at least two points in the window");
    const auto n = ts.size();
    double st = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        st += ts[i];
        sy += ys[i];
    }
    const double mt = st / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (ts[i] - mt) * (ts[i] - mt);
        sxy += (ts[i] - mt) * (ys[i] - my);
    }
    require(sxx > 0.0, "fit_decay_rate: degenerate time window");
    const double slope = sxy / sxx;
    FitResult r;
    r.rate = -slope;
    r.intercept = my - slope * mt;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = ys[i] - (r.intercept + slope * ts[i]);
        ss += res * res;
    }
    r.rms_residual = std::sqrt(ss / n);
    r.n = static_cast<int>(n);
    r.t_lo = ts.front();
    r.t_hi = ts.back();
    return r;
}

// Hypocoercive decay is not exponential at a constant rate early on; the
// default window [0.2 T, 0.8 T] skips the initial transient and the tail.
inline FitResult fit_decay_rate(std::span<const double> t, std::span<const double> v) {
    require(!t.empty(), "fit_decay_rate: empty series");
    const double T = t.back();
    return fit_decay_rate(t, v, 0.2 * T, 0.8 * T);
}

}  // namespace bgkit
