#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bgkit/common.hpp"
#include "bgkit/model.hpp"
#include "bgkit/rng.hpp"

namespace bgkit {

// Ensemble for the jump process: Hamiltonian flight between velocity
// refreshes. Each particle owns an RNG substream derived from (master seed,
// particle index), so trajectories do not depend on how particles are
// partitioned across workers.
struct ParticleEnsemble {
    int n = 0;
    int d = 1;
    double time = 0.0;
    std::vector<double> x, y;  // n*d, particle-major
    std::vector<RngStream> streams;
    std::vector<double> next_jump;  // absolute time of the next refresh
    std::uint64_t master_seed = 0;

    std::span<double> pos(int p) { return {x.data() + static_cast<std::size_t>(p) * d, static_cast<std::size_t>(d)}; }
    std::span<double> vel(int p) { return {y.data() + static_cast<std::size_t>(p) * d, static_cast<std::size_t>(d)}; }
};

inline double jump_rate(const ModelParams& p) {
    return p.kernel == Kernel::Q2 ? p.lambda * p.d : p.lambda;
}

/// Gaussian initial ensemble N(m0, cov0) on phase space (z = (x, y), dim 2d).
inline ParticleEnsemble make_gaussian_ensemble(const ModelParams& p, int n,
                                               const Eigen::VectorXd& m0,
                                               const Eigen::MatrixXd& cov0, std::uint64_t seed) {
    require_valid(p);
    require(n >= 1, "make_gaussian_ensemble: need n >= 1");
    const int d = p.d;
    require(m0.size() == 2 * d && cov0.rows() == 2 * d && cov0.cols() == 2 * d,
            "make_gaussian_ensemble: phase dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(cov0);
    require(llt.info() == Eigen::Success,
            "make_gaussian_ensemble: covariance must be positive definite");
    const Eigen::MatrixXd L = llt.matrixL();

    ParticleEnsemble e;
    e.n = n;
    e.d = d;
    e.master_seed = seed;
    e.x.resize(static_cast<std::size_t>(n) * d);
    e.y.resize(static_cast<std::size_t>(n) * d);
    e.streams.reserve(n);
    e.next_jump.resize(n);
    const double rate = jump_rate(p);
    Eigen::VectorXd xi(2 * d), z(2 * d);
    for (int pi = 0; pi < n; ++pi) {
        e.streams.emplace_back(seed, static_cast<std::uint64_t>(pi));
        auto& rng = e.streams.back();
        for (int k = 0; k < 2 * d; ++k) xi(k) = rng.gaussian();
        z = m0 + L * xi;
        for (int k = 0; k < d; ++k) {
            e.x[static_cast<std::size_t>(pi) * d + k] = z(k);
            e.y[static_cast<std::size_t>(pi) * d + k] = z(d + k);
        }
        e.next_jump[pi] = rng.exponential(rate);
    }
    return e;
}

// Exact harmonic flight: per coordinate, rotation at angular rate sqrt(rho).
// Conserves rho|x|^2 + |y|^2 to machine precision.
inline void flow_exact_harmonic(std::span<double> x, std::span<double> y, double rho, double t) {
    require(rho > 0.0, "flow_exact_harmonic: rho must be > 0");
    const double w = std::sqrt(rho);
    const double c = std::cos(w * t), s = std::sin(w * t);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k], y0 = y[k];
        x[k] = x0 * c + (y0 / w) * s;
        y[k] = -w * x0 * s + y0 * c;
    }
}

/// Model-checked wrapper: the closed form only applies to the pure quadratic.
inline void flow_exact_harmonic(std::span<double> x, std::span<double> y, const ModelParams& p,
                                double t) {
    require(p.delta == 0.0, "flow_exact_harmonic: refused for delta != 0 (no closed form)");
    flow_exact_harmonic(x, y, p.rho, t);
}

/// Position-velocity leapfrog with force -grad U; second order, symplectic.
inline void flow_verlet(std::span<double> x, std::span<double> y, const ModelParams& p, double dt,
                        long n_steps) {
    require(dt > 0.0, "flow_verlet: dt must be > 0");
    const std::size_t d = x.size();
    std::vector<double> f(d);
    potential_grad(p, {x.data(), d}, f);
    for (long s = 0; s < n_steps; ++s) {
        for (std::size_t k = 0; k < d; ++k) y[k] -= 0.5 * dt * f[k];
        for (std::size_t k = 0; k < d; ++k) x[k] += dt * y[k];
        potential_grad(p, {x.data(), d}, f);
        for (std::size_t k = 0; k < d; ++k) y[k] -= 0.5 * dt * f[k];
    }
}

namespace detail {

/// Flight over a duration: exact rotation when the potential is purely quadratic.
inline void flight(const ModelParams& p, std::span<double> x, std::span<double> y, double duration,
                   double dt_flight) {
    if (duration <= 0.0) return;
    if (p.delta == 0.0) {
        flow_exact_harmonic(x, y, p.rho, duration);
        return;
    }
    const long n = std::max(1L, static_cast<long>(std::ceil(duration / dt_flight)));
    flow_verlet(x, y, p, duration / n, n);
}

/// Velocity refresh: full redraw for Q1, one uniformly chosen coordinate for Q2.
inline void refresh(const ModelParams& p, RngStream& rng, std::span<double> y) {
    if (p.kernel == Kernel::Q2 && p.d > 1) {
        const int k = std::min(p.d - 1, static_cast<int>(rng.uniform() * p.d));
        y[k] = p.sigma * rng.gaussian();
    } else if (p.kernel == Kernel::Q2) {
        y[0] = p.sigma * rng.gaussian();
    } else {
        for (auto& yk : y) yk = p.sigma * rng.gaussian();
    }
}

// Pairwise reduction of an m-vector over [lo, hi); fixed association, so the
// result is independent of worker partitioning.
template <class F>
std::vector<double> pairwise_sum_vec(std::size_t lo, std::size_t hi, std::size_t m, F&& term) {
    const std::size_t n = hi - lo;
    if (n <= 64) {
        std::vector<double> acc(m, 0.0), tmp(m);
        for (std::size_t i = lo; i < hi; ++i) {
            term(i, tmp);
            for (std::size_t k = 0; k < m; ++k) acc[k] += tmp[k];
        }
        return acc;
    }
    const std::size_t mid = lo + n / 2;
    auto a = pairwise_sum_vec(lo, mid, m, term);
    const auto b = pairwise_sum_vec(mid, hi, m, term);
    for (std::size_t k = 0; k < m; ++k) a[k] += b[k];
    return a;
}

}  // namespace detail

/// Empirical or exact first/second moments at one time.
struct MomentState {
    double time = 0.0;
    Eigen::VectorXd mean;    // 2d
    Eigen::MatrixXd second;  // 2d x 2d, E[z z^T]
};

struct MomentSeries {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> mean;
    std::vector<Eigen::MatrixXd> second;
    std::vector<Eigen::VectorXd> mean_se;    // empty for exact series
    std::vector<Eigen::MatrixXd> second_se;  // empty for exact series

    bool has_se() const { return !mean_se.empty(); }
};

namespace detail {

/// Moments with standard errors, reduced pairwise over the particle index.
inline void record_moments(const ParticleEnsemble& e, MomentSeries& out) {
    const int d = e.d;
    const int dim = 2 * d;
    const int n_pairs = dim * (dim + 1) / 2;
    const std::size_t m = 2 * (dim + n_pairs);  // sums and squared sums
    std::vector<double> z(dim);
    auto sums = pairwise_sum_vec(0, static_cast<std::size_t>(e.n), m,
                                 [&](std::size_t p, std::vector<double>& tmp) {
        for (int k = 0; k < d; ++k) {
            const double xv = e.x[p * d + k], yv = e.y[p * d + k];
            if (!std::isfinite(xv) || !std::isfinite(yv))
                throw NumericalAbort("simulate: non-finite particle state at t = " +
                                     std::to_string(e.time));
            tmp[k] = xv;
            tmp[d + k] = yv;
        }
        std::size_t idx = dim;
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) tmp[idx++] = tmp[a] * tmp[b];
        for (std::size_t k = 0; k < m / 2; ++k) tmp[m / 2 + k] = tmp[k] * tmp[k];
    });

    const double n = static_cast<double>(e.n);
    Eigen::VectorXd mean(dim), mean_se(dim);
    Eigen::MatrixXd second(dim, dim), second_se(dim, dim);
    auto se_of = [&](double sum, double sumsq) {
        const double avg = sum / n;
        const double var = std::max(0.0, sumsq / n - avg * avg);
        return std::sqrt(var / n);
    };
    for (int k = 0; k < dim; ++k) {
        mean(k) = sums[k] / n;
        mean_se(k) = se_of(sums[k], sums[m / 2 + k]);
    }
    std::size_t idx = dim;
    for (int a = 0; a < dim; ++a) {
        for (int b = a; b < dim; ++b, ++idx) {
            second(a, b) = second(b, a) = sums[idx] / n;
            second_se(a, b) = second_se(b, a) = se_of(sums[idx], sums[m / 2 + idx]);
        }
    }
    out.t.push_back(e.time);
    out.mean.push_back(std::move(mean));
    out.second.push_back(std::move(second));
    out.mean_se.push_back(std::move(mean_se));
    out.second_se.push_back(std::move(second_se));
}

}  // namespace detail

struct McOptions {
    double T = 2.0;
    double obs_dt = 0.05;     // observation interval
    double dt_flight = 1e-3;  // leapfrog step when delta > 0 (exact flight otherwise)
    int threads = 1;
};

// Event-driven simulation: exact exponential jump times by inversion,
// deterministic flight between events, velocity refresh at events. Advancing
// a particle consumes only its own substream, so results are bit-identical
// for any worker count.
inline MomentSeries simulate(const ModelParams& p, ParticleEnsemble& e, const McOptions& opt) {
    require_valid(p);
    require(opt.T > 0.0 && opt.obs_dt > 0.0, "simulate: T and obs_dt must be > 0");
    require(opt.dt_flight > 0.0, "simulate: dt_flight must be > 0");
    const double rate = jump_rate(p);
    const long n_obs = std::lround(opt.T / opt.obs_dt);
    require(n_obs >= 1, "simulate: T must cover at least one observation interval");

    MomentSeries out;
    detail::record_moments(e, out);
    for (long j = 1; j <= n_obs; ++j) {
        const double t_obs = static_cast<double>(j) * opt.obs_dt;
        parallel_for(static_cast<std::size_t>(e.n), opt.threads,
                     [&](std::size_t lo, std::size_t hi) {
            for (std::size_t pi = lo; pi < hi; ++pi) {
                const int pp = static_cast<int>(pi);
                double tp = e.time;
                auto xs = e.pos(pp);
                auto ys = e.vel(pp);
                while (e.next_jump[pi] <= t_obs) {
                    detail::flight(p, xs, ys, e.next_jump[pi] - tp, opt.dt_flight);
                    tp = e.next_jump[pi];
                    detail::refresh(p, e.streams[pi], ys);
                    e.next_jump[pi] = tp + e.streams[pi].exponential(rate);
                }
                detail::flight(p, xs, ys, t_obs - tp, opt.dt_flight);
            }
        });
        e.time = t_obs;
        detail::record_moments(e, out);
    }
    return out;
}

// Closed moment system for the unperturbed model, integrated with RK4.
// Flight part: dm = F m, dP = F P + P F^T with F = [[0, I], [-rho I, 0]].
// Jump part at rate lambda per coordinate: cross x-y moments relax at rate
// lambda for both kernels; the velocity block relaxes to sigma^2 I, with
// off-diagonal velocity correlations dying at rate lambda under Q1 but
// 2*lambda under Q2 (two clocks can hit a pair).
inline MomentSeries moment_ode_oracle(const ModelParams& p, const Eigen::VectorXd& m0,
                                      const Eigen::MatrixXd& P0, double T, double obs_dt,
                                      double dt_ode = 1e-3) {
    require_valid(p);
    require(p.delta == 0.0, "moment_ode_oracle: refused for delta != 0 (moments do not close)");
    require(dt_ode > 0.0 && dt_ode <= 1e-3 + 1e-15, "moment_ode_oracle: dt_ode must be in (0, 1e-3]");
    const int d = p.d;
    require(m0.size() == 2 * d && P0.rows() == 2 * d && P0.cols() == 2 * d,
            "moment_ode_oracle: phase dimension mismatch");
    const double s2 = p.sigma * p.sigma;

    auto mean_rhs = [&](const Eigen::VectorXd& m) {
        Eigen::VectorXd dm(2 * d);
        dm.head(d) = m.tail(d);
        dm.tail(d) = -p.rho * m.head(d) - p.lambda * m.tail(d);
        return dm;
    };
    auto second_rhs = [&](const Eigen::MatrixXd& P) {
        Eigen::MatrixXd fp(2 * d, 2 * d);
        fp.topRows(d) = P.bottomRows(d);
        fp.bottomRows(d) = -p.rho * P.topRows(d);
        Eigen::MatrixXd dP = fp + fp.transpose();
        // jump contribution
        dP.topRightCorner(d, d) -= p.lambda * P.topRightCorner(d, d);
        dP.bottomLeftCorner(d, d) -= p.lambda * P.bottomLeftCorner(d, d);
        if (p.kernel == Kernel::Q1) {
            dP.bottomRightCorner(d, d) += p.lambda * (s2 * Eigen::MatrixXd::Identity(d, d) -
                                                      P.bottomRightCorner(d, d));
        } else {
            for (int a = 0; a < d; ++a) {
                for (int b = 0; b < d; ++b) {
                    const double pab = P(d + a, d + b);
                    dP(d + a, d + b) += (a == b) ? p.lambda * (s2 - pab) : -2.0 * p.lambda * pab;
                }
            }
        }
        return dP;
    };

    MomentSeries out;
    Eigen::VectorXd m = m0;
    Eigen::MatrixXd P = P0;
    const long n_obs = std::lround(T / obs_dt);
    require(n_obs >= 1, "moment_ode_oracle: T must cover at least one observation interval");
    auto record = [&](double t) {
        out.t.push_back(t);
        out.mean.push_back(m);
        out.second.push_back(P);
    };
    record(0.0);
    for (long j = 1; j <= n_obs; ++j) {
        const long n = std::max(1L, static_cast<long>(std::ceil(obs_dt / dt_ode - 1e-9)));
        const double h = obs_dt / static_cast<double>(n);
        for (long s = 0; s < n; ++s) {
            const Eigen::VectorXd k1 = mean_rhs(m);
            const Eigen::VectorXd k2 = mean_rhs(m + 0.5 * h * k1);
            const Eigen::VectorXd k3 = mean_rhs(m + 0.5 * h * k2);
            const Eigen::VectorXd k4 = mean_rhs(m + h * k3);
            const Eigen::MatrixXd K1 = second_rhs(P);
            const Eigen::MatrixXd K2 = second_rhs(P + 0.5 * h * K1);
            const Eigen::MatrixXd K3 = second_rhs(P + 0.5 * h * K2);
            const Eigen::MatrixXd K4 = second_rhs(P + h * K3);
            m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            P += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        }
        record(static_cast<double>(j) * obs_dt);
    }
    return out;
}

struct CompareReport {
    bool pass = false;
    double max_abs_z = 0.0;
    std::size_t n_compared = 0;
    std::vector<std::string> failures;
};

// Per-time z-scores of a deterministic moment series against a Monte Carlo
// one, using the Monte Carlo standard errors. Passes iff all |z| <= z_max.
inline CompareReport compare_pde_mc(const MomentSeries& reference, const MomentSeries& mc,
                                    double z_max = 3.0) {
    require(mc.has_se(), "compare_pde_mc: Monte Carlo series must carry standard errors");
    require(reference.t.size() == mc.t.size(), "compare_pde_mc: observation time grids mismatch");
    for (std::size_t i = 0; i < reference.t.size(); ++i)
        require(std::abs(reference.t[i] - mc.t[i]) <= 1e-9 * (1.0 + std::abs(mc.t[i])),
                "compare_pde_mc: observation time grids mismatch");

    CompareReport rep;
    rep.pass = true;
    auto check = [&](double t, const std::string& name, double ref, double est, double se) {
        const double diff = ref - est;
        const double z = diff == 0.0 ? 0.0 : std::abs(diff) / std::max(se, 1e-300);
        rep.max_abs_z = std::max(rep.max_abs_z, z);
        ++rep.n_compared;
        if (z > z_max) {
            rep.pass = false;
            rep.failures.push_back(name + " at t = " + std::to_string(t) +
                                   ": |z| = " + std::to_string(z));
        }
    };
    for (std::size_t i = 0; i < reference.t.size(); ++i) {
        const int dim = static_cast<int>(reference.mean[i].size());
        for (int k = 0; k < dim; ++k)
            check(reference.t[i], "mean[" + std::to_string(k) + "]", reference.mean[i](k),
                  mc.mean[i](k), mc.mean_se[i](k));
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b)
                check(reference.t[i], "second[" + std::to_string(a) + "," + std::to_string(b) + "]",
                      reference.second[i](a, b), mc.second[i](a, b), mc.second_se[i](a, b));
    }
    return rep;
}

}  // namespace bgkit
