#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bgkit/common.hpp"
#include "bgkit/rng.hpp"

namespace bgkit {

// Bounded-Hessian perturbation of the quadratic confining potential.
// The declared Hessian bound is the pointwise spectral norm of the Hessian,
// supremum over space; it is what enters the decay certificate, and the
// spot-check below only samples it.
class Perturbation {
public:
    enum class Kind { zero, cosine, tabulated };

    using ValueFn = std::function<double(std::span<const double>)>;
    using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

    static Perturbation Zero() { return Perturbation(Kind::zero, 0.0, {}, {}); }

    /// c * sum_i cos(x_i); its Hessian is diag(-c cos x_i), spectral norm |c|.
    static Perturbation Cosine(double amplitude) {
        require(std::abs(amplitude) <= 1.0, "cosine amplitude: |c| must be <= 1");
        return Perturbation(Kind::cosine, amplitude, {}, {});
    }

    /// User-supplied evaluators with a user-declared Hessian spectral bound.
    static Perturbation Tabulated(ValueFn value, GradFn grad, double declared_hessian_bound) {
        require(declared_hessian_bound >= 0.0 && declared_hessian_bound <= 1.0,
                "tabulated perturbation: declared Hessian bound must lie in [0, 1]");
        return Perturbation(Kind::tabulated, declared_hessian_bound, std::move(value), std::move(grad));
    }

    Kind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }

    /// Declared spectral-norm bound on the Hessian.
    double hessian_bound() const {
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::cosine: return std::abs(amplitude_);
            case Kind::tabulated: return amplitude_;
        }
        return 0.0;
    }

    double value(std::span<const double> x) const {
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::cosine: {
                double s = 0.0;
                for (double xi : x) s += std::cos(xi);
                return amplitude_ * s;
            }
            case Kind::tabulated: return value_(x);
        }
        return 0.0;
    }

    void gradient(std::span<const double> x, std::span<double> out) const {
        switch (kind_) {
            case Kind::zero:
                for (auto& g : out) g = 0.0;
                return;
            case Kind::cosine:
                for (std::size_t i = 0; i < x.size(); ++i) out[i] = -amplitude_ * std::sin(x[i]);
                return;
            case Kind::tabulated:
                grad_(x, out);
                return;
        }
    }

private:
    Perturbation(Kind kind, double amplitude, ValueFn value, GradFn grad)
        : kind_(kind), amplitude_(amplitude), value_(std::move(value)), grad_(std::move(grad)) {}

    Kind kind_;
    double amplitude_;  // cosine amplitude, or declared bound for tabulated
    ValueFn value_;
    GradFn grad_;
};

enum class Kernel { Q1, Q2 };

// Full model: U(x) = rho |x|^2/2 + delta*Utilde(x), jump intensity lambda,
// refreshed velocity scale sigma, spatial dimension d. For d = 1 the two
// collision kernels coincide.
struct ModelParams {
    double rho = 1.0;
    double delta = 0.0;
    double lambda = 1.0;
    double sigma = 1.0;
    int d = 1;
    Kernel kernel = Kernel::Q1;
    Perturbation perturbation = Perturbation::Zero();
};

inline std::vector<std::string> validate(const ModelParams& p) {
    std::vector<std::string> errs;
    if (!(p.rho > 0.0) || !std::isfinite(p.rho)) errs.push_back("rho: must be > 0");
    if (!(p.delta >= 0.0) || !std::isfinite(p.delta)) errs.push_back("delta: must be >= 0");
    if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) errs.push_back("lambda: must be >= 0");
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) errs.push_back("sigma: must be > 0");
    if (p.d < 1) errs.push_back("d: must be >= 1");
    return errs;
}

inline void require_valid(const ModelParams& p) {
    auto errs = validate(p);
    if (!errs.empty()) throw std::invalid_argument("invalid model parameters: " + errs.front());
}

/// U(x) = rho |x|^2 / 2 + delta * Utilde(x)
inline double potential_value(const ModelParams& p, std::span<const double> x) {
    require_finite(x, "potential_value");
    double q = 0.0;
    for (double xi : x) q += xi * xi;
    return 0.5 * p.rho * q + p.delta * p.perturbation.value(x);
}

/// grad U = rho x + delta * grad Utilde(x)
inline void potential_grad(const ModelParams& p, std::span<const double> x, std::span<double> out) {
    require_finite(x, "potential_grad");
    p.perturbation.gradient(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = p.rho * x[i] + p.delta * out[i];
}

inline double potential_grad_1d(const ModelParams& p, double x) {
    double g;
    potential_grad(p, {&x, 1}, {&g, 1});
    return g;
}

/// Unnormalized log density of the stationary measure: -(U(x) + |y|^2/2)/sigma^2.
inline double stationary_log_density(const ModelParams& p, std::span<const double> x,
                                     std::span<const double> y) {
    require_finite(x, "stationary_log_density");
    require_finite(y, "stationary_log_density");
    double ke = 0.0;
    for (double yi : y) ke += yi * yi;
    return -(potential_value(p, x) + 0.5 * ke) / (p.sigma * p.sigma);
}

struct HessianCheck {
    double max_spectral_norm = 0.0;  // max over sampled points
    bool within_bound = true;        // max <= 1 + tolerance
};

// Spot-samples the spectral norm of the finite-difference Hessian of Utilde
// over the box [-half_width, half_width]^d. A sampled check, not a proof; the
// declared bound is what the certificate uses.
inline HessianCheck check_hessian_bound(const Perturbation& pert, int d, int sample_count,
                                        double half_width, std::uint64_t seed,
                                        double fd_step = 1e-4, double tolerance = 1e-3) {
    require(sample_count >= 1, "check_hessian_bound: sample_count must be >= 1");
    RngStream rng(seed, 0);
    std::vector<double> x(d), xp(d);
    Eigen::MatrixXd H(d, d);
    double worst = 0.0;
    for (int s = 0; s < sample_count; ++s) {
        for (int i = 0; i < d; ++i) x[i] = (2.0 * rng.uniform() - 1.0) * half_width;
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                auto at = [&](double si, double sj) {
                    xp = x;
                    xp[i] += si * fd_step;
                    xp[j] += sj * fd_step;
                    return pert.value(xp);
                };
                double hij;
                if (i == j) {
                    hij = (at(1, 0) - 2.0 * pert.value(x) + at(-1, 0)) / (fd_step * fd_step);
                } else {
                    hij = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * fd_step * fd_step);
                }
                H(i, j) = H(j, i) = hij;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
        worst = std::max(worst, norm);
    }
    return HessianCheck{worst, worst <= 1.0 + tolerance};
}

}  // namespace bgkit
