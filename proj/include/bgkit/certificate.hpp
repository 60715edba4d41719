#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "bgkit/common.hpp"

namespace bgkit {

// Twist matrix M(a,b) with per-coordinate 2x2 blocks [[1, b], [b, a]].
// The full 2d x 2d matrix is the block replicated over coordinate pairs
// (x_k, y_k); all of the certificate algebra happens on the block. The
// lower-right d x d corner is the homothety a*I, which is what makes the
// per-coordinate collision kernel obey the same dissipation bound as the
// full-refresh one.
struct TwistMatrix {
    double a = 1.0;
    double b = 0.0;
    int d = 1;

    double trace() const { return 1.0 + a; }
    double det() const { return a - b * b; }
    bool positive_definite() const { return det() > 0.0 && trace() > 0.0; }

    /// Closed-form block eigenvalues {r-, r+}.
    std::pair<double, double> eigenvalues() const {
        const double mean = 0.5 * trace();
        const double r = std::sqrt(std::max(0.0, mean * mean - det()));
        return {mean - r, mean + r};
    }

    static TwistMatrix identity(int d = 1) { return TwistMatrix{1.0, 0.0, d}; }
};

/// Symmetric 2x2 block, stored by entries.
struct SymBlock2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double min_eigenvalue() const {
        const double mean = 0.5 * (xx + yy);
        const double r = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
        return mean - r;
    }
};

// Everything needed to certify exponential decay of the twisted Fisher
// information at rate gamma - 2*C*delta, with verification flags.
struct Certificate {
    double rho = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double gamma = 0.0;            // rate the matrix inequality is checked at
    double gamma_star = 0.0;       // closed-form certified rate
    double gamma_opt = 0.0;        // numerically maximal feasible rate (when computed)
    double a = 0.0, b = 0.0;       // twist parameters
    double C = 0.0;                // decay prefactor
    double cond_bound = 0.0;       // (1+a)^2/(a-b^2) >= r+/r-
    double delta_threshold = 0.0;  // max perturbation size for entropy decay
    double effective_rate = 0.0;   // gamma - 2*C*delta
    bool vacuous = false;          // effective_rate <= 0
    double psd_margin = 0.0;       // min eigenvalue of N - gamma*M
    bool valid = false;            // psd_margin >= -1e-12 and a > b^2
};

/// gamma* = lambda*rho / (2*rho + lambda^2/2), the certified decay rate.
inline double gamma_star(double rho, double lambda) {
    require(rho > 0.0 && lambda > 0.0, "gamma_star: rho and lambda must be > 0");
    return lambda * rho / (2.0 * rho + 0.5 * lambda * lambda);
}

/// Twist parameters b(gamma) = -gamma/2 and a(gamma) = rho + gamma(gamma-lambda)/2.
inline std::pair<double, double> ab_of_gamma(double rho, double lambda, double gamma) {
    require(gamma >= 0.0, "ab_of_gamma: gamma must be >= 0");
    return {rho + 0.5 * gamma * (gamma - lambda), -0.5 * gamma};
}

// Dissipation block of the twisted Fisher derivative:
//   N = [[-2b, -a+rho+lambda*b], [-a+rho+lambda*b, 2*b*rho+lambda*a]].
inline SymBlock2 build_N(double rho, double lambda, double a, double b) {
    const double off = -a + rho + lambda * b;
    return SymBlock2{-2.0 * b, off, 2.0 * b * rho + lambda * a};
}

/// rho*(2*gamma - lambda) + gamma*(gamma - lambda)^2 / 2; feasibility means psi <= 0.
inline double psi(double rho, double lambda, double gamma) {
    const double gl = gamma - lambda;
    return rho * (2.0 * gamma - lambda) + 0.5 * gamma * gl * gl;
}

/// C = (1 + rho + lambda^2/4)^{3/2} / rho.
inline double decay_prefactor(double rho, double lambda) {
    require(rho > 0.0 && lambda >= 0.0, "decay_prefactor: rho must be > 0, lambda >= 0");
    const double base = 1.0 + rho + 0.25 * lambda * lambda;
    return base * std::sqrt(base) / rho;
}

// Upper bound (tr M)^2/det M = (1+a)^2/(a-b^2) on the eigenvalue ratio r+/r-
// of the twist block. Degenerate blocks (a <= b^2) have no finite bound.
inline double condition_bound(double a, double b) {
    const double det = a - b * b;
    if (!(det > 0.0)) throw std::invalid_argument("condition_bound: degenerate matrix, a <= b^2");
    const double tr = 1.0 + a;
    return tr * tr / det;
}

/// Largest perturbation size delta the entropy-decay corollary admits: rho*min(1, 1/(4C)).
inline double delta_threshold(double rho, double lambda) {
    require(rho > 0.0 && lambda >= 0.0, "delta_threshold: rho must be > 0, lambda >= 0");
    return rho * std::min(1.0, 0.25 / decay_prefactor(rho, lambda));
}

struct EffectiveRate {
    double value = 0.0;
    bool vacuous = false;  // value <= 0: the decay bound says nothing
};

/// gamma* - 2*C*delta, the decay exponent after paying for the perturbation.
inline EffectiveRate effective_rate(double rho, double lambda, double delta) {
    require(delta >= 0.0, "effective_rate: delta must be >= 0");
    const double v = gamma_star(rho, lambda) - 2.0 * decay_prefactor(rho, lambda) * delta;
    return EffectiveRate{v, v <= 0.0};
}

// Checks N >= gamma*M as quadratic forms with a = a(gamma), b = b(gamma) and
// fills every certificate field. Infeasible rates come back as values with
// valid = false so parameter sweeps can chart the feasible region.
inline Certificate verify_certificate(double rho, double lambda, double gamma, double delta = 0.0) {
    require(rho > 0.0 && lambda > 0.0, "verify_certificate: rho and lambda must be > 0");
    Certificate cert;
    cert.rho = rho;
    cert.lambda = lambda;
    cert.delta = delta;
    cert.gamma = gamma;
    cert.gamma_star = gamma_star(rho, lambda);
    std::tie(cert.a, cert.b) = ab_of_gamma(rho, lambda, gamma);

    const SymBlock2 n = build_N(rho, lambda, cert.a, cert.b);
    // N - gamma*M with M = [[1, b], [b, a]]
    const SymBlock2 diff{n.xx - gamma, n.xy - gamma * cert.b, n.yy - gamma * cert.a};
    cert.psd_margin = diff.min_eigenvalue();

    const double det = cert.a - cert.b * cert.b;
    cert.valid = cert.psd_margin >= -1e-12 && det > 0.0;
    cert.cond_bound = det > 0.0 ? condition_bound(cert.a, cert.b)
                                : std::numeric_limits<double>::infinity();
    cert.C = decay_prefactor(rho, lambda);
    cert.delta_threshold = delta_threshold(rho, lambda);
    cert.effective_rate = gamma - 2.0 * cert.C * delta;
    cert.vacuous = cert.effective_rate <= 0.0;
    return cert;
}

// Largest gamma in [0, lambda] with a valid certificate: a coarse scan
// brackets the upper edge of the feasible set, bisection refines it to tol.
// gamma* is always feasible, so the result is >= gamma*(rho, lambda) - tol.
inline double optimize_gamma(double rho, double lambda, double tol = 1e-10) {
    require(rho > 0.0 && lambda > 0.0, "optimize_gamma: rho and lambda must be > 0");
    require(tol > 0.0, "optimize_gamma: tol must be > 0");
    const auto feasible = [&](double g) { return verify_certificate(rho, lambda, g).valid; };

    constexpr int kScan = 4096;
    double lo = 0.0, hi = lambda;
    bool bracketed = false;
    for (int i = kScan; i >= 0; --i) {
        const double g = lambda * static_cast<double>(i) / kScan;
        if (feasible(g)) {
            lo = g;
            hi = (i == kScan) ? g : lambda * static_cast<double>(i + 1) / kScan;
            bracketed = true;
            break;
        }
    }
    if (!bracketed) return 0.0;  // gamma = 0 is always feasible, not reached
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Full certificate at the closed-form rate gamma*, with the numerically
/// optimal rate reported alongside for comparison.
inline Certificate certify(double rho, double lambda, double delta = 0.0) {
    Certificate cert = verify_certificate(rho, lambda, gamma_star(rho, lambda), delta);
    cert.gamma_opt = optimize_gamma(rho, lambda);
    return cert;
}

}  // namespace bgkit
