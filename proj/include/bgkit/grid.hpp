#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "bgkit/common.hpp"
#include "bgkit/model.hpp"

namespace bgkit {

// Truncated phase-space rectangle [-Lx, Lx] x [-Ly, Ly] on cell-centered
// nodes, with the stationary measure restricted to the box and renormalized.
// The weights factorize as wx (x) wy because the measure does: the velocity
// factor is the same Gaussian for every column, which is also exactly the
// collision average weight.
struct PhaseGrid {
    double Lx = 0.0, Ly = 0.0;
    int Nx = 0, Ny = 0;
    double dx = 0.0, dy = 0.0;
    std::vector<double> xs, ys;  // node coordinates (cell centers)
    std::vector<double> wx, wy;  // factor weights, each normalized to sum 1

    std::size_t size() const { return static_cast<std::size_t>(Nx) * Ny; }
    std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * Nx + ix; }
    double weight(int ix, int iy) const { return wx[ix] * wy[iy]; }
};

inline std::shared_ptr<const PhaseGrid> make_grid(const ModelParams& p, double Lx, double Ly,
                                                  int Nx, int Ny) {
    require_valid(p);
    require(p.d == 1, "make_grid: phase-space grids support d = 1 only");
    require(Nx >= 4 && Ny >= 4, "make_grid: need at least 4 cells per axis");
    require(Lx > 0.0 && Ly > 0.0, "make_grid: box half-widths must be > 0");

    auto g = std::make_shared<PhaseGrid>();
    g->Lx = Lx;
    g->Ly = Ly;
    g->Nx = Nx;
    g->Ny = Ny;
    g->dx = 2.0 * Lx / Nx;
    g->dy = 2.0 * Ly / Ny;
    g->xs.resize(Nx);
    g->ys.resize(Ny);
    for (int i = 0; i < Nx; ++i) g->xs[i] = -Lx + (i + 0.5) * g->dx;
    for (int j = 0; j < Ny; ++j) g->ys[j] = -Ly + (j + 0.5) * g->dy;

    const double inv_s2 = 1.0 / (p.sigma * p.sigma);
    g->wx.resize(Nx);
    g->wy.resize(Ny);
    // Shift exponents by the node maximum before exponentiating.
    double max_lx = -std::numeric_limits<double>::infinity();
    std::vector<double> lx(Nx);
    for (int i = 0; i < Nx; ++i) {
        lx[i] = -potential_value(p, {&g->xs[i], 1}) * inv_s2;
        max_lx = std::max(max_lx, lx[i]);
    }
    for (int i = 0; i < Nx; ++i) g->wx[i] = std::exp(lx[i] - max_lx);
    for (int j = 0; j < Ny; ++j) g->wy[j] = std::exp(-0.5 * g->ys[j] * g->ys[j] * inv_s2);

    const double sx = pairwise_sum(g->wx);
    const double sy = pairwise_sum(g->wy);
    for (auto& w : g->wx) w /= sx;
    for (auto& w : g->wy) w /= sy;
    return g;
}

/// Box sized k standard deviations of the stationary marginals: Lx = k sigma/sqrt(rho), Ly = k sigma.
inline std::shared_ptr<const PhaseGrid> make_grid_ksigma(const ModelParams& p, double k, int Nx,
                                                         int Ny) {
    require(k > 0.0, "make_grid_ksigma: k must be > 0");
    return make_grid(p, k * p.sigma / std::sqrt(p.rho), k * p.sigma, Nx, Ny);
}

/// Density ratio h = m/mu on the grid, with unit mass under the grid weights.
struct DensityField {
    std::shared_ptr<const PhaseGrid> grid;
    std::vector<double> h;  // size Nx*Ny, x-fastest
    double time = 0.0;
};

inline double field_mass(const DensityField& f) {
    const auto& g = *f.grid;
    return pairwise_sum(std::size_t{0}, g.size(), [&](std::size_t k) {
        return f.h[k] * g.wx[k % g.Nx] * g.wy[k / g.Nx];
    });
}

/// Equilibrium covariance of the unperturbed model: diag(sigma^2/rho, sigma^2).
inline Eigen::Matrix2d equilibrium_covariance(const ModelParams& p) {
    Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
    s(0, 0) = p.sigma * p.sigma / p.rho;
    s(1, 1) = p.sigma * p.sigma;
    return s;
}

// h = density of N(mean, cov) divided by the stationary density, renormalized
// to unit mass on the box and floored at floor_eps.
inline DensityField gaussian_initial(std::shared_ptr<const PhaseGrid> grid,
                                     const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                     const ModelParams& p, double floor_eps = 1e-30) {
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    require(llt.info() == Eigen::Success, "gaussian_initial: covariance must be positive definite");
    const Eigen::Matrix2d prec = cov.inverse();

    DensityField f;
    f.grid = grid;
    f.h.resize(grid->size());
    const double inv_s2 = 1.0 / (p.sigma * p.sigma);
    for (int j = 0; j < grid->Ny; ++j) {
        const double y = grid->ys[j];
        for (int i = 0; i < grid->Nx; ++i) {
            const double x = grid->xs[i];
            const Eigen::Vector2d z{x - mean(0), y - mean(1)};
            const double log_gauss = -0.5 * z.dot(prec * z);
            const double log_mu = -(potential_value(p, {&grid->xs[i], 1}) + 0.5 * y * y) * inv_s2;
            f.h[grid->idx(i, j)] = std::exp(log_gauss - log_mu);
        }
    }
    const double mass = field_mass(f);
    require(mass > 0.0 && std::isfinite(mass), "gaussian_initial: degenerate mass on the box");
    for (auto& v : f.h) v = std::max(v / mass, floor_eps);
    return f;
}

}  // namespace bgkit
