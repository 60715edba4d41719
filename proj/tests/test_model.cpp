#include <bgkit/model.hpp>
#include <bgkit/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace bgkit;

namespace {

ModelParams cosine_model(double rho, double delta, double amplitude, int d) {
    ModelParams p;
    p.rho = rho;
    p.delta = delta;
    p.d = d;
    p.perturbation = Perturbation::Cosine(amplitude);
    return p;
}

}  // namespace

TEST_CASE("parameter validation names the offending field") {
    ModelParams p;
    CHECK(validate(p).empty());

    p.rho = -1.0;
    auto errs = validate(p);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("rho") != std::string::npos);

    p.rho = 1.0;
    p.sigma = 0.0;
    errs = validate(p);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("sigma") != std::string::npos);

    p.sigma = 1.0;
    p.delta = -0.5;
    p.d = 0;
    errs = validate(p);
    REQUIRE(errs.size() == 2);
    CHECK(errs[0].find("delta") != std::string::npos);
    CHECK(errs[1].find("d") != std::string::npos);

    CHECK_THROWS_AS(require_valid(p), std::invalid_argument);

    // no jumps is a legal degenerate case (pure transport)
    ModelParams q;
    q.lambda = 0.0;
    CHECK(validate(q).empty());
}

TEST_CASE("potential value and gradient closed forms") {
    ModelParams p;
    p.rho = 2.0;
    double x = 3.0;
    CHECK(potential_value(p, {&x, 1}) == 9.0);
    CHECK(potential_grad_1d(p, 3.0) == 6.0);

    ModelParams c = cosine_model(2.0, 0.5, 1.0, 1);
    CHECK(potential_value(c, {&x, 1}) == Catch::Approx(9.0 + 0.5 * std::cos(3.0)).epsilon(1e-15));
    CHECK(potential_grad_1d(c, 3.0) ==
          Catch::Approx(6.0 - 0.5 * std::sin(3.0)).epsilon(1e-15));
}

TEST_CASE("gradient matches a central difference of the value") {
    ModelParams p = cosine_model(1.7, 0.3, 0.8, 3);
    RngStream rng(11, 0);
    const double step = 1e-5;
    std::vector<double> x(3), g(3), xp(3), xm(3);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& xi : x) xi = -4.0 + 8.0 * rng.uniform();
        potential_grad(p, x, g);
        for (int i = 0; i < 3; ++i) {
            xp = x;
            xm = x;
            xp[i] += step;
            xm[i] -= step;
            double fd = (potential_value(p, xp) - potential_value(p, xm)) / (2.0 * step);
            CHECK(g[i] == Catch::Approx(fd).margin(1e-8));
        }
    }
}

TEST_CASE("stationary log density is even in velocity and position symmetry holds") {
    ModelParams p = cosine_model(1.3, 0.2, 0.6, 2);
    RngStream rng(12, 0);
    std::vector<double> x(2), y(2), yneg(2), xneg(2);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& v : x) v = -3.0 + 6.0 * rng.uniform();
        for (auto& v : y) v = -3.0 + 6.0 * rng.uniform();
        for (int i = 0; i < 2; ++i) yneg[i] = -y[i];
        CHECK(stationary_log_density(p, x, y) == stationary_log_density(p, x, yneg));
    }

    // the unperturbed potential is exactly even
    ModelParams q;
    q.rho = 2.1;
    q.d = 2;
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& v : x) v = -3.0 + 6.0 * rng.uniform();
        for (int i = 0; i < 2; ++i) xneg[i] = -x[i];
        CHECK(potential_value(q, x) == potential_value(q, xneg));
    }
}

TEST_CASE("perturbation constructors enforce the curvature budget") {
    CHECK(Perturbation::Zero().hessian_bound() == 0.0);
    CHECK(Perturbation::Cosine(0.5).hessian_bound() == 0.5);
    CHECK(Perturbation::Cosine(-0.7).hessian_bound() == 0.7);
    CHECK_THROWS_AS(Perturbation::Cosine(1.5), std::invalid_argument);

    auto tab = Perturbation::Tabulated([](std::span<const double>) { return 0.0; },
                                       [](std::span<const double>, std::span<double> g) {
                                           for (auto& v : g) v = 0.0;
                                       },
                                       0.25);
    CHECK(tab.hessian_bound() == 0.25);
    CHECK_THROWS_AS(Perturbation::Tabulated({}, {}, 1.5), std::invalid_argument);
}

TEST_CASE("sampled curvature check matches analytic spectral norms") {
    HessianCheck z = check_hessian_bound(Perturbation::Zero(), 2, 50, 3.0, 1);
    CHECK(z.max_spectral_norm <= 1e-6);
    CHECK(z.within_bound);

    HessianCheck full = check_hessian_bound(Perturbation::Cosine(1.0), 1, 2000, M_PI, 2);
    CHECK(full.max_spectral_norm == Catch::Approx(1.0).margin(1e-3));
    CHECK(full.within_bound);

    HessianCheck half = check_hessian_bound(Perturbation::Cosine(0.5), 1, 2000, M_PI, 3);
    CHECK(half.max_spectral_norm == Catch::Approx(0.5).margin(1e-3));
    CHECK(half.within_bound);
}
