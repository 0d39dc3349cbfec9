#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "gge/equilibrium.hpp"
#include "gge/error.hpp"

using namespace gge;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// −∬ ln|e^{iθ}−e^{iφ}| ρ(θ)ρ(φ) by nested tanh-sinh in the difference variable.
double double_log_oracle(const std::function<double(double)>& rho) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto inner = [&](double th) {
        auto f = [&](double u) { return std::log(2 * std::sin(u / 2)) * (rho(th + u) + rho(th - u)); };
        return ts.integrate(f, 0.0, kPi);
    };
    boost::math::quadrature::tanh_sinh<double> outer;
    return -outer.integrate([&](double th) { return rho(th) * inner(th); }, -kPi, kPi);
}
}  // namespace

TEST_CASE("log potential of a one-mode density") {
    auto rho = GridDensity::from_function(256, [](double t) { return (1 + std::cos(t)) / (2 * kPi); });
    auto lp = log_potential_torus(rho);
    for (int i = 0; i < rho.size(); ++i) CHECK(lp[i] == doctest::Approx(-0.5 * std::cos(rho.theta(i))).epsilon(1e-13));
    auto u = log_potential_torus(GridDensity::uniform(64));
    for (double v : u) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("torus free energy") {
    for (double beta : {0.5, 1.0, 4.0}) {
        auto f = free_energy_torus(GridDensity::uniform(512), Potential::zero(), beta);
        CHECK(std::abs(f.total - beta * kLn2) <= 1e-12);
        CHECK(f.interaction == f.interaction_fourier + f.log2_constant);
        CHECK(f.total == doctest::Approx(f.interaction + f.potential + f.entropy).epsilon(1e-15));
    }
    auto one = [](double t) { return (1 + std::cos(t)) / (2 * kPi); };
    auto rho = GridDensity::from_function(1024, one);
    auto f = free_energy_torus(rho, Potential::zero(), 1.0);
    CHECK(f.interaction_fourier == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(double_log_oracle(one) == doctest::Approx(0.25).epsilon(1e-9));
    // Entropy oracle: ∫ρ ln ρ + ln 2π by tanh-sinh.
    boost::math::quadrature::tanh_sinh<double> ts;
    double ent = ts.integrate([&](double t) { double r = one(t); return r > 0 ? r * std::log(r) : 0.0; }, -kPi, kPi) +
                 std::log(2 * kPi);
    CHECK(f.entropy == doctest::Approx(ent).epsilon(1e-6));
    // Potential part: ∫cos θ dμ = 1/2.
    auto g = free_energy_torus(rho, Potential::cosine(0.5), 1.0);
    CHECK(g.potential == doctest::Approx(0.5).epsilon(1e-13));
    // β = 0 removes the interaction.
    CHECK(free_energy_torus(rho, Potential::zero(), 0.0).interaction == 0.0);
    CHECK_THROWS_AS(free_energy_torus(GridDensity({1.0, -0.1, 0.2, 0.3}, false, true), Potential::zero(), 1.0),
                    DomainError);
}

TEST_CASE("torus minimizer at V = 0") {
    for (double beta : {0.5, 1.0, 4.0}) {
        auto sol = minimize_torus(Potential::zero(), beta);
        double err = 0;
        for (double v : sol.density.values()) err = std::max(err, std::abs(v - 1 / (2 * kPi)));
        CHECK(err <= 1e-10);
        CHECK(free_energy_torus(sol.density, Potential::zero(), beta).total == doctest::Approx(beta * kLn2).epsilon(1e-12));
        CHECK(circular_free_energy(Potential::zero(), beta) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("torus minimizer: beta -> 0 is the von Mises law") {
    const double z = 2 * kPi * boost::math::cyl_bessel_i(0, 1.0);
    auto v = Potential::cosine(0.5);  // V = cos θ
    auto vm = [&](double t) { return std::exp(-std::cos(t)) / z; };
    auto s0 = minimize_torus(v, 0.0);
    double e0 = 0, e1 = 0, e2 = 0;
    for (int i = 0; i < s0.density.size(); ++i) e0 = std::max(e0, std::abs(s0.density[i] - vm(s0.density.theta(i))));
    CHECK(e0 <= 1e-12);
    auto s1 = minimize_torus(v, 1e-3);
    auto s2 = minimize_torus(v, 5e-4);
    for (int i = 0; i < s1.density.size(); ++i) {
        e1 = std::max(e1, std::abs(s1.density[i] - vm(s1.density.theta(i))));
        e2 = std::max(e2, std::abs(s2.density[i] - vm(s2.density.theta(i))));
    }
    // The deviation is first order in β.
    CHECK(e2 == doctest::Approx(e1 / 2).epsilon(0.01));
    MESSAGE("sup deviation from von Mises at beta=1e-3: " << e1);
}

TEST_CASE("torus minimizer: linear response oracle") {
    // Linearizing the Euler–Lagrange equation in η gives μ̂_1 = −η/(1+β) + O(η³).
    const double eta = 1e-3;
    for (double beta : {0.5, 1.0, 3.0}) {
        auto sol = minimize_torus(Potential::cosine(eta), beta);
        auto c = sol.density.fourier();
        CHECK(c[1].real() == doctest::Approx(-eta / (1 + beta)).epsilon(1e-5));
        CHECK(std::abs(c[1].imag()) <= 1e-15);
        auto nu = beta_derivative_torus(Potential::cosine(eta), beta, 0.0);
        auto cn = nu.density.fourier();
        CHECK(cn[1].real() == doctest::Approx(-eta / ((1 + beta) * (1 + beta))).epsilon(1e-4));
    }
}

TEST_CASE("torus minimizer: refinement, rotation, uniqueness, minimality") {
    auto v = Potential::torus({0.0, 1.0, 0.3}, {0.0, -0.4, 0.2});
    const double beta = 1.5;
    SolverParams p;
    auto a = minimize_torus(v, beta, p);
    CHECK(a.residual <= 1e-9);
    p.grid_size = 2048;
    auto b = minimize_torus(v, beta, p);
    double dref = 0;
    for (int i = 0; i < a.density.size(); ++i) dref = std::max(dref, std::abs(a.density[i] - b.density[2 * i]));
    CHECK(dref <= 1e-6);

    // Grid-aligned rotation shifts the nodes; any rotation multiplies μ̂_k by e^{ikφ}.
    const int shift = 37;
    const double phi = 2 * kPi * shift / 1024;
    auto r = minimize_torus(v.rotated(phi), beta);
    double drot = 0;
    for (int i = 0; i < 1024; ++i) drot = std::max(drot, std::abs(r.density[(i + shift) % 1024] - a.density[i]));
    CHECK(drot <= 1e-9);
    auto r2 = minimize_torus(v.rotated(0.4321), beta);
    for (int k = 1; k <= 6; ++k)
        CHECK(std::abs(r2.density.fourier()[k] - std::polar(1.0, 0.4321 * k) * a.density.fourier()[k]) <= 1e-9);

    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> un(0.2, 3.0);
    std::vector<double> i1(1024), i2(1024);
    for (int i = 0; i < 1024; ++i) {
        i1[i] = un(g);
        i2[i] = un(g);
    }
    GridDensity g1(i1), g2(i2);
    SolverParams q;
    auto u1 = minimize_torus(v, beta, q, &g1);
    auto u2 = minimize_torus(v, beta, q, &g2);
    CHECK(sup_diff(u1.density.values(), u2.density.values()) <= 2 * q.tolerance);

    const double fmin = free_energy_torus(a.density, v, beta).total;
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 200; ++trial) {
        const double eps = trial < 100 ? 1e-2 : 1e-4;
        const double ak = nd(g), bk = nd(g);
        const int k = 1 + trial % 7;
        std::vector<double> pert(a.density.values());
        for (int i = 0; i < 1024; ++i) {
            const double t = a.density.theta(i);
            pert[i] *= std::exp(eps * (ak * std::cos(k * t) + bk * std::sin(k * t)));
        }
        CHECK(free_energy_torus(GridDensity(pert), v, beta).total >= fmin - 1e-13);
    }
}

TEST_CASE("torus beta-derivative") {
    auto nu0 = beta_derivative_torus(Potential::zero(), 1.0, 0.3);
    for (double x : nu0.density.values()) CHECK(x == doctest::Approx(1 / (2 * kPi)).epsilon(1e-12));
    auto v = Potential::cosine(0.8);
    auto nu = beta_derivative_torus(v, 1.0, 0.0);
    CHECK(nu.delta == doctest::Approx(0.05));
    CHECK(nu.density.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nu.warnings.empty());
    // Second order: the δ vs δ/2 gap shrinks by about 4 when δ halves.
    auto nu2 = beta_derivative_torus(v, 1.0, 0.025);
    CHECK(nu.richardson_gap / nu2.richardson_gap == doctest::Approx(4.0).epsilon(0.05));
    CHECK_THROWS_AS(beta_derivative_torus(v, 1.0, 1.0), ConfigError);
}

TEST_CASE("torus solver: beta-Lipschitz along a grid") {
    auto v = Potential::torus({0.0, 1.0}, {0.0, 0.5});
    std::vector<double> betas{0.4, 0.6, 0.8, 1.0, 1.2, 1.4};
    std::vector<double> ratio;
    GridDensity prev;
    for (std::size_t j = 0; j < betas.size(); ++j) {
        auto s = minimize_torus(v, betas[j]);
        if (j > 0) ratio.push_back(distance_D(prev, s.density).value / (betas[j] - betas[j - 1]));
        prev = s.density;
    }
    // The difference quotients vary smoothly; a single constant bounds them all.
    const double c = *std::max_element(ratio.begin(), ratio.end());
    CHECK(c < 1.0);
    for (std::size_t j = 1; j < ratio.size(); ++j) CHECK(ratio[j] <= ratio[j - 1]);
}

TEST_CASE("torus solver errors") {
    SolverParams p;
    p.max_iterations = 2;
    CHECK_THROWS_AS(minimize_torus(Potential::cosine(1.0), 1.0, p), ConvergenceError);
    try {
        minimize_torus(Potential::cosine(1.0), 1.0, p);
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 0);
    }
    p = {};
    p.damping = 0;
    CHECK_THROWS_AS(minimize_torus(Potential::zero(), 1.0, p), ConfigError);
    CHECK_THROWS_AS(minimize_torus(Potential::zero(), -1.0), DomainError);
    CHECK_THROWS_AS(minimize_torus(Potential::interval({0.0, 1.0}), 1.0), ConfigError);
}

TEST_CASE("interval grid and arcsine oracle") {
    auto grid = IntervalGrid::shared({});
    CHECK(grid == IntervalGrid::shared({}));
    auto arc = IntervalDensity::arcsine(grid);
    CHECK(arc.mass() == doctest::Approx(1.0).epsilon(1e-12));
    // Arcsine: ∫T_k = 0 for k ≥ 1, ∫x² = 1/2, ∫x⁴ = 3/8, U ≡ −ln 2 on [−1, 1].
    for (int k = 1; k <= 6; ++k) CHECK(std::abs(arc.chebyshev_moment(k)) <= 1e-12);
    CHECK(arc.power_moment(2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(arc.power_moment(4) == doctest::Approx(0.375).epsilon(1e-12));
    auto u = grid->log_potential(arc.q());
    double du = 0;
    for (int i = 0; i < grid->size(); ++i) du = std::max(du, std::abs(u[i] + kLn2));
    // Product integration with cubic interpolation is O(h⁴): ~1.3e-7 at the default grid.
    CHECK(du <= 2e-7);
    IntervalGrid::Params fine;
    fine.nodes = 2048;
    auto gf = IntervalGrid::shared(fine);
    auto uf = gf->log_potential(IntervalDensity::arcsine(gf).q());
    double duf = 0;
    for (int i = 0; i < gf->size(); ++i) duf = std::max(duf, std::abs(uf[i] + kLn2));
    CHECK(duf <= du / 10);
    for (double beta : {0.5, 1.0, 2.0}) {
        auto f = free_energy_interval(arc, Potential::zero(), beta);
        CHECK(f.interaction == doctest::Approx(beta * kLn2).epsilon(2e-7));
    }
    CHECK(free_energy_interval(arc, Potential::zero(), 0.0).interaction == 0.0);
    // Nodes are mirror images.
    for (int i = 0; i < grid->size(); ++i) CHECK(grid->x(i) == -grid->x(grid->size() - 1 - i));
}

TEST_CASE("interval free energy: semicircle oracle and mirror symmetry") {
    auto grid = IntervalGrid::shared({});
    // Semicircle on [−1, 1]: ρ = (2/π)√(1−x²); ∬ln|x−y| = −ln 2 − 1/4 (radius 1/2 scaling of the
    // standard value −1/4 on [−2, 2]).
    auto sc = IntervalDensity::from_log_theta_density(grid, [](double th, double lth, double lpt) {
        (void)th;
        // ρ_θ = (2/π) sin² θ
        const double ls = lth <= lpt ? std::log(std::sin(std::exp(lth))) : std::log(std::sin(std::exp(lpt)));
        return std::log(2 / kPi) + 2 * ls;
    });
    CHECK(sc.mass() == doctest::Approx(1.0).epsilon(1e-12));
    auto f = free_energy_interval(sc, Potential::zero(), 1.0);
    CHECK(f.interaction == doctest::Approx(kLn2 + 0.25).epsilon(2e-7));

    // Asymmetric density: the free energy with V(−x) matches after mirroring.
    auto asym = IntervalDensity::from_log_theta_density(
        grid, [](double th, double, double) { return std::log((1 + 0.5 * std::cos(th)) / kPi); });
    auto v = Potential::interval({0.0, 0.7, 0.2, -0.3});
    auto vm = Potential::interval({0.0, -0.7, 0.2, 0.3});
    auto fa = free_energy_interval(asym, v, 0.8);
    auto fb = free_energy_interval(asym.mirrored(), vm, 0.8);
    CHECK(fa.total == doctest::Approx(fb.total).epsilon(1e-12));
    CHECK(fa.potential == doctest::Approx(fb.potential).epsilon(1e-12));
}

TEST_CASE("interval minimizer") {
    auto sol = minimize_interval(Potential::zero(), 1.0);
    const auto& q = sol.density.q();
    CHECK(sol.density.mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.residual <= 1e-6);
    CHECK(sup_diff(q, sol.density.mirrored().q()) <= 1e-8);
    for (int k : {1, 3}) CHECK(std::abs(sol.density.chebyshev_moment(k)) <= 1e-10);
    MESSAGE("mu_1: T2 " << sol.density.chebyshev_moment(2) << " T4 " << sol.density.chebyshev_moment(4)
                        << " iterations " << sol.iterations << " tail " << sol.tail_mass);

    // Variational check independent of the fixed-point equation.
    const double fmin = free_energy_interval(sol.density, Potential::zero(), 1.0).total;
    std::mt19937_64 g(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 40; ++trial) {
        const double a = nd(g), b = nd(g);
        const int k = 1 + trial % 4;
        std::vector<double> p(q);
        for (int i = 0; i < sol.density.size(); ++i)
            p[i] *= std::exp(1e-2 * (a * std::cos(k * sol.density.grid().theta(i)) + b * std::sin(k * sol.density.grid().theta(i))));
        IntervalDensity pd(sol.density.grid_ptr(), p);
        CHECK(free_energy_interval(pd, Potential::zero(), 1.0).total >= fmin - 1e-10);
    }

    // Large β pushes the minimizer toward arcsine.
    auto strong = minimize_interval(Potential::zero(), 20.0);
    CHECK(std::abs(strong.density.chebyshev_moment(2)) < std::abs(sol.density.chebyshev_moment(2)) / 5);

    // Even V keeps symmetry; odd V breaks it in the right direction.
    auto even = minimize_interval(Potential::interval({0.0, 0.0, 0.5}), 1.0);
    CHECK(sup_diff(even.density.q(), even.density.mirrored().q()) <= 1e-8);
    auto tilt = minimize_interval(Potential::interval({0.0, 0.5}), 1.0);
    CHECK(tilt.density.chebyshev_moment(1) < 0);
    CHECK(tilt.residual <= 1e-6);
}

TEST_CASE("interval beta-derivative and diagnostics") {
    auto nu = beta_derivative_interval(Potential::zero(), 1.0, 0.0);
    CHECK(nu.density.mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(nu.chebyshev_error.size() == 5u);
    MESSAGE("nu_1: T2 " << nu.density.chebyshev_moment(2) << " T4 " << nu.density.chebyshev_moment(4)
                        << " richardson " << nu.richardson_gap);
    CHECK(std::abs(nu.density.chebyshev_moment(1)) <= 1e-10);
    CHECK(nu.richardson_gap <= 1e-4);
    CHECK_THROWS_AS(minimize_interval(Potential::zero(), 1e-4), DomainError);
    CHECK_THROWS_AS(beta_derivative_interval(Potential::zero(), 1.0, 2.0), ConfigError);
    auto csv = to_csv(nu.density);
    CHECK(csv.rfind("x,rho\n", 0) == 0);
}
