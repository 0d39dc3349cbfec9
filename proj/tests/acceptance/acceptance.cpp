// Acceptance runner: one PASS/FAIL line per criterion. Arguments select
// criteria by id (e.g. `acceptance 3 6a`); no arguments runs everything.
#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gge/cmv.hpp"
#include "gge/dynamics.hpp"
#include "gge/equilibrium.hpp"
#include "gge/ldp_lab.hpp"
#include "gge/rng.hpp"
#include "gge/sampling.hpp"
#include "gge/stats.hpp"

using namespace gge;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<Complex> disk(int n, std::mt19937_64& g, double rmax) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Complex> a(n);
    for (auto& z : a) z = std::polar(rmax * std::sqrt(u(g)), 2 * kPi * u(g));
    return a;
}

// 1. Θ_ν sampler moments and method agreement.
Outcome c1() {
    Outcome o{true, ""};
    for (double nu : {2.0, 3.0, 5.5}) {
        Rng r1(kSeed, 1), r2(kSeed, 2);
        std::vector<double> m1(100000), m2(100000), mod1(100000), mod2(100000);
        for (std::size_t i = 0; i < m1.size(); ++i) {
            const Complex a = sample_theta({nu}, r1, ThetaMethod::Polar);
            const Complex b = sample_theta({nu}, r2, ThetaMethod::Representation);
            m1[i] = std::norm(a);
            m2[i] = std::norm(b);
            mod1[i] = std::abs(a);
            mod2[i] = std::abs(b);
        }
        const double target = 2.0 / (nu + 1.0);
        const auto s1 = stats::mean_se(m1), s2 = stats::mean_se(m2);
        const auto ks = stats::ks_two_sample(mod1, mod2);
        const bool ok = std::abs(s1.mean - target) <= 3 * s1.se && std::abs(s2.mean - target) <= 3 * s2.se &&
                        ks.p_value > 0.01;
        o.pass = o.pass && ok;
        o.detail += fmt("nu=%g: z=%.2f/%.2f ks_p=%.3f; ", nu, (s1.mean - target) / s1.se, (s2.mean - target) / s2.se,
                        ks.p_value);
    }
    return o;
}

// 2. Z_h law and the uniform exponential-moment bound.
Outcome c2() {
    Outcome o{true, ""};
    for (double h : {0.1, 0.5, 0.9}) {
        const auto r = check_z_law(h, 100000, kSeed, 0.01);
        o.pass = o.pass && r.pass;
        o.detail += fmt("h=%g ks_p=%.3f; ", h, r.statistics["p_value"].get<double>());
    }
    double k = 0.0;
    for (int i = 1; i <= 99; ++i) {
        const double q = exp_moment_quadrature(i / 100.0);
        if (!std::isfinite(q)) o.pass = false;
        k = std::max(k, q);
    }
    o.pass = o.pass && std::isfinite(k);
    o.detail += fmt("K=max quadrature=%.6f", k);
    return o;
}

// 3. CMV unitarity, the N = 4 free spectrum and traces against eigenvalue sums.
Outcome c3() {
    std::mt19937_64 g(kSeed);
    double unit = 0.0, trace_err = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = 2 << (t % 9);  // 2 … 512
        const auto a = disk(n, g, t % 3 == 0 ? 0.999999 : 0.95);
        const auto m = build_periodic_cmv(VerblunskyVector(a));
        unit = std::max(unit, unitarity_residual(m));
        if (t % 10 == 0) {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m.to_dense(), false);
            const auto tr = trace_powers(m, 4);
            for (int l = 1; l <= 4; ++l) {
                Complex s = 0;
                for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) s += std::pow(es.eigenvalues()[j], l);
                trace_err = std::max(trace_err, std::abs(s - tr[l]));
            }
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(
        build_periodic_cmv(VerblunskyVector(std::vector<Complex>(4, 0.0))).to_dense(), false);
    std::vector<double> re;
    double im = 0.0;
    for (Eigen::Index j = 0; j < 4; ++j) {
        re.push_back(es.eigenvalues()[j].real());
        im = std::max(im, std::abs(es.eigenvalues()[j].imag()));
    }
    std::sort(re.begin(), re.end());
    const double spec_err = std::max({std::abs(re[0] + 1), std::abs(re[1] + 1), std::abs(re[2] - 1),
                                      std::abs(re[3] - 1), im});
    return {unit <= 1e-12 && spec_err <= 1e-12 && trace_err <= 1e-8,
            fmt("unitarity=%.2e n4_spectrum_err=%.2e trace_vs_eig=%.2e", unit, spec_err, trace_err)};
}

// 4. Killip–Nenciu N = 2, β̃ = 2 (β = 2): E cos(θ₁ − θ₂) = −1/2.
Outcome c4() {
    McmcParams m;
    m.samples = 100000;
    m.seed = kSeed;
    const EnsembleSpec spec{EnsembleKind::Circular, 2, 2.0, Potential::zero()};
    auto s = make_sampler(spec, m);
    const Topology topo = topology_of(spec.kind);
    std::vector<double> c(m.samples);
    for (auto& x : c) {
        const auto th = eigen_angles(build(s.next().alphas, topo));
        x = std::cos(th[0] - th[1]);
    }
    const auto r = stats::mean_se(c);
    return {std::abs(r.mean + 0.5) <= 3 * r.se, fmt("mean=%.5f se=%.5f z=%.2f", r.mean, r.se, (r.mean + 0.5) / r.se)};
}

// 5. Lemma suites with 1e-12 slack.
Outcome c5() {
    std::vector<CheckReport> r;
    r.push_back(check_distance_rank_bound(1000, kSeed));
    r.push_back(check_product_bounds(1000, kSeed + 1));
    for (double nu : {2.0, 3.0, 5.5})
        for (double h : {0.1, 0.5, 0.99}) r.push_back(check_coupling_lemma(nu, h, 10000, kSeed + 2, 0));
    r.push_back(check_monotone_coupling(0.1, 0.6, 10000, kSeed + 3));
    r.push_back(check_monotone_coupling(0.5, 0.51, 10000, kSeed + 4));
    Outcome o{true, ""};
    int failed = 0;
    for (const auto& c : r)
        if (!c.pass) {
            ++failed;
            o.detail += c.check + " ";
        }
    o.pass = failed == 0;
    o.detail += fmt("%zu suites, %d failing", r.size(), failed);
    return o;
}

// 6a. V = 0 minimizer and its free energy.
Outcome c6a() {
    Outcome o{true, ""};
    for (double beta : {0.5, 1.0, 4.0}) {
        const auto s = minimize_torus(Potential::zero(), beta);
        double sup = 0.0;
        for (double v : s.density.values()) sup = std::max(sup, std::abs(v - 1 / (2 * kPi)));
        const double f = free_energy_torus(s.density, Potential::zero(), beta).total;
        const double ferr = std::abs(f - beta * std::log(2.0));
        o.pass = o.pass && sup <= 1e-10 && ferr <= 1e-8;
        o.detail += fmt("beta=%g sup=%.1e f_err=%.1e; ", beta, sup, ferr);
    }
    return o;
}

// 6b. β → 0: e^{−V}/Z for V = cos θ at β = 1e-3.
Outcome c6b() {
    SolverParams p;
    p.tolerance = 1e-13;
    const auto s = minimize_torus(Potential::cosine(0.5), 1e-3, p);
    const double z = 2 * kPi * boost::math::cyl_bessel_i(0, 1.0);
    double sup = 0.0;
    for (int i = 0; i < s.density.size(); ++i)
        sup = std::max(sup, std::abs(s.density[i] - std::exp(-std::cos(s.density.theta(i))) / z));
    return {sup <= 1e-4, fmt("sup|mu - e^{-V}/Z|=%.3e (tolerance 1e-4)", sup)};
}

// 7. AL relation at N = 256.
Outcome c7() {
    McmcParams m;
    m.samples = 10000;
    m.seed = kSeed;
    DosParams p;
    p.delta = 0.05;
    const auto r = check_dos_relation({EnsembleKind::AL, 256, 1.0, Potential::cosine(0.5)}, m, p);
    double zmax = 0.0;
    for (const auto& row : r.moments) zmax = std::max(zmax, std::abs(row.z));
    return {r.d_value <= 0.02 && zmax <= 3.0,
            fmt("D=%.5f (<=0.02) max|z|=%.2f over %zu moments", r.d_value, zmax, r.moments.size())};
}

// 8. Schur relation, n = 128 pairs (N = 256).
Outcome c8() {
    McmcParams m;
    m.samples = 10000;
    m.seed = kSeed;
    DosParams p;
    p.d_threshold = INFINITY;  // the criterion is on moments and symmetry only
    const auto r = check_dos_relation({EnsembleKind::Schur, 256, 1.0, Potential::zero(Potential::Kind::Interval)}, m, p);
    double zmax = 0.0;
    for (const auto& row : r.moments) zmax = std::max(zmax, std::abs(row.z));
    const bool sym = std::abs(r.mean_x) <= 3 * r.mean_x_se;
    return {zmax <= 3.0 && sym, fmt("max|z| moments 1-4=%.2f mean_x=%.2e se=%.2e", zmax, r.mean_x, r.mean_x_se)};
}

// 9. Conservation, Lax residual order and GGE invariance.
Outcome c9() {
    Outcome o{true, ""};
    std::mt19937_64 g(kSeed);
    IntegratorParams ip;
    ip.dt = 1e-3;
    ip.t_final = 10.0;
    ip.frame_every = 100;
    for (Flow f : {Flow::AL, Flow::Schur}) {
        auto a = disk(32, g, 0.5);
        if (f == Flow::Schur) {
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            for (auto& z : a) z = u(g);
        }
        const auto rep = conservation_report(integrate({a, 0.0}, f, ip), 4);
        o.pass = o.pass && rep.max_drift <= 1e-6;
        o.detail += fmt("%s drift=%.1e; ", to_string(f), rep.max_drift);
    }
    const FlowState s{disk(32, g, 0.5), 0.0};
    const double r1 = lax_residual(s, 1e-2).residual, r2 = lax_residual(s, 1.25e-3).residual;
    const double order = std::log(r1 / r2) / std::log(8.0);
    o.pass = o.pass && std::abs(order - 1.0) <= 0.1;
    o.detail += fmt("lax_order=%.3f; ", order);
    McmcParams m;
    m.seed = kSeed;
    m.samples = 2000;
    IntegratorParams fp;
    fp.dt = 1e-2;
    for (const EnsembleSpec& spec : {EnsembleSpec{EnsembleKind::AL, 32, 1.0, Potential::cosine(0.5)},
                                     EnsembleSpec{EnsembleKind::Schur, 32, 1.0, Potential::interval({0.0, 0.5})}}) {
        const auto r = gge_invariance_test(spec, 1.0, 2000, m, fp);
        o.pass = o.pass && r.min_p > 0.01;
        o.detail += fmt("%s invariance min_p=%.3f; ", to_string(spec.kind), r.min_p);
    }
    return o;
}

// 10. F_AL against ∂_β(βF_C).
Outcome c10() {
    FreeEnergyParams p;
    p.mcmc.samples = 4000;
    p.mcmc.seed = kSeed;
    const auto r = check_free_energy_relation(Potential::cosine(0.5), 1.0, 0.1, 128, p, {});
    return {r.pass, fmt("F_AL=%.5f se=%.1e trap=%.1e d(beta F_C)=%.5f disc=%.2e budget=%.2e (|disc|<=3*budget)",
                        r.al.value, r.al.std_error, r.al.discretization_error, r.derivative, r.discrepancy, r.budget)};
}

struct Criterion {
    const char* id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"1", "Theta_nu sampler", 10, c1},          {"2", "Z_h law and exp-moment bound", 30, c2},
        {"3", "CMV correctness", 120, c3},          {"4", "Killip-Nenciu N=2", 30, c4},
        {"5", "lemma suites", 120, c5},             {"6a", "torus minimizer V=0", 60, c6a},
        {"6b", "torus minimizer beta->0", 60, c6b}, {"7", "AL DOS relation", 900, c7},
        {"8", "Schur DOS relation", 600, c8},       {"9", "dynamics", 600, c9},
        {"10", "free-energy relation", 900, c10},
    };
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs <= c.budget_s;
        failed += !pass;
        std::printf("%s criterion %s (%s): %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
