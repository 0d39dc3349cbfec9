#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gge/dynamics.hpp"
#include "gge/equilibrium.hpp"
#include "gge/error.hpp"
#include "gge/ldp_lab.hpp"
#include "gge/rng.hpp"
#include "gge/sampling.hpp"
#include "gge/spectral.hpp"

namespace gge::cli {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

constexpr int kUsage = 1;
constexpr int kNumerical = 2;
constexpr int kCheckFailed = 3;

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir;
    std::string format = "csv";
    std::string config;
};

// Routes every artifact through one writer: stdout when no --out is given,
// else one file per artifact. Each artifact carries seed and config hash.
class Writer {
public:
    Writer(const Globals& g, std::string hash, std::ostream& out) : g_(g), hash_(std::move(hash)), out_(out) {
        if (!g_.out_dir.empty()) std::filesystem::create_directories(g_.out_dir);
    }

    std::ostream& log() { return out_; }

    void table(const std::string& stem, const std::string& csv, const json& j) {
        if (g_.format == "json")
            emit_json(stem, j);
        else
            emit(stem + ".csv", "# seed=" + std::to_string(g_.seed) + " config_hash=" + hash_ + "\n" + csv);
    }

    void emit_json(const std::string& stem, json j) {
        if (!j.is_object()) j = json{{"data", std::move(j)}};
        j["seed"] = g_.seed;
        j["config_hash"] = hash_;
        emit(stem + ".json", j.dump(1) + "\n");
    }

private:
    void emit(const std::string& name, const std::string& text) {
        if (g_.out_dir.empty()) {
            out_ << text;
            return;
        }
        std::ofstream f(std::filesystem::path(g_.out_dir) / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + name);
        f << text;
    }

    const Globals& g_;
    std::string hash_;
    std::ostream& out_;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

// Flat "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int no = 0;
    while (std::getline(f, line)) {
        ++no;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        kv.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

// Config entries become --key=value arguments unless the command line already sets that key.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    for (const auto& [k, v] : read_config(path)) {
        const std::string flag = "--" + k;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (!given) args.push_back(flag + "=" + v);
    }
    return args;
}

std::string option_value(const CLI::Option* o) {
    if (o->count() == 0) return o->get_default_str();
    std::string s;
    for (const auto& r : o->results()) s += (s.empty() ? "" : ",") + r;
    return s;
}

// Hash of every effective parameter that can change the output bytes.
std::string config_hash(const CLI::App& app, const CLI::App& sub) {
    std::map<std::string, std::string> kv;
    for (const CLI::App* a : {&app, &sub})
        for (const auto* o : a->get_options()) {
            const std::string name = o->get_name(false, true);
            if (name.empty() || name == "--help" || name == "--out" || name == "--config" || name == "--threads")
                continue;
            kv[name] = option_value(o);
        }
    std::string text = "command=" + sub.get_name() + "\n";
    for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

struct EnsembleOpts {
    std::string ensemble = "al";
    int n = 64;
    double beta = 1.0;
    std::string potential;
    std::size_t samples = 100;
    std::size_t burn_in = 0;
    std::size_t thinning = 0;

    void add(CLI::App* c, bool beta_required) {
        c->add_option("--ensemble", ensemble, "al | schur | circular | jacobi")
            ->check(CLI::IsMember({"al", "schur", "circular", "jacobi"}));
        c->add_option("--n", n, "matrix dimension N (Jacobi: N = 2n)");
        auto* b = c->add_option("--beta", beta, "inverse temperature");
        if (beta_required) b->required();
        c->add_option("--potential", potential, "c0=..,c1=..,s1=.. (torus) or t0=..,t1=.. (interval)");
        c->add_option("--samples", samples, "kept states");
        c->add_option("--burn-in", burn_in, "burn-in sweeps; 0 keeps the default 10·N");
        c->add_option("--thinning", thinning, "site updates between kept states; 0 keeps the default N");
    }

    EnsembleSpec spec() const {
        const auto kind = parse_ensemble(ensemble);
        const bool interval = kind == EnsembleKind::Schur || kind == EnsembleKind::Jacobi;
        Potential v = potential.empty() ? Potential::zero(interval ? Potential::Kind::Interval : Potential::Kind::Torus)
                                        : Potential::parse(potential);
        return {kind, n, beta, v};
    }

    McmcParams mcmc(std::uint64_t seed) const {
        McmcParams m;
        m.samples = samples;
        m.seed = seed;
        if (burn_in) m.burn_in = burn_in;
        if (thinning) m.thinning = thinning;
        return m;
    }
};

json complex_array(const std::vector<Complex>& v) {
    auto a = json::array();
    for (const auto& z : v) a.push_back({z.real(), z.imag()});
    return a;
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

// ---- subcommands --------------------------------------------------------------------

int cmd_sample(const EnsembleOpts& e, bool angles, const Globals& g, Writer& w) {
    const auto spec = e.spec();
    auto sampler = make_sampler(spec, e.mcmc(g.seed));
    const Topology topo = topology_of(spec.kind);
    std::ostringstream csv, acsv;
    auto rows = json::array(), arows = json::array();
    const std::size_t n = sampler.size();
    csv << "index";
    for (std::size_t j = 1; j <= n; ++j) csv << ",re_alpha_" << j << ",im_alpha_" << j;
    csv << "\n";
    acsv << "index,theta\n";
    double mod2 = 0.0;
    for (std::size_t i = 0; i < e.samples; ++i) {
        const auto s = sampler.next();
        csv << i;
        for (const auto& z : s.alphas.entries()) {
            csv << ',' << fmt(z.real()) << ',' << fmt(z.imag());
            mod2 += std::norm(z);
        }
        csv << "\n";
        rows.push_back(complex_array(s.alphas.entries()));
        if (angles) {
            const auto th = eigen_angles(build(s.alphas, topo));
            for (double t : th) acsv << i << ',' << fmt(t) << "\n";
            arows.push_back(th);
        }
    }
    w.table("samples", csv.str(), json{{"ensemble", e.ensemble}, {"samples", rows}});
    if (angles) w.table("angles", acsv.str(), json{{"angles", arows}});
    const double mean = mod2 / (static_cast<double>(e.samples) * n);
    w.emit_json("sample_summary", {{"ensemble", e.ensemble},
                                   {"n", e.n},
                                   {"beta", e.beta},
                                   {"potential", spec.potential.to_string()},
                                   {"samples", e.samples},
                                   {"exact", sampler.exact()},
                                   {"acceptance_rate", sampler.acceptance_rate()},
                                   {"mean_abs_alpha_sq", mean}});
    return 0;
}

int cmd_dos(const EnsembleOpts& e, int bins, double bandwidth, int k_max, const Globals& g, Writer& w) {
    const auto spec = e.spec();
    auto sampler = make_sampler(spec, e.mcmc(g.seed));
    const Topology topo = topology_of(spec.kind);
    std::vector<double> all;
    for (std::size_t i = 0; i < e.samples; ++i) {
        const auto th = eigen_angles(build(sampler.next().alphas, topo));
        all.insert(all.end(), th.begin(), th.end());
    }
    const EmpiricalMeasure mu(std::move(all));
    const GridDensity rho = bandwidth > 0 ? density_estimate(mu, KdeOptions{bandwidth, bins})
                                          : density_estimate(mu, HistogramOptions{bins});
    w.table("dos", to_csv(rho), json::parse(to_json(rho)));
    auto fc = json::parse(to_json(fourier_coeffs(mu, k_max)));
    fc["mass"] = rho.mass();
    fc["atoms"] = mu.size();
    fc["acceptance_rate"] = sampler.acceptance_rate();
    w.emit_json("fourier", fc);
    return 0;
}

int cmd_minimize(const std::string& side, double beta, const std::string& potential, const SolverParams& sp,
                 Writer& w) {
    if (side == "circular") {
        const auto v = potential.empty() ? Potential::zero() : Potential::parse(potential);
        const auto s = minimize_torus(v, beta, sp);
        const auto fe = free_energy_torus(s.density, v, beta);
        w.table("density", to_csv(s.density), json::parse(to_json(s.density)));
        auto j = json::parse(sidecar_json(beta, v, s.density.size(), s.residual, s.iterations, "torus_uniform"));
        j["free_energy"] = {{"interaction", fe.interaction},
                            {"log2_constant", fe.log2_constant},
                            {"potential", fe.potential},
                            {"entropy", fe.entropy},
                            {"total", fe.total},
                            {"normalized", fe.total - beta * std::log(2.0)}};
        j["euler_lagrange_residual"] = s.residual;
        w.emit_json("minimize", j);
        return 0;
    }
    const auto v = potential.empty() ? Potential::zero(Potential::Kind::Interval) : Potential::parse(potential);
    const auto s = minimize_interval(v, beta, sp);
    const auto fe = free_energy_interval(s.density, v, beta);
    std::vector<double> x(s.density.q().size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.density.grid().x(static_cast<int>(i));
    w.table("density", to_csv(s.density), json{{"x", x}, {"rho", s.density.q()}});
    auto j = json::parse(sidecar_json(beta, v, sp.grid_size, s.residual, s.iterations, "interval_double_exponential"));
    j["free_energy"] = {{"interaction", fe.interaction},
                        {"potential", fe.potential},
                        {"entropy", fe.entropy},
                        {"total", fe.total}};
    j["euler_lagrange_residual"] = s.residual;
    j["tail_mass"] = s.tail_mass;
    w.emit_json("minimize", j);
    return 0;
}

std::vector<Complex> random_initial(Flow flow, int n, double radius, std::uint64_t seed) {
    Rng rng(seed, 0);
    std::vector<Complex> a(n);
    for (auto& z : a) {
        if (flow == Flow::Schur)
            z = radius * (2.0 * rng.uniform() - 1.0);
        else
            z = std::polar(radius * std::sqrt(rng.uniform()), 2.0 * std::numbers::pi * rng.uniform());
    }
    return a;
}

struct DynamicsOpts {
    std::string flow = "al";
    int n = 32;
    double radius = 0.5;
    IntegratorParams ip;
    bool no_gauge = false;
    bool lax = false;
    std::size_t invariance_samples = 0;
    double beta = 1.0;
    std::string potential;
};

int cmd_dynamics(DynamicsOpts d, const Globals& g, Writer& w) {
    const Flow flow = parse_flow(d.flow);
    d.ip.include_gauge_term = !d.no_gauge;
    const FlowState init{random_initial(flow, d.n, d.radius, g.seed), 0.0};
    const auto traj = integrate(init, flow, d.ip);
    auto jf = json::array();
    for (const auto& f : traj.frames) jf.push_back({{"t", f.time}, {"alphas", complex_array(f.alphas)}});
    w.table("trajectory", to_csv(traj), json{{"flow", d.flow}, {"frames", jf}});
    auto report = json::parse(to_json(conservation_report(traj, d.ip.ell_max)));
    report["flow"] = d.flow;
    report["n"] = d.n;
    report["dt"] = d.ip.dt;
    report["t_final"] = d.ip.t_final;
    w.emit_json("conservation", report);
    if (d.lax) {
        auto rows = json::array();
        std::vector<double> probes{1e-2, 5e-3, 2.5e-3, 1.25e-3}, res;
        for (double p : probes) {
            const auto r = lax_residual(init, p, std::min(1e-4, p), d.ip.include_gauge_term);
            res.push_back(r.residual);
            rows.push_back({{"dt_probe", p}, {"residual", r.residual}, {"commutator_gap", r.commutator_gap}});
        }
        const double order = std::log(res.front() / res.back()) / std::log(probes.front() / probes.back());
        w.emit_json("lax", {{"probes", rows}, {"fitted_order", order}});
    }
    if (d.invariance_samples > 0) {
        const auto interval = flow == Flow::Schur;
        Potential v = d.potential.empty() ? Potential::zero(interval ? Potential::Kind::Interval : Potential::Kind::Torus)
                                          : Potential::parse(d.potential);
        McmcParams m;
        m.seed = g.seed;
        m.samples = d.invariance_samples;
        const EnsembleSpec spec{interval ? EnsembleKind::Schur : EnsembleKind::AL, d.n, d.beta, v};
        const auto r = gge_invariance_test(spec, d.ip.t_final, d.invariance_samples, m, d.ip, g.threads);
        w.emit_json("invariance", json::parse(to_json(r)));
    }
    return 0;
}

int report_checks(const std::vector<CheckReport>& reports, Writer& w, std::ostream& err, const std::string& stem) {
    auto arr = json::array();
    std::vector<std::string> failed;
    for (const auto& r : reports) {
        arr.push_back(r.to_json());
        if (!r.pass) failed.push_back(r.check);
    }
    w.emit_json(stem, {{"checks", arr}, {"pass", failed.empty()}});
    for (const auto& f : failed) err << "FAILED: " << f << "\n";
    return failed.empty() ? 0 : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized Gibbs ensemble laboratory for the Ablowitz-Ladik and Schur lattices", "gge-lab"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed (falls back to $GGE_SEED, then 0)");
    app.add_option("--threads", g.threads, "worker threads; 0 uses the hardware count");
    app.add_option("--out", g.out_dir, "output directory; stdout when omitted");
    app.add_option("--format", g.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", g.config, "flat key=value file merged under the flags");

    EnsembleOpts ens;
    bool angles = false;
    auto* sample = app.add_subcommand("sample", "draw Verblunsky vectors from an ensemble");
    ens.add(sample, true);
    sample->add_flag("--angles", angles, "also write eigen-angles");

    auto* dos = app.add_subcommand("dos", "Monte Carlo density of states");
    ens.add(dos, true);
    int bins = 64, k_max = 32;
    double bandwidth = 0.0;
    dos->add_option("--bins", bins, "histogram bins (KDE grid size with --kde)");
    dos->add_option("--kde", bandwidth, "wrapped-Gaussian KDE bandwidth; 0 selects the histogram");
    dos->add_option("--k-max", k_max, "Fourier coefficients reported");

    auto* minimize = app.add_subcommand("minimize", "equilibrium measure of the free-energy functional");
    std::string side = "circular", potential;
    double beta = 1.0;
    SolverParams sp;
    minimize->add_option("--side", side, "circular | jacobi")->check(CLI::IsMember({"circular", "jacobi"}));
    minimize->add_option("--beta", beta)->required();
    minimize->add_option("--potential", potential);
    minimize->add_option("--grid", sp.grid_size, "grid nodes");
    minimize->add_option("--tolerance", sp.tolerance);
    minimize->add_option("--max-iterations", sp.max_iterations);
    minimize->add_option("--damping", sp.damping, "torus fixed-point damping");

    auto* relation = app.add_subcommand("relation", "Monte Carlo DOS against d/dbeta(beta mu_beta)");
    ens.add(relation, true);
    DosParams dp;
    relation->add_option("--delta", dp.delta, "finite-difference step; 0 selects 0.05 beta");
    relation->add_option("--threshold", dp.d_threshold, "pass threshold on distance D");
    relation->add_option("--z-threshold", dp.z_threshold, "pass threshold on |z| per moment");
    relation->add_option("--k-max", dp.k_max, "modes entering D");
    relation->add_option("--chains", dp.chains, "independent Markov chains");
    relation->add_option("--grid", dp.solver.grid_size, "solver grid nodes");

    auto* dynamics = app.add_subcommand("dynamics", "integrate the AL or Schur flow");
    DynamicsOpts dy;
    dynamics->add_option("--flow", dy.flow, "al | schur")->check(CLI::IsMember({"al", "schur"}));
    dynamics->add_option("--n", dy.n, "lattice size (even)");
    dynamics->add_option("--radius", dy.radius, "random initial data satisfy |alpha_j| <= radius");
    dynamics->add_option("--dt", dy.ip.dt);
    dynamics->add_option("--t-final", dy.ip.t_final);
    dynamics->add_option("--frame-every", dy.ip.frame_every, "steps between stored frames; 0 keeps endpoints");
    dynamics->add_option("--ell-max", dy.ip.ell_max, "trace powers tracked");
    dynamics->add_flag("--no-gauge", dy.no_gauge, "drop the 2 alpha_j term of the AL equation");
    dynamics->add_flag("--lax", dy.lax, "report the Lax residual over a dt_probe ladder");
    dynamics->add_option("--invariance-samples", dy.invariance_samples, "GGE invariance test size; 0 skips");
    dynamics->add_option("--beta", dy.beta, "GGE beta for the invariance test");
    dynamics->add_option("--potential", dy.potential, "GGE potential for the invariance test");

    auto* verify = app.add_subcommand("verify", "lemma assertion suites");
    VerifyParams vp;
    verify->add_option("--check", vp.only, "run only these checks")->check(CLI::IsMember(verify_check_names()));
    verify->add_option("--trials", vp.trials, "matrix trials per suite");
    verify->add_option("--samples", vp.coupling_samples, "draws per coupling suite");

    auto* fe = app.add_subcommand("free-energy", "normalized free energy by thermodynamic integration");
    ens.add(fe, true);
    FreeEnergyParams fp;
    int s_points = 9;
    bool with_relation = false;
    double fe_delta = 0.1;
    fe->add_option("--s-points", s_points, "coupling grid points on [0, 1]")->check(CLI::Range(2, 1025));
    fe->add_option("--chains", fp.chains, "independent Markov chains per grid point");
    fe->add_flag("--relation", with_relation, "compare against d/dbeta(beta F_C) (AL only)");
    fe->add_option("--delta", fe_delta, "finite-difference step for --relation");

    std::vector<std::string> args;
    try {
        args = merge_config(raw_args);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    if (seed_opt->count()) {
        g.seed = seed_flag;
    } else if (const char* env = std::getenv("GGE_SEED")) {
        try {
            g.seed = std::stoull(env);
        } catch (const std::exception&) {
            err << "error: GGE_SEED must be an unsigned integer\n";
            return kUsage;
        }
        seed_opt->add_result(env);
    }
    const CLI::App* sub = app.get_subcommands().front();
    Writer w(g, config_hash(app, *sub), out);

    try {
        if (sub == sample) return cmd_sample(ens, angles, g, w);
        if (sub == dos) return cmd_dos(ens, bins, bandwidth, k_max, g, w);
        if (sub == minimize) return cmd_minimize(side, beta, potential, sp, w);
        if (sub == relation) {
            dp.threads = g.threads;
            const auto r = check_dos_relation(ens.spec(), ens.mcmc(g.seed), dp);
            return report_checks({to_report(r)}, w, err, "relation");
        }
        if (sub == dynamics) return cmd_dynamics(dy, g, w);
        if (sub == verify) {
            vp.seed = g.seed;
            vp.threads = g.threads;
            return report_checks(run_verify_suite(vp), w, err, "verify");
        }
        if (sub == fe) {
            fp.threads = g.threads;
            fp.mcmc = ens.mcmc(g.seed);
            fp.s_grid.resize(s_points);
            for (int i = 0; i < s_points; ++i) fp.s_grid[i] = static_cast<double>(i) / (s_points - 1);
            const auto spec = ens.spec();
            if (with_relation) {
                if (spec.kind != EnsembleKind::AL) throw ConfigError("--relation needs --ensemble al");
                const auto r = check_free_energy_relation(spec.potential, spec.beta, fe_delta, spec.size, fp, {});
                return report_checks({to_report(r, spec.potential, spec.beta, fe_delta, spec.size)}, w, err,
                                     "free_energy_relation");
            }
            const auto est = estimate_free_energy(spec, fp);
            w.emit_json("free_energy", {{"ensemble", ens.ensemble},
                                        {"n", ens.n},
                                        {"beta", ens.beta},
                                        {"potential", spec.potential.to_string()},
                                        {"value", est.value},
                                        {"std_error", est.std_error},
                                        {"trapezoid_error", est.discretization_error},
                                        {"method", est.method},
                                        {"s_grid", est.s_grid},
                                        {"integrand", est.integrand},
                                        {"integrand_se", est.integrand_se},
                                        {"acceptance", est.acceptance},
                                        {"normalization", est.normalization},
                                        {"warnings", est.warnings}});
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}

}  // namespace gge::cli
