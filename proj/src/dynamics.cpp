#include "gge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "gge/error.hpp"
#include "gge/parallel.hpp"
#include "gge/stats.hpp"

namespace gge {

const char* to_string(Flow f) { return f == Flow::AL ? "al" : "schur"; }

Flow parse_flow(const std::string& name) {
    if (name == "al" || name == "AL") return Flow::AL;
    if (name == "schur" || name == "Schur") return Flow::Schur;
    throw ConfigError("unknown flow '" + name + "' (expected al or schur)");
}

std::vector<Complex> al_rhs(std::span<const Complex> a, bool include_gauge_term) {
    const std::size_t n = a.size();
    std::vector<Complex> out(n);
    const double g = include_gauge_term ? 2.0 : 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Complex ap = a[(j + 1) % n];
        const Complex am = a[(j + n - 1) % n];
        const Complex r = -(ap + am - g * a[j]) + std::norm(a[j]) * (am + ap);
        out[j] = Complex(0.0, -1.0) * r;
    }
    return out;
}

std::vector<double> schur_rhs(std::span<const double> a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double rho2 = (1.0 - a[j]) * (1.0 + a[j]);
        out[j] = rho2 * (a[(j + 1) % n] - a[(j + n - 1) % n]);
    }
    return out;
}

std::vector<double> schur_rhs(std::span<const Complex> a) {
    std::vector<double> re(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j].imag() != 0.0) throw DomainError("schur_rhs: the Schur flow needs real coefficients");
        re[j] = a[j].real();
    }
    return schur_rhs(re);
}

Invariants invariants(std::span<const Complex> a, int ell_max) {
    const std::size_t n = a.size();
    Invariants inv;
    for (std::size_t j = 0; j < n; ++j) {
        inv.k0 *= (1.0 - std::abs(a[j])) * (1.0 + std::abs(a[j]));
        inv.k1 -= a[j] * std::conj(a[(j + 1) % n]);
    }
    if (ell_max > 0) {
        const VerblunskyVector v(std::vector<Complex>(a.begin(), a.end()));
        inv.traces = trace_powers(build_periodic_cmv(v), ell_max);
    }
    return inv;
}

namespace {

double relative_drift(const Invariants& a, const Invariants& b, std::size_t n) {
    double d = std::abs(b.k0 - a.k0) / a.k0;
    d = std::max(d, std::abs(b.k1 - a.k1) / static_cast<double>(n));
    for (std::size_t l = 0; l < a.traces.size(); ++l)
        d = std::max(d, std::abs(b.traces[l] - a.traces[l]) / static_cast<double>(n));
    return d;
}

void check_state(const std::vector<Complex>& a, double t, double dt) {
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double r = std::abs(a[j]);
        if (!(r <= 1.0 + 1e-8)) {
            char buf[192];
            std::snprintf(buf, sizeof buf,
                          "integrate: |alpha_%zu| = %.12g left the unit disk at t = %.6g; reduce dt (now %.3g)", j + 1,
                          r, t, dt);
            throw StabilityError(buf);
        }
    }
}

void rk4_al(std::vector<Complex>& a, double h, bool gauge) {
    const std::size_t n = a.size();
    std::vector<Complex> tmp(n);
    const auto k1 = al_rhs(a, gauge);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + 0.5 * h * k1[j];
    const auto k2 = al_rhs(tmp, gauge);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + 0.5 * h * k2[j];
    const auto k3 = al_rhs(tmp, gauge);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + h * k3[j];
    const auto k4 = al_rhs(tmp, gauge);
    for (std::size_t j = 0; j < n; ++j) a[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

void rk4_schur(std::vector<double>& a, double h) {
    const std::size_t n = a.size();
    std::vector<double> tmp(n);
    const auto k1 = schur_rhs(std::span<const double>(a));
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + 0.5 * h * k1[j];
    const auto k2 = schur_rhs(std::span<const double>(tmp));
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + 0.5 * h * k2[j];
    const auto k3 = schur_rhs(std::span<const double>(tmp));
    for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] + h * k3[j];
    const auto k4 = schur_rhs(std::span<const double>(tmp));
    for (std::size_t j = 0; j < n; ++j) a[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

// Advances a state by `steps` RK4 steps of size h.
void advance(std::vector<Complex>& a, Flow flow, double h, long steps, bool gauge, double t0) {
    if (flow == Flow::AL) {
        for (long s = 0; s < steps; ++s) {
            rk4_al(a, h, gauge);
            check_state(a, t0 + (s + 1) * h, h);
        }
        return;
    }
    std::vector<double> re(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) re[j] = a[j].real();
    for (long s = 0; s < steps; ++s) {
        rk4_schur(re, h);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (!(std::abs(re[j]) <= 1.0 + 1e-8)) {
                for (std::size_t k = 0; k < a.size(); ++k) a[k] = Complex(re[k], 0.0);
                check_state(a, t0 + (s + 1) * h, h);
            }
    }
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = Complex(re[j], 0.0);
}

}  // namespace

Trajectory integrate(const FlowState& initial, Flow flow, const IntegratorParams& p) {
    if (!(p.dt > 0.0) || !(p.t_final >= 0.0)) throw ConfigError("integrate: dt must be positive and t_final nonnegative");
    if (p.t_final > 0.0 && p.dt > p.t_final) throw ConfigError("integrate: dt exceeds t_final");
    if (initial.alphas.size() < 2) throw ShapeError("integrate: need at least two coefficients");
    if (flow == Flow::Schur) schur_rhs(std::span<const Complex>(initial.alphas));  // realness check
    check_state(initial.alphas, initial.time, p.dt);

    const long steps = p.t_final > 0.0 ? std::lround(std::ceil(p.t_final / p.dt - 1e-9)) : 0;
    const double h = steps > 0 ? p.t_final / steps : 0.0;
    const long every = p.frame_every > 0 ? p.frame_every : std::max(1L, steps);

    Trajectory traj;
    traj.flow = flow;
    traj.dt = h;
    const std::size_t n = initial.alphas.size();
    const bool track = n >= 2 && n % 2 == 0;
    const Invariants inv0 = track ? invariants(initial.alphas, p.ell_max) : Invariants{};
    traj.frames.push_back(initial);
    traj.drift.push_back(0.0);

    std::vector<Complex> a = initial.alphas;
    long done = 0;
    while (done < steps) {
        const long chunk = std::min(every, steps - done);
        advance(a, flow, h, chunk, p.include_gauge_term, initial.time + done * h);
        done += chunk;
        FlowState s{a, initial.time + done * h};
        traj.drift.push_back(track ? relative_drift(inv0, invariants(a, p.ell_max), n) : 0.0);
        traj.frames.push_back(std::move(s));
    }
    return traj;
}

ConservationReport conservation_report(const Trajectory& traj, int ell_max) {
    if (traj.frames.empty()) throw ConfigError("conservation_report: empty trajectory");
    ConservationReport r;
    r.ell_max = ell_max;
    r.frames = static_cast<int>(traj.frames.size());
    r.trace_drift.assign(ell_max, 0.0);
    const auto& a0 = traj.frames.front().alphas;
    const double n = static_cast<double>(a0.size());
    const Invariants inv0 = invariants(a0, ell_max);
    for (const auto& f : traj.frames) {
        const Invariants inv = invariants(f.alphas, ell_max);
        r.k0_drift = std::max(r.k0_drift, std::abs(inv.k0 - inv0.k0) / inv0.k0);
        r.k1_drift = std::max(r.k1_drift, std::abs(inv.k1 - inv0.k1) / n);
        for (int l = 0; l < ell_max; ++l)
            r.trace_drift[l] = std::max(r.trace_drift[l], std::abs(inv.traces[l] - inv0.traces[l]) / n);
        for (const auto& x : f.alphas) r.max_modulus = std::max(r.max_modulus, std::abs(x));
        r.unitarity = std::max(r.unitarity, unitarity_residual(build_periodic_cmv(VerblunskyVector(f.alphas))));
    }
    r.max_drift = std::max(r.k0_drift, r.k1_drift);
    for (double d : r.trace_drift) r.max_drift = std::max(r.max_drift, d);
    return r;
}

LaxResidual lax_residual(const FlowState& state, double dt_probe, double dt, bool include_gauge_term) {
    if (!(dt_probe > 0.0) || !(dt > 0.0)) throw ConfigError("lax_residual: step sizes must be positive");
    const auto& a = state.alphas;
    const std::size_t n = a.size();
    const Eigen::MatrixXcd e0 = build_periodic_cmv(VerblunskyVector(a)).to_dense();
    std::vector<Complex> b = a;
    const long steps = std::max(1L, std::lround(std::ceil(dt_probe / dt - 1e-9)));
    advance(b, Flow::AL, dt_probe / steps, steps, include_gauge_term, state.time);
    const Eigen::MatrixXcd e1 = build_periodic_cmv(VerblunskyVector(b)).to_dense();

    const Eigen::MatrixXcd p = plus_part(e0);
    Eigen::MatrixXcd bmat = p + p.adjoint();
    if (include_gauge_term)
        for (std::size_t j = 0; j < n; ++j) bmat(j, j) += j % 2 == 0 ? -1.0 : 1.0;
    const Complex i(0.0, 1.0);
    const Eigen::MatrixXcd lhs = (e1 - e0) / dt_probe;
    const Eigen::MatrixXcd rhs = i * (e0 * bmat - bmat * e0);
    LaxResidual r;
    r.residual = (lhs - rhs).cwiseAbs().maxCoeff();
    const Eigen::MatrixXcd b1 = p + p.adjoint();
    const Eigen::MatrixXcd b2 = p - plus_part(e0.adjoint());
    r.commutator_gap = ((e0 * b1 - b1 * e0) - (e0 * b2 - b2 * e0)).cwiseAbs().maxCoeff();
    return r;
}

InvarianceReport gge_invariance_test(const EnsembleSpec& spec, double t_final, std::size_t n_samples,
                                     const McmcParams& mcmc, const IntegratorParams& params, int threads) {
    if (n_samples < 30) throw ConfigError("gge_invariance_test: need at least 30 samples per ensemble");
    if (spec.kind != EnsembleKind::AL && spec.kind != EnsembleKind::Schur)
        throw ConfigError("gge_invariance_test: only the AL and Schur ensembles carry a flow");
    const Flow flow = spec.kind == EnsembleKind::AL ? Flow::AL : Flow::Schur;
    constexpr int kTraces = 4;
    const int nstats = kTraces + 1;
    // rows: [sample][stat] before (streams 0..n−1) and after (streams n..2n−1)
    std::vector<double> before(n_samples * nstats), after(n_samples * nstats);
    std::vector<double> drift(n_samples, 0.0);
    McmcParams one = mcmc;
    one.samples = 1;
    IntegratorParams ip = params;
    ip.t_final = t_final;
    ip.frame_every = 0;
    auto stats_of = [&](const std::vector<Complex>& a, double* out) {
        const auto inv = invariants(a, kTraces);
        for (int k = 0; k < kTraces; ++k) out[k] = inv.traces[k].real();
        double s = 0.0;
        for (const auto& x : a) s += std::norm(x);
        out[kTraces] = s / static_cast<double>(a.size());
    };
    parallel_for(2 * n_samples, threads, [&](std::size_t idx) {
        auto sampler = make_sampler(spec, one, idx);
        const auto sample = sampler.next();
        if (idx < n_samples) {
            stats_of(sample.alphas.entries(), &before[idx * nstats]);
            return;
        }
        const std::size_t k = idx - n_samples;
        FlowState s0{sample.alphas.entries(), 0.0};
        if (t_final > 0.0) {
            const auto traj = integrate(s0, flow, ip);
            const auto& end = traj.frames.back().alphas;
            stats_of(end, &after[k * nstats]);
            const auto i0 = invariants(s0.alphas, kTraces);
            const auto i1 = invariants(end, kTraces);
            double d = 0.0;
            for (int l = 0; l < kTraces; ++l)
                d = std::max(d, std::abs(i1.traces[l] - i0.traces[l]) / static_cast<double>(end.size()));
            drift[k] = d;
        } else {
            stats_of(s0.alphas, &after[k * nstats]);
        }
    });

    InvarianceReport r;
    r.samples = n_samples;
    r.t_final = t_final;
    for (double d : drift) r.max_trace_drift = std::max(r.max_trace_drift, d);
    for (int s = 0; s < nstats; ++s) {
        std::vector<double> x(n_samples), y(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k) {
            x[k] = before[k * nstats + s];
            y[k] = after[k * nstats + s];
        }
        InvarianceStat st;
        st.name = s < kTraces ? "re_tr_E" + std::to_string(s + 1) : "mean_abs_alpha_sq";
        st.mean_before = stats::mean_se(x).mean;
        st.mean_after = stats::mean_se(y).mean;
        const auto z = stats::two_sample_z(x, y);
        st.z = z.z;
        st.p_value = z.p_value;
        r.min_p = std::min(r.min_p, st.p_value);
        r.stats.push_back(st);
    }
    return r;
}

std::string to_csv(const Trajectory& traj) {
    std::string out = "t";
    const std::size_t n = traj.frames.empty() ? 0 : traj.frames.front().alphas.size();
    for (std::size_t j = 1; j <= n; ++j) out += ",re_alpha_" + std::to_string(j) + ",im_alpha_" + std::to_string(j);
    out += '\n';
    char buf[64];
    for (const auto& f : traj.frames) {
        std::snprintf(buf, sizeof buf, "%.17g", f.time);
        out += buf;
        for (const auto& a : f.alphas) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", a.real(), a.imag());
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string to_json(const ConservationReport& r) {
    nlohmann::json j;
    j["ell_max"] = r.ell_max;
    j["frames"] = r.frames;
    j["k0_drift"] = r.k0_drift;
    j["k1_drift"] = r.k1_drift;
    j["trace_drift"] = r.trace_drift;
    j["max_drift"] = r.max_drift;
    j["max_modulus"] = r.max_modulus;
    j["unitarity"] = r.unitarity;
    return j.dump(2);
}

std::string to_json(const InvarianceReport& r) {
    nlohmann::json j;
    j["samples"] = r.samples;
    j["t_final"] = r.t_final;
    j["min_p"] = r.min_p;
    j["max_trace_drift"] = r.max_trace_drift;
    for (const auto& s : r.stats)
        j["stats"].push_back({{"name", s.name}, {"mean_before", s.mean_before}, {"mean_after", s.mean_after},
                              {"z", s.z}, {"p_value", s.p_value}});
    return j.dump(2);
}

}  // namespace gge
