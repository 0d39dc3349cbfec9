#include "gge/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gge/error.hpp"

namespace gge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Largest double below 1. Draws that round onto the circle are pulled back
// here so interior coefficients stay strictly inside the disk.
const double kInsideOne = std::nextafter(1.0, 0.0);

Complex clamp_inside(Complex z) {
    double r = std::abs(z);
    if (r < kInsideOne) return z;
    return z * (kInsideOne / r);
}

void require_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw DomainError("beta must be positive, got " + std::to_string(beta));
}

}  // namespace

Complex sample_theta(const ThetaParams& params, Rng& rng, ThetaMethod method) {
    const double nu = params.nu;
    if (!(nu > 1.0)) throw DomainError("Theta_nu requires nu > 1, got " + std::to_string(nu));
    if (method == ThetaMethod::Polar) {
        // |z|² ~ Beta(1, (ν−1)/2) by inversion: P(|z|² > u) = (1−u)^{(ν−1)/2}.
        double v = rng.uniform_open();
        double r2 = -std::expm1(std::log(v) * 2.0 / (nu - 1.0));
        double phase = kTwoPi * rng.uniform();
        return clamp_inside(std::polar(std::sqrt(r2), phase));
    }
    double x1 = rng.normal(), x2 = rng.normal();
    double y = sample_chi(nu - 1.0, rng);
    return clamp_inside(Complex(x1, x2) / std::sqrt(x1 * x1 + x2 * x2 + y * y));
}

double sample_chi(double dof, Rng& rng) {
    if (!(dof > 0.0)) throw DomainError("chi requires dof > 0, got " + std::to_string(dof));
    return std::sqrt(rng.gamma(0.5 * dof, 2.0));
}

CoupledPair sample_coupled_pair(double nu, double h, Rng& rng) {
    if (!(nu > 1.0)) throw DomainError("coupling requires nu > 1");
    if (!(h > 0.0 && h < 1.0)) throw DomainError("coupling requires 0 < h < 1");
    double x1 = rng.normal(), x2 = rng.normal();
    double y = sample_chi(nu - 1.0, rng);
    double yh = sample_chi(h, rng);
    double g = x1 * x1 + x2 * x2;
    Complex x(x1, x2);
    CoupledPair p;
    p.alpha_nu = x / std::sqrt(g + y * y);
    p.alpha_nu_h = x / std::sqrt(g + y * y + yh * yh);
    p.z_h = yh / std::sqrt(g + yh * yh);
    p.h = h;
    return p;
}

double sample_z(double h, Rng& rng) {
    if (!(h > 0.0)) throw DomainError("Z_h requires h > 0");
    double x1 = rng.normal(), x2 = rng.normal();
    double yh = sample_chi(h, rng);
    return yh / std::sqrt(x1 * x1 + x2 * x2 + yh * yh);
}

MonotoneZ sample_monotone_z(double h, double h_prime, Rng& rng) {
    if (!(h > 0.0 && h < h_prime)) throw DomainError("monotone coupling requires 0 < h < h'");
    double x1 = rng.normal(), x2 = rng.normal();
    double yh = sample_chi(h, rng);
    double extra = sample_chi(h_prime - h, rng);
    double g = x1 * x1 + x2 * x2;
    double y2 = yh * yh, y2p = y2 + extra * extra;
    return {std::sqrt(y2 / (g + y2)), std::sqrt(y2p / (g + y2p))};
}

const char* to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::AL: return "al";
        case EnsembleKind::Schur: return "schur";
        case EnsembleKind::Circular: return "circular";
        case EnsembleKind::Jacobi: return "jacobi";
    }
    return "?";
}

EnsembleKind parse_ensemble(const std::string& name) {
    if (name == "al") return EnsembleKind::AL;
    if (name == "schur") return EnsembleKind::Schur;
    if (name == "circular") return EnsembleKind::Circular;
    if (name == "jacobi") return EnsembleKind::Jacobi;
    throw ConfigError("unknown ensemble '" + name + "' (al, schur, circular, jacobi)");
}

Topology topology_of(EnsembleKind k) {
    return (k == EnsembleKind::AL || k == EnsembleKind::Schur) ? Topology::Periodic : Topology::Open;
}

Complex SiteLaw::draw(Rng& rng) const {
    switch (kind) {
        case Kind::Theta: return sample_theta({param}, rng);
        case Kind::CircleUniform: return std::polar(1.0, kTwoPi * rng.uniform());
        case Kind::SymmetricBeta: {
            // (1+α)/2 = G₁/(G₁+G₂) ⇒ α = tanh((ln G₁ − ln G₂)/2); log form survives s ≪ 1.
            double d = rng.log_gamma_variate(param) - rng.log_gamma_variate(param);
            double a = std::tanh(0.5 * d);
            return Complex(std::clamp(a, -kInsideOne, kInsideOne), 0.0);
        }
        case Kind::Fixed: return fixed_value;
    }
    return 0.0;
}

GibbsSampler::GibbsSampler(std::vector<SiteLaw> laws, Topology topology, BoundaryMode mode,
                           Potential potential, McmcParams mcmc, std::uint64_t stream)
    : laws_(std::move(laws)),
      topology_(topology),
      mode_(mode),
      potential_(std::move(potential)),
      mcmc_(mcmc),
      rng_(mcmc.seed, stream),
      exact_(potential_.is_zero()) {
    const int n = size();
    if (n < 2) throw ShapeError("ensemble needs N >= 2");
    if (mcmc_.samples < 1) throw ConfigError("mcmc samples must be >= 1");
    if (mcmc_.thinning && *mcmc_.thinning < 1) throw ConfigError("thinning must be >= 1");
    if (potential_.kind() == Potential::Kind::Interval && n % 2 != 0)
        throw ShapeError("interval potentials need an even matrix size");
    alpha_.resize(n);
    rho_.resize(n);
    for (int j = 0; j < n; ++j)
        if (laws_[j].kind != SiteLaw::Kind::Fixed) updatable_.push_back(j);
    if (!exact_) {
        const int d = potential_.degree();
        rows_.resize(n);
        for (int j : updatable_) rows_[j] = affected_rows(n, topology_, j, d);
    }
    draw_all();
}

void GibbsSampler::draw_all() {
    for (std::size_t j = 0; j < laws_.size(); ++j) {
        alpha_[j] = laws_[j].draw(rng_);
        rho_[j] = rho_of(alpha_[j]);
    }
}

double GibbsSampler::acceptance_rate() const noexcept {
    return proposals_ == 0 ? 1.0 : static_cast<double>(accepted_) / proposals_;
}

void GibbsSampler::site_update(int site) {
    const Complex proposal = laws_[site].draw(rng_);
    ++proposals_;
    const int d = potential_.degree();
    CmvRowSource src(alpha_, rho_, topology_);
    const auto& rows = rows_[site];
    auto before = partial_trace_powers(src, rows, d);
    const Complex old_alpha = alpha_[site];
    const double old_rho = rho_[site];
    alpha_[site] = proposal;
    rho_[site] = rho_of(proposal);
    auto after = partial_trace_powers(src, rows, d);
    double dv = 0.0;
    if (potential_.kind() == Potential::Kind::Torus) {
        for (int k = 1; k <= d; ++k) {
            Complex dt = after[k] - before[k];
            dv += potential_.c(k) * dt.real() + potential_.s(k) * dt.imag();
        }
    } else {
        for (int k = 1; k <= d; ++k) dv += 0.5 * potential_.t(k) * (after[k] - before[k]).real();
    }
    if (dv <= 0.0 || rng_.uniform() < std::exp(-dv)) {
        ++accepted_;
        return;
    }
    alpha_[site] = old_alpha;
    rho_[site] = old_rho;
}

void GibbsSampler::advance(std::size_t updates) {
    for (std::size_t u = 0; u < updates; ++u) {
        site_update(updatable_[cursor_]);
        cursor_ = (cursor_ + 1) % updatable_.size();
    }
}

Sample GibbsSampler::next() {
    const std::size_t n = laws_.size();
    if (exact_) {
        if (emitted_ > 0) draw_all();
    } else if (updatable_.empty()) {
        // Nothing to update; the state is deterministic.
    } else if (!burned_in_) {
        advance(mcmc_.burn_in.value_or(10 * n) * n);
        burned_in_ = true;
    } else {
        advance(mcmc_.thinning.value_or(n));
    }
    Sample s{VerblunskyVector(alpha_, mode_), rng_.seed(), rng_.stream(), emitted_};
    ++emitted_;
    return s;
}

namespace {

std::vector<Sample> collect(GibbsSampler sampler, std::size_t count) {
    std::vector<Sample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.next());
    return out;
}

}  // namespace

GibbsSampler make_circular_sampler(int n, double beta_tilde, const Potential& potential,
                                   const McmcParams& mcmc, std::uint64_t stream) {
    if (n < 2) throw ShapeError("circular ensemble needs N >= 2");
    require_beta(beta_tilde);
    std::vector<SiteLaw> laws(n);
    for (int j = 1; j <= n - 1; ++j) laws[j - 1] = {SiteLaw::Kind::Theta, beta_tilde * (n - j) + 1.0};
    laws[n - 1] = {SiteLaw::Kind::CircleUniform, 0.0};
    return GibbsSampler(std::move(laws), Topology::Open, BoundaryMode::LastOnCircle, potential, mcmc,
                        stream);
}

GibbsSampler make_jacobi_sampler(int n, double beta, const Potential& potential,
                                 const McmcParams& mcmc, std::uint64_t stream) {
    if (n < 1) throw ShapeError("Jacobi ensemble needs n >= 1");
    require_beta(beta);
    const int size = 2 * n;
    std::vector<SiteLaw> laws(size);
    for (int j = 1; j <= size - 1; ++j)
        laws[j - 1] = {SiteLaw::Kind::SymmetricBeta, beta * (1.0 - j / (2.0 * n))};
    laws[size - 1] = {SiteLaw::Kind::Fixed, 0.0, Complex(-1.0, 0.0)};
    return GibbsSampler(std::move(laws), Topology::Open, BoundaryMode::LastMinusOne, potential, mcmc,
                        stream);
}

GibbsSampler make_sampler(const EnsembleSpec& spec, const McmcParams& mcmc, std::uint64_t stream) {
    require_beta(spec.beta);
    const int n = spec.size;
    switch (spec.kind) {
        case EnsembleKind::AL:
        case EnsembleKind::Schur: {
            if (n < 2 || n % 2 != 0)
                throw ShapeError("AL/Schur ensembles need even N >= 2, got " + std::to_string(n));
            SiteLaw law = spec.kind == EnsembleKind::AL
                              ? SiteLaw{SiteLaw::Kind::Theta, 2.0 * spec.beta + 1.0}
                              : SiteLaw{SiteLaw::Kind::SymmetricBeta, spec.beta};
            return GibbsSampler(std::vector<SiteLaw>(n, law), Topology::Periodic,
                                BoundaryMode::AllInterior, spec.potential, mcmc, stream);
        }
        case EnsembleKind::Circular:
            return make_circular_sampler(n, 2.0 * spec.beta / n, spec.potential, mcmc, stream);
        case EnsembleKind::Jacobi:
            if (n < 2 || n % 2 != 0) throw ShapeError("Jacobi ensemble needs even N = 2n");
            // The B-law shapes s_j = β(1 − j/2n) already absorb β̃ = 2β/n.
            return make_jacobi_sampler(n / 2, spec.beta, spec.potential, mcmc, stream);
    }
    throw ConfigError("unknown ensemble");
}

std::vector<Sample> sample_al_gge(const EnsembleSpec& spec, const McmcParams& mcmc,
                                  std::uint64_t stream) {
    if (spec.kind != EnsembleKind::AL) throw ConfigError("sample_al_gge needs an AL spec");
    return collect(make_sampler(spec, mcmc, stream), mcmc.samples);
}

std::vector<Sample> sample_schur_gge(const EnsembleSpec& spec, const McmcParams& mcmc,
                                     std::uint64_t stream) {
    if (spec.kind != EnsembleKind::Schur) throw ConfigError("sample_schur_gge needs a Schur spec");
    return collect(make_sampler(spec, mcmc, stream), mcmc.samples);
}

std::vector<Sample> sample_circular_beta(int n, double beta_tilde, const Potential& potential,
                                         const McmcParams& mcmc, std::uint64_t stream) {
    return collect(make_circular_sampler(n, beta_tilde, potential, mcmc, stream), mcmc.samples);
}

std::vector<Sample> sample_jacobi_beta(int n, double beta, const Potential& potential,
                                       const McmcParams& mcmc, std::uint64_t stream) {
    return collect(make_jacobi_sampler(n, beta, potential, mcmc, stream), mcmc.samples);
}

}  // namespace gge
