#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "gge/cmv.hpp"
#include "gge/potential.hpp"
#include "gge/rng.hpp"

namespace gge {

struct ThetaParams {
    double nu = 3.0;
};

enum class ThetaMethod { Polar, Representation };

// Θ_ν: density ((ν−1)/2π)(1−|z|²)^{(ν−3)/2} on the unit disk.
Complex sample_theta(const ThetaParams& params, Rng& rng, ThetaMethod method = ThetaMethod::Polar);

// √G with G ~ Gamma(dof/2, scale 2); fractional dof allowed.
double sample_chi(double dof, Rng& rng);

struct CoupledPair {
    Complex alpha_nu;
    Complex alpha_nu_h;
    double z_h = 0.0;
    double h = 0.0;
};

// α_ν and α_{ν+h} share X₁, X₂, Y_{ν−1}; Z_h = Y_h/√(X₁²+X₂²+Y_h²).
CoupledPair sample_coupled_pair(double nu, double h, Rng& rng);

// Z_h from the same construction (X₁, X₂ Gaussian, Y_h ~ χ_h).
double sample_z(double h, Rng& rng);

// Z_h and Z_{h'} for h < h' from shared X₁, X₂, Y_h, with Y_{h'}² = Y_h² + χ²_{h'−h}.
struct MonotoneZ {
    double z_h = 0.0;
    double z_h_prime = 0.0;
};
MonotoneZ sample_monotone_z(double h, double h_prime, Rng& rng);

struct McmcParams {
    std::size_t samples = 1;               // emitted states
    std::optional<std::size_t> burn_in;    // sweeps of N site updates; default 10·N
    std::optional<std::size_t> thinning;   // site updates between emissions; default N
    std::uint64_t seed = 0;
};

enum class EnsembleKind { AL, Schur, Circular, Jacobi };

const char* to_string(EnsembleKind k);
EnsembleKind parse_ensemble(const std::string& name);

// size is the matrix dimension N (for Jacobi N = 2n). beta is the
// high-temperature parameter; Circular and Jacobi rescale it internally
// to β̃ = 2β/N and 2β/n.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::AL;
    int size = 2;
    double beta = 1.0;
    Potential potential;
};

// Marginal law of one Verblunsky coefficient at zero potential.
struct SiteLaw {
    enum class Kind { Theta, CircleUniform, SymmetricBeta, Fixed };
    Kind kind = Kind::Theta;
    double param = 3.0;       // ν for Theta, s for SymmetricBeta
    Complex fixed_value = 0;  // for Fixed

    Complex draw(Rng& rng) const;
};

struct Sample {
    VerblunskyVector alphas;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t index = 0;
};

// Exact product-law draws at zero potential; otherwise Metropolis-within-Gibbs
// with the zero-potential marginal as an independence proposal, so a site
// move is accepted with probability min(1, exp(−ΔTr V(ℰ))).
class GibbsSampler {
public:
    GibbsSampler(std::vector<SiteLaw> laws, Topology topology, BoundaryMode mode,
                 Potential potential, McmcParams mcmc, std::uint64_t stream = 0);

    Sample next();

    bool exact() const noexcept { return exact_; }
    double acceptance_rate() const noexcept;
    std::size_t proposals() const noexcept { return proposals_; }
    int size() const noexcept { return static_cast<int>(laws_.size()); }
    Topology topology() const noexcept { return topology_; }
    const Potential& potential() const noexcept { return potential_; }

private:
    void draw_all();
    void site_update(int site);
    void advance(std::size_t updates);

    std::vector<SiteLaw> laws_;
    Topology topology_;
    BoundaryMode mode_;
    Potential potential_;
    McmcParams mcmc_;
    Rng rng_;
    bool exact_;
    bool burned_in_ = false;
    std::vector<Complex> alpha_;
    std::vector<double> rho_;
    std::vector<int> updatable_;
    std::vector<std::vector<int>> rows_;  // affected rows per site
    std::size_t cursor_ = 0;
    std::size_t proposals_ = 0;
    std::size_t accepted_ = 0;
    std::uint64_t emitted_ = 0;
};

GibbsSampler make_sampler(const EnsembleSpec& spec, const McmcParams& mcmc, std::uint64_t stream = 0);
GibbsSampler make_circular_sampler(int n, double beta_tilde, const Potential& potential,
                                   const McmcParams& mcmc, std::uint64_t stream = 0);
GibbsSampler make_jacobi_sampler(int n, double beta, const Potential& potential,
                                 const McmcParams& mcmc, std::uint64_t stream = 0);

std::vector<Sample> sample_al_gge(const EnsembleSpec& spec, const McmcParams& mcmc,
                                  std::uint64_t stream = 0);
std::vector<Sample> sample_schur_gge(const EnsembleSpec& spec, const McmcParams& mcmc,
                                     std::uint64_t stream = 0);
std::vector<Sample> sample_circular_beta(int n, double beta_tilde, const Potential& potential,
                                         const McmcParams& mcmc, std::uint64_t stream = 0);
// n is the half-size; vectors have length 2n with α_{2n} = −1.
std::vector<Sample> sample_jacobi_beta(int n, double beta, const Potential& potential,
                                       const McmcParams& mcmc, std::uint64_t stream = 0);

Topology topology_of(EnsembleKind k);

}  // namespace gge
