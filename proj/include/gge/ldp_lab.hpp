#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gge/equilibrium.hpp"
#include "gge/sampling.hpp"
#include "gge/spectral.hpp"

namespace gge {

// Uniform JSON shape for every check: {check, parameters, statistics, pass}.
struct CheckReport {
    std::string check;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json statistics = nlohmann::json::object();
    bool pass = false;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

// ---- lemma suites ---------------------------------------------------------------

// |α_ν − α_{ν+h}| ≤ Z_h and |ρ_ν − ρ_{ν+h}| ≤ Z_h on every draw (slack 1e-14).
CheckReport check_coupling_lemma(double nu, double h, std::size_t n_samples, std::uint64_t seed, int threads = 0);
// Z_h ≤ Z_{h'} under the shared construction.
CheckReport check_monotone_coupling(double h, double h_prime, std::size_t n_samples, std::uint64_t seed);
// KS test of Z_h against its law P(Z_h ≤ w) = w^h.
CheckReport check_z_law(double h, std::size_t n_samples, std::uint64_t seed, double level = 0.01);

// a(h) = −½ ln h + 1.
double exp_moment_rate(double h);
// E[exp(a(h) Z_h)] = h∫₀¹ e^{a(h)w} w^{h−1} dw, computed as ∫₀¹ exp(a(h) u^{1/h}) du.
double exp_moment_quadrature(double h);
// Monte Carlo vs quadrature within 3σ at each grid point; reports K = max quadrature value.
CheckReport check_exp_moment(const std::vector<double>& h_grid, std::size_t n_samples, std::uint64_t seed,
                             int threads = 0);

// Σ|(ℒA)_{ij}| ≤ 2Σ|A_{ij}| and Σ|(Aℳ)_{ij}| ≤ 2Σ|A_{ij}| for random A and factors.
CheckReport check_product_bounds(std::size_t trials, std::uint64_t seed);
// BV/Lipschitz integral bounds with the rank of ℰ − ℰ' for one- and all-site changes.
CheckReport check_distance_rank_bound(std::size_t trials, std::uint64_t seed);

// ---- free energies ---------------------------------------------------------------

struct FreeEnergyParams {
    std::vector<double> s_grid{0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
    McmcParams mcmc;  // samples = kept states per coupling point (split over chains)
    int chains = 8;
    int threads = 0;
};

struct FreeEnergyEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double discretization_error = 0.0;  // trapezoid error in s (fine vs coarse grid)
    std::string method = "thermodynamic_integration";
    std::vector<double> s_grid;
    std::vector<double> integrand;     // E_{sV}[Tr V / n_norm]
    std::vector<double> integrand_se;
    std::vector<double> acceptance;
    int normalization = 0;  // N for torus ensembles, n = N/2 for interval ones
    std::vector<std::string> warnings;
};

// F(V) = −(1/n) ln E_0[e^{−Tr V}] = ∫₀¹ E_{sV}[Tr V/n] ds, the free energy normalized to vanish at V = 0.
FreeEnergyEstimate estimate_free_energy(const EnsembleSpec& spec, const FreeEnergyParams& params);

struct FreeEnergyRelation {
    FreeEnergyEstimate al;
    double derivative = 0.0;        // [(β+δ)F_C(β+δ) − (β−δ)F_C(β−δ)]/(2δ)
    double derivative_half = 0.0;   // same with δ/2
    double derivative_error = 0.0;  // (4/3)|d(δ) − d(δ/2)|
    double discrepancy = 0.0;
    double budget = 0.0;            // √(se² + trapezoid² + derivative_error²)
    bool pass = false;
};

FreeEnergyRelation check_free_energy_relation(const Potential& v, double beta, double delta, int n,
                                              const FreeEnergyParams& params, const SolverParams& solver = {});
CheckReport to_report(const FreeEnergyRelation& r, const Potential& v, double beta, double delta, int n);

// ---- density of states ------------------------------------------------------------

struct DosParams {
    int k_max = 32;        // Fourier / Chebyshev modes entering D
    int chains = 16;       // fixed, so results do not depend on the thread count
    int threads = 0;
    double delta = 0.0;    // 0 selects 0.05β
    double d_threshold = 0.02;
    double z_threshold = 3.0;
    SolverParams solver;
};

struct MomentRow {
    std::string name;
    double mc = 0.0;
    double mc_se = 0.0;
    double target = 0.0;
    double target_error = 0.0;
    double z = 0.0;
};

struct RelationReport {
    EnsembleKind ensemble = EnsembleKind::AL;
    double beta = 0.0;
    std::string potential;
    int size = 0;
    std::size_t mc_samples = 0;
    double d_value = 0.0;
    double d_noise = 0.0;  // √(Σ se_k²/k), the D expected from Monte Carlo noise alone
    double solver_residual = 0.0;
    double acceptance = 1.0;
    std::vector<MomentRow> moments;
    double mean_x = 0.0;     // interval only
    double mean_x_se = 0.0;
    bool pass = false;
    std::vector<std::string> warnings;
};

// Ensemble-averaged empirical spectral measure of the GGE vs ∂_β(βμ_β^V).
RelationReport check_dos_relation(const EnsembleSpec& spec, const McmcParams& mcmc, const DosParams& params = {});
CheckReport to_report(const RelationReport& r);

// ---- rate functions -------------------------------------------------------------

// I_β^V(μ) = f_β^V(μ) − min f_β^V.
double rate_function_value(const GridDensity& mu, const Potential& v, double beta, const SolverParams& solver = {});
// Q(μ) = q_β^V(μ) − min q_β^V on the grid of μ.
double rate_function_value(const IntervalDensity& mu, const Potential& v, double beta,
                           const SolverParams& solver = {});

// ---- verify suite ----------------------------------------------------------------

struct VerifyParams {
    std::uint64_t seed = 0;
    int threads = 0;
    std::size_t trials = 1000;          // lemma suites
    std::size_t coupling_samples = 100000;
    std::vector<std::string> only;  // check names to run; empty runs all
};

const std::vector<std::string>& verify_check_names();

std::vector<CheckReport> run_verify_suite(const VerifyParams& params);

}  // namespace gge
