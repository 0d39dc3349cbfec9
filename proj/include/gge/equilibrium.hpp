#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gge/potential.hpp"
#include "gge/spectral.hpp"

namespace gge {

struct SolverParams {
    double damping = 0.5;       // γ ∈ (0, 1]
    double tolerance = 1e-10;   // sup-norm of the log-density update
    int max_iterations = 20000;
    int grid_size = 1024;       // torus nodes, or interval nodes
    // Interval grid: t ∈ [−T, T], θ(t) = π/(1 + e^{−a sinh t}).
    double interval_half_width = 18.0;
    double interval_scale = 1.0;
};

struct FreeEnergyBreakdown {
    double interaction = 0.0;  // full interaction part including the β ln 2 constant (torus)
    double interaction_fourier = 0.0;  // torus: β Σ|ρ̂_k|²/k; interval: −β∬ln|x−y|
    double log2_constant = 0.0;        // torus: +β ln 2; interval: 0
    double potential = 0.0;
    double entropy = 0.0;  // torus: ∫ρ ln ρ + ln 2π; interval: ∫ln(ρ(1−x²)) dμ
    double total = 0.0;
};

// ---- torus -----------------------------------------------------------------

// f(μ) = −β∬ln|e^{iθ}−e^{iφ}| dμdμ + β ln 2 + ∫V dμ + ∫ρ ln ρ + ln 2π, with the
// double-log term evaluated as β Σ_{k≥1} |ρ̂_k|²/k.
FreeEnergyBreakdown free_energy_torus(const GridDensity& rho, const Potential& v, double beta);

// L[ρ](θ_i) = ∫ ln|e^{iθ_i} − e^{iφ}| ρ(φ) dφ = −Σ_{k≥1} Re(e^{ikθ} conj ρ̂_k)/k, via FFT.
std::vector<double> log_potential_torus(const GridDensity& rho);

struct TorusSolution {
    GridDensity density;
    double residual = 0.0;   // sup-deviation of ln ρ + V − 2βL[ρ] from its mean
    double last_update = 0.0;
    int iterations = 0;
    double beta = 0.0;
};

// Damped log-space fixed point of ρ ∝ exp(−V + 2βL[ρ]). The effective damping is
// min(γ, 1/(1+β)), which keeps the linearized map contractive on every Fourier mode.
TorusSolution minimize_torus(const Potential& v, double beta, const SolverParams& params = {},
                             const GridDensity* initial = nullptr);

// Normalized circular free energy F_C(V, β) = min f_β^V − β ln 2 (zero at V = 0).
double circular_free_energy(const Potential& v, double beta, const SolverParams& params = {});

// ---- interval --------------------------------------------------------------

// Double-exponentially clustered nodes in θ ∈ (0, π): θ(t) = π/(1 + e^{−a sinh t}).
// Logs of θ, π−θ and sin θ are stored so that nothing is evaluated at the endpoints.
class IntervalGrid {
public:
    struct Params {
        int nodes = 1024;
        double half_width = 18.0;
        double scale = 1.0;
        bool operator==(const Params&) const = default;
    };

    explicit IntervalGrid(const Params& p);
    // Grids are expensive (the kernel matrix is M×M); identical parameters share one.
    static std::shared_ptr<const IntervalGrid> shared(const Params& p);

    const Params& params() const noexcept { return p_; }
    int size() const noexcept { return p_.nodes; }
    double step() const noexcept { return h_; }
    double t(int i) const { return t_[i]; }
    double theta(int i) const { return theta_[i]; }
    double x(int i) const { return x_[i]; }
    double weight(int i) const { return w_[i]; }
    double log_sigma_prime(int i) const { return lsig_[i]; }
    // ln g with g = θ(π−θ)/(π sin θ); dθ/dt = σ'(t)·g·sin θ.
    double log_g(int i) const { return lg_[i]; }
    double log_sin_theta(int i) const { return lsin_[i]; }
    double log_theta(int i) const { return lth_[i]; }
    double log_pi_minus_theta(int i) const { return lpt_[i]; }

    // U_i = ∫ ln|x_i − y| dμ(y) for dμ = q(t)dt, by product integration of the
    // exact kernel against piecewise-linear q.
    std::vector<double> log_potential(const std::vector<double>& q) const;
    using KernelMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    KernelMap kernel() const { return KernelMap(kernel_.data(), p_.nodes, p_.nodes); }

private:
    Params p_;
    double h_;
    std::vector<double> t_, theta_, x_, w_, lsig_, lg_, lsin_, lth_, lpt_;
    std::vector<double> kernel_;  // row-major M×M
};

// A measure on [−1, 1] stored as its density q in the grid variable t.
class IntervalDensity {
public:
    IntervalDensity() = default;
    IntervalDensity(std::shared_ptr<const IntervalGrid> grid, std::vector<double> q, bool normalize = true,
                    bool allow_negative = false);
    // From a density in θ ∈ (0, π), given through its logarithm at (θ, ln θ, ln(π−θ)).
    static IntervalDensity from_log_theta_density(
        std::shared_ptr<const IntervalGrid> grid,
        const std::function<double(double theta, double log_theta, double log_pi_minus_theta)>& log_rho_theta);
    static IntervalDensity arcsine(std::shared_ptr<const IntervalGrid> grid);

    const IntervalGrid& grid() const { return *grid_; }
    std::shared_ptr<const IntervalGrid> grid_ptr() const { return grid_; }
    const std::vector<double>& q() const noexcept { return q_; }
    int size() const noexcept { return static_cast<int>(q_.size()); }

    double mass() const;
    double integrate(const std::function<double(double x)>& f) const;
    double chebyshev_moment(int k) const;  // ∫T_k(x) dμ = ∫cos kθ dμ
    double power_moment(int k) const;      // ∫x^k dμ
    // ln ρ_x(x_i), the density with respect to dx.
    double log_density_x(int i) const;
    IntervalDensity mirrored() const;  // push-forward under x ↦ −x

private:
    std::shared_ptr<const IntervalGrid> grid_;
    std::vector<double> q_;
};

// q(μ) = ∫(V + ln(1−x²)) dμ − β∬ln|x−y| dμdμ + ∫ln ρ dμ.
FreeEnergyBreakdown free_energy_interval(const IntervalDensity& rho, const Potential& v, double beta);

struct IntervalSolution {
    IntervalDensity density;
    double residual = 0.0;   // sup-deviation of ln ρ + V + ln(1−x²) − 2βU[ρ] from its mean
    double last_update = 0.0;
    int iterations = 0;
    double tail_mass = 0.0;  // estimated mass beyond ±T
    double beta = 0.0;
};

// Euler–Lagrange fixed point ρ ∝ (1−x²)^{−1} exp(−V + 2βU[ρ]) on the clustered grid,
// solved by Newton's method with backtracking; params.damping is not used here.
IntervalSolution minimize_interval(const Potential& v, double beta, const SolverParams& params = {},
                                   const IntervalDensity* initial = nullptr);

// ---- β-derivative ----------------------------------------------------------

struct BetaDerivativeTorus {
    GridDensity density;            // may carry small negative values
    double delta = 0.0;
    double min_value = 0.0;
    double richardson_gap = 0.0;    // sup |ν_δ − ν_{δ/2}|
    double error_estimate = 0.0;    // (4/3)·richardson_gap, the O(δ²) error of ν_δ
    double max_residual = 0.0;
    std::vector<std::string> warnings;
};

struct BetaDerivativeInterval {
    IntervalDensity density;
    double delta = 0.0;
    double min_value = 0.0;
    double richardson_gap = 0.0;
    double error_estimate = 0.0;
    double max_residual = 0.0;
    std::vector<double> chebyshev_error;  // per-moment O(δ²) estimates, k = 0..4
    std::vector<std::string> warnings;
};

// [(β+δ)μ_{β+δ} − (β−δ)μ_{β−δ}]/(2δ) pointwise; δ ≤ 0 selects 0.05β.
BetaDerivativeTorus beta_derivative_torus(const Potential& v, double beta, double delta,
                                          const SolverParams& params = {}, bool richardson = true);
BetaDerivativeInterval beta_derivative_interval(const Potential& v, double beta, double delta,
                                                const SolverParams& params = {}, bool richardson = true);

std::string to_csv(const IntervalDensity& rho);
std::string sidecar_json(double beta, const Potential& v, int grid_size, double residual, int iterations,
                         const std::string& grid_kind);

}  // namespace gge
