#pragma once

#include <span>
#include <string>
#include <vector>

#include "gge/cmv.hpp"
#include "gge/sampling.hpp"

namespace gge {

enum class Flow { AL, Schur };

const char* to_string(Flow f);
Flow parse_flow(const std::string& name);

struct FlowState {
    std::vector<Complex> alphas;  // α_1..α_N, periodic
    double time = 0.0;
};

struct IntegratorParams {
    double dt = 1e-3;
    double t_final = 1.0;
    int frame_every = 0;  // steps between stored frames; 0 keeps only the endpoints
    bool include_gauge_term = true;  // the 2α_j term of the AL equation
    int ell_max = 4;                 // traces tracked for the per-frame drift
};

// i α̇_j = −(α_{j+1} + α_{j−1} − 2α_j) + |α_j|²(α_{j−1} + α_{j+1}).
// Dropping the 2α_j term changes the flow by the global phase rotation e^{2it}.
std::vector<Complex> al_rhs(std::span<const Complex> alphas, bool include_gauge_term = true);
// α̇_j = ρ_j²(α_{j+1} − α_{j−1}); complex input is rejected.
std::vector<double> schur_rhs(std::span<const double> alphas);
std::vector<double> schur_rhs(std::span<const Complex> alphas);

struct Trajectory {
    Flow flow = Flow::AL;
    double dt = 0.0;
    std::vector<FlowState> frames;
    std::vector<double> drift;  // per frame: max relative drift of K0, K1 and Tr ℰ^ℓ
};

// Fixed-step classical RK4.
Trajectory integrate(const FlowState& initial, Flow flow, const IntegratorParams& params);

// K⁽⁰⁾ = ∏(1 − |α_j|²), K⁽¹⁾ = −Σ α_j ᾱ_{j+1} and Tr ℰ^ℓ for ℓ = 1..ell_max.
struct Invariants {
    double k0 = 1.0;
    Complex k1 = 0.0;
    std::vector<Complex> traces;
};

Invariants invariants(std::span<const Complex> alphas, int ell_max);

struct ConservationReport {
    int ell_max = 0;
    int frames = 0;
    double k0_drift = 0.0;             // max |K0(t) − K0(0)| / K0(0)
    double k1_drift = 0.0;             // max |K1(t) − K1(0)| / N
    std::vector<double> trace_drift;   // max |Tr ℰ^ℓ(t) − Tr ℰ^ℓ(0)| / N
    double max_drift = 0.0;
    double max_modulus = 0.0;          // max |α_j(t)|
    double unitarity = 0.0;            // max ‖ℰℰ† − I‖ along the frames
};

ConservationReport conservation_report(const Trajectory& traj, int ell_max);

struct LaxResidual {
    double residual = 0.0;        // ‖(ℰ(t+δ) − ℰ(t))/δ − i[ℰ, B]‖_max
    double commutator_gap = 0.0;  // ‖[ℰ, ℰ⁺ + (ℰ⁺)†] − [ℰ, ℰ⁺ − (ℰ†)⁺]‖_max
};

// ℰ(t+δ) comes from RK4 steps of size at most dt. B = ℰ⁺ + (ℰ⁺)† + Γ with
// Γ = diag(−1, +1, −1, …) when the gauge term is on (Γ generates its phase rotation).
LaxResidual lax_residual(const FlowState& state, double dt_probe, double dt = 1e-4,
                         bool include_gauge_term = true);

struct InvarianceStat {
    std::string name;
    double mean_before = 0.0;
    double mean_after = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

struct InvarianceReport {
    std::size_t samples = 0;
    double t_final = 0.0;
    std::vector<InvarianceStat> stats;
    double min_p = 1.0;
    double max_trace_drift = 0.0;  // per-trajectory conservation check, relative to N
};

// Two independent GGE ensembles of n_samples states (disjoint RNG streams); the
// second is flowed to t_final. Each statistic gets a Welch z-test.
InvarianceReport gge_invariance_test(const EnsembleSpec& spec, double t_final, std::size_t n_samples,
                                     const McmcParams& mcmc, const IntegratorParams& params = {},
                                     int threads = 0);

std::string to_csv(const Trajectory& traj);
std::string to_json(const ConservationReport& r);
std::string to_json(const InvarianceReport& r);

}  // namespace gge
