#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gge/cmv.hpp"
#include "gge/potential.hpp"

namespace gge {

// Uniform atoms on eigen-angles in [−π, π).
class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(std::vector<double> angles);  // wraps into [−π, π) and sorts
    static EmpiricalMeasure of(const CmvMatrix& m);

    const std::vector<double>& angles() const noexcept { return angles_; }
    std::size_t size() const noexcept { return angles_.size(); }

private:
    std::vector<double> angles_;
};

// x_j = cos θ_j, one point per conjugate pair.
class IntervalEmpiricalMeasure {
public:
    IntervalEmpiricalMeasure() = default;
    explicit IntervalEmpiricalMeasure(std::vector<double> points);
    // Pairs the spectrum of a real CMV matrix: of the 2n sorted values cos θ_j,
    // consecutive equal pairs are averaged.
    static IntervalEmpiricalMeasure from_paired_angles(const std::vector<double>& angles);

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }

private:
    std::vector<double> points_;
};

// Nonnegative density on θ_i = −π + 2πi/M, trapezoid mass 1.
class GridDensity {
public:
    GridDensity() = default;
    // Validates entries (finite; nonnegative unless allow_negative) and
    // rescales to unit mass when normalize is set.
    explicit GridDensity(std::vector<double> values, bool normalize = true, bool allow_negative = false);
    static GridDensity uniform(int m);
    static GridDensity from_function(int m, const std::function<double(double)>& rho, bool normalize = true);

    int size() const noexcept { return static_cast<int>(values_.size()); }
    double theta(int i) const noexcept;
    double step() const noexcept;
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](int i) const { return values_[i]; }
    double mass() const noexcept;

    // μ̂_k for k = 0..M/2 (trapezoid rule, exact for trig polynomials of degree < M).
    const std::vector<Complex>& fourier() const;

private:
    std::vector<double> values_;
    mutable std::vector<Complex> fourier_;
};

struct FourierCoeffs {
    int k_max = 0;
    std::vector<Complex> c;  // c[k−1] = μ̂_k

    Complex operator()(int k) const { return c[k - 1]; }
};

constexpr int kDefaultDistanceKmax = 256;

FourierCoeffs fourier_coeffs(const EmpiricalMeasure& mu, int k_max);
// Coefficients above M/2 are not resolved by the grid and are reported as 0.
FourierCoeffs fourier_coeffs(const GridDensity& rho, int k_max);

struct Distance {
    double value = 0.0;
    int k_max = 0;  // truncation level actually used
};

// D = √(Σ_{k ≤ k_max} |μ̂_k − ν̂_k|²/k).
Distance distance_D(const FourierCoeffs& a, const FourierCoeffs& b);
template <class A, class B>
Distance distance_D(const A& mu, const B& nu, int k_max = kDefaultDistanceKmax) {
    return distance_D(fourier_coeffs(mu, k_max), fourier_coeffs(nu, k_max));
}

double integrate(const std::function<double(double)>& f, const EmpiricalMeasure& mu);
double integrate(const std::function<double(double)>& f, const GridDensity& rho);
double integrate(const std::function<double(double)>& f, const IntervalEmpiricalMeasure& mu);

struct HistogramOptions {
    int bins = 64;
};
struct KdeOptions {
    double bandwidth = 0.05;
    int grid_size = 256;
};

// Node i carries the bin [θ_i, θ_i + 2π/bins).
GridDensity density_estimate(const EmpiricalMeasure& mu, const HistogramOptions& opt);
// Wrapped-Gaussian KDE, evaluated exactly through the Fourier series of the atoms.
GridDensity density_estimate(const EmpiricalMeasure& mu, const KdeOptions& opt);

struct TestFunction {
    std::string name;
    std::function<double(double)> f;
    double bv_norm;   // total variation over one turn
    double lip_norm;  // w.r.t. the chord distance |e^{iθ} − e^{iφ}|; ∞ if not Lipschitz
};

std::vector<TestFunction> default_dictionary();

struct BvLipEntry {
    std::string name;
    double lhs = 0.0;  // |∫f dμ(A) − ∫f dμ(B)|
    double bv_rhs = 0.0;
    double lip_rhs = 0.0;
    bool bv_ok = true;
    bool lip_ok = true;
};

struct BvLipReport {
    int n = 0;
    int rank = 0;
    double entry_sum = 0.0;  // Σ|(A−B)_{ij}|
    std::vector<BvLipEntry> entries;
    int violations = 0;
};

BvLipReport check_bv_lip_bound(const CmvMatrix& a, const CmvMatrix& b,
                               const std::vector<TestFunction>& dictionary = default_dictionary(),
                               double slack = 1e-12);
BvLipReport check_bv_lip_bound(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                               const std::vector<TestFunction>& dictionary = default_dictionary(),
                               double slack = 1e-12);

std::string to_csv(const EmpiricalMeasure& mu);
std::string to_csv(const GridDensity& rho);
std::string to_json(const GridDensity& rho);
std::string to_json(const FourierCoeffs& c);

}  // namespace gge
