#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gge/potential.hpp"

namespace gge {

using Complex = std::complex<double>;

enum class BoundaryMode { AllInterior, LastOnCircle, LastMinusOne };
enum class Topology { Periodic, Open };

const char* to_string(Topology t);

// α_1..α_N, stored 0-based. Interior entries satisfy |α| < 1; the last entry
// may be constrained by the boundary mode.
class VerblunskyVector {
public:
    VerblunskyVector() = default;
    explicit VerblunskyVector(std::vector<Complex> entries,
                              BoundaryMode mode = BoundaryMode::AllInterior);
    static VerblunskyVector from_real(const std::vector<double>& entries,
                                      BoundaryMode mode = BoundaryMode::AllInterior);

    std::size_t size() const noexcept { return a_.size(); }
    const Complex& operator[](std::size_t j) const { return a_[j]; }
    const std::vector<Complex>& entries() const noexcept { return a_; }
    BoundaryMode mode() const noexcept { return mode_; }

    // ρ_j = √(1 − |α_j|²), computed as √((1−|α|)(1+|α|)) to keep precision near the circle.
    double rho(std::size_t j) const;
    std::vector<double> rhos() const;
    bool is_real() const noexcept;

private:
    std::vector<Complex> a_;
    BoundaryMode mode_ = BoundaryMode::AllInterior;
};

double rho_of(Complex alpha);

// [[ᾱ, ρ], [ρ, −α]].
Eigen::Matrix2cd build_xi(Complex alpha);

// Compressed sparse rows. Structurally nonzero entries are stored even when
// their value happens to be 0, so the pattern is a property of the shape only.
class SparseMatrix {
public:
    struct Entry {
        int col;
        Complex value;
    };

    SparseMatrix() = default;
    SparseMatrix(int n, std::vector<int> row_ptr, std::vector<Entry> entries);

    int dimension() const noexcept { return n_; }
    std::span<const Entry> row(int r) const {
        return {entries_.data() + row_ptr_[r], entries_.data() + row_ptr_[r + 1]};
    }
    Complex at(int r, int c) const;
    std::size_t nnz() const noexcept { return entries_.size(); }
    Eigen::MatrixXcd to_dense() const;

private:
    int n_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<Entry> entries_;
};

class CmvMatrix {
public:
    CmvMatrix(SparseMatrix e, Topology topology) : e_(std::move(e)), topology_(topology) {}

    int dimension() const noexcept { return e_.dimension(); }
    Topology topology() const noexcept { return topology_; }
    const SparseMatrix& sparse() const noexcept { return e_; }
    Complex at(int r, int c) const { return e_.at(r, c); }
    Eigen::MatrixXcd to_dense() const { return e_.to_dense(); }

private:
    SparseMatrix e_;
    Topology topology_;
};

// The two factors: (ℒ, ℳ) for periodic, (L, M) for open.
struct CmvFactors {
    SparseMatrix first;
    SparseMatrix second;
};

CmvFactors periodic_factors(const VerblunskyVector& v);
CmvFactors open_factors(const VerblunskyVector& v);

CmvMatrix build_periodic_cmv(const VerblunskyVector& v);
CmvMatrix build_cmv(const VerblunskyVector& v);
CmvMatrix build(const VerblunskyVector& v, Topology topology);

// Column set allowed in each row, derived from the block positions.
std::vector<std::vector<int>> expected_pattern(int n, Topology topology);

double unitarity_residual(const CmvMatrix& m);

constexpr int kDefaultEigenCap = 512;

std::vector<double> eigen_angles(const CmvMatrix& m, int max_dim = kDefaultEigenCap);
std::vector<double> eigen_angles(const Eigen::MatrixXcd& dense);

// Tr(ℰ^ℓ) by banded propagation, cost O(N·ℓ·bandwidth) for ℓ ≪ N.
Complex trace_power(const CmvMatrix& m, int ell);
// Tr(ℰ^ℓ) for ℓ = 0..ell_max in one pass.
std::vector<Complex> trace_powers(const CmvMatrix& m, int ell_max);

// ℰ⁺: diagonal halved, entries (j, j+1) and (j, j+2) mod N kept.
Eigen::MatrixXcd e_plus(const CmvMatrix& m);
Eigen::MatrixXcd plus_part(const Eigen::MatrixXcd& a);

// Tr V(ℰ). Torus potentials sum over all N eigenvalues; interval potentials
// sum V(x_j) over the N/2 conjugate pairs of a real spectrum.
double trace_potential(const CmvMatrix& m, const Potential& p,
                       int degree_cap = Potential::kDefaultDegreeCap);
double trace_potential_from_traces(const std::vector<Complex>& traces, int n, const Potential& p);

struct ConservedQuantities {
    double k0 = 1.0;                 // ∏(1 − |α_j|²)
    std::vector<Complex> k_traces;   // Tr ℰ^ℓ, ℓ = 1..L
};

ConservedQuantities conserved_quantities(const VerblunskyVector& v, int ell_max);

// {"n": N, "topology": "...", "entries": [[row, col, re, im], ...]}, 1-based indices.
std::string to_json(const CmvMatrix& m);

// Row-level access to ℰ without materializing the matrix. Used by the
// Metropolis samplers to evaluate local changes of Tr ℰ^ℓ.
class CmvRowSource {
public:
    CmvRowSource(std::span<const Complex> alpha, std::span<const double> rho, Topology topology);

    int dimension() const noexcept { return static_cast<int>(alpha_.size()); }
    // Writes at most 4 entries of row r of ℰ (sorted by column); returns the count.
    int row(int r, SparseMatrix::Entry* out) const;
    // Rows of the first (ℒ or L) and second (ℳ or M) factor; at most 2 entries.
    int factor_row(bool first, int r, SparseMatrix::Entry* out) const;

private:

    std::span<const Complex> alpha_;
    std::span<const double> rho_;
    Topology topology_;
};

// Σ_{i ∈ rows} (ℰ^ℓ)_{ii} for ℓ = 1..ell_max (index 0 holds the row count).
std::vector<Complex> partial_trace_powers(const CmvRowSource& src, std::span<const int> rows,
                                          int ell_max);

// Rows whose diagonal entries of ℰ^ℓ, ℓ ≤ ell_max, can depend on α_site.
std::vector<int> affected_rows(int n, Topology topology, int site, int ell_max);

}  // namespace gge
