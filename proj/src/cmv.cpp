#include "gge/cmv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "gge/error.hpp"

namespace gge {

namespace {

constexpr double kDiskSlack = 1e-12;

using Entry = SparseMatrix::Entry;

int sorted_merge(Entry* buf, int count) {
    for (int i = 1; i < count; ++i)  // insertion sort, count <= 4
        for (int j = i; j > 0 && buf[j - 1].col > buf[j].col; --j) std::swap(buf[j - 1], buf[j]);
    int out = 0;
    for (int i = 0; i < count; ++i) {
        if (out > 0 && buf[out - 1].col == buf[i].col)
            buf[out - 1].value += buf[i].value;
        else
            buf[out++] = buf[i];
    }
    return out;
}

template <class RowFn>
SparseMatrix assemble(int n, RowFn&& row_fn) {
    std::vector<int> row_ptr(1, 0);
    std::vector<Entry> entries;
    entries.reserve(4 * n);
    Entry buf[8];
    for (int r = 0; r < n; ++r) {
        int cnt = row_fn(r, buf);
        entries.insert(entries.end(), buf, buf + cnt);
        row_ptr.push_back(static_cast<int>(entries.size()));
    }
    return SparseMatrix(n, std::move(row_ptr), std::move(entries));
}

// Diagonal entries of ℰ^ℓ summed over `rows`, by propagating unit row vectors.
// Buffers are kept zero outside the active set between steps.
template <class RowFn>
std::vector<Complex> propagate_diagonals(int n, RowFn&& row_fn, std::span<const int> rows,
                                         int ell_max) {
    std::vector<Complex> out(ell_max + 1, Complex(0.0));
    out[0] = static_cast<double>(rows.size());
    if (ell_max == 0) return out;
    std::vector<Complex> cur(n), nxt(n);
    std::vector<int> act, nact;
    std::vector<char> mark(n, 0);
    Entry buf[8];
    for (int i : rows) {
        act.assign(1, i);
        cur[i] = 1.0;
        for (int l = 1; l <= ell_max; ++l) {
            nact.clear();
            for (int r : act) {
                const Complex v = cur[r];
                cur[r] = 0.0;
                int cnt = row_fn(r, buf);
                for (int k = 0; k < cnt; ++k) {
                    int c = buf[k].col;
                    if (!mark[c]) {
                        mark[c] = 1;
                        nact.push_back(c);
                    }
                    nxt[c] += v * buf[k].value;
                }
            }
            for (int c : nact) mark[c] = 0;
            out[l] += nxt[i];
            std::swap(cur, nxt);
            std::swap(act, nact);
        }
        for (int r : act) cur[r] = 0.0;
    }
    return out;
}

}  // namespace

const char* to_string(Topology t) { return t == Topology::Periodic ? "periodic" : "open"; }

double rho_of(Complex alpha) {
    double r = std::abs(alpha);
    if (r >= 1.0) return 0.0;
    return std::sqrt((1.0 - r) * (1.0 + r));
}

VerblunskyVector::VerblunskyVector(std::vector<Complex> entries, BoundaryMode mode)
    : a_(std::move(entries)), mode_(mode) {
    if (a_.size() < 2) throw ShapeError("Verblunsky vector needs N >= 2");
    for (std::size_t j = 0; j < a_.size(); ++j) {
        double r = std::abs(a_[j]);
        if (!std::isfinite(r)) throw DomainError("non-finite Verblunsky coefficient");
        if (r > 1.0 + kDiskSlack)
            throw DomainError("|alpha_" + std::to_string(j + 1) + "| = " + std::to_string(r) +
                              " exceeds 1");
    }
    const Complex last = a_.back();
    if (mode_ == BoundaryMode::LastOnCircle && std::abs(std::abs(last) - 1.0) > kDiskSlack)
        throw DomainError("boundary mode LastOnCircle requires |alpha_N| = 1");
    if (mode_ == BoundaryMode::LastMinusOne && last != Complex(-1.0, 0.0))
        throw DomainError("boundary mode LastMinusOne requires alpha_N = -1");
}

VerblunskyVector VerblunskyVector::from_real(const std::vector<double>& entries, BoundaryMode mode) {
    std::vector<Complex> c(entries.begin(), entries.end());
    return VerblunskyVector(std::move(c), mode);
}

double VerblunskyVector::rho(std::size_t j) const { return rho_of(a_[j]); }

std::vector<double> VerblunskyVector::rhos() const {
    std::vector<double> r(a_.size());
    for (std::size_t j = 0; j < a_.size(); ++j) r[j] = rho_of(a_[j]);
    return r;
}

bool VerblunskyVector::is_real() const noexcept {
    return std::all_of(a_.begin(), a_.end(), [](const Complex& z) { return z.imag() == 0.0; });
}

Eigen::Matrix2cd build_xi(Complex alpha) {
    if (std::abs(alpha) > 1.0 + kDiskSlack) throw DomainError("build_xi requires |alpha| <= 1");
    const double r = rho_of(alpha);
    Eigen::Matrix2cd xi;
    xi << std::conj(alpha), r, r, -alpha;
    return xi;
}

SparseMatrix::SparseMatrix(int n, std::vector<int> row_ptr, std::vector<Entry> entries)
    : n_(n), row_ptr_(std::move(row_ptr)), entries_(std::move(entries)) {
    if (static_cast<int>(row_ptr_.size()) != n_ + 1) throw ShapeError("row_ptr size mismatch");
}

Complex SparseMatrix::at(int r, int c) const {
    for (const auto& e : row(r))
        if (e.col == c) return e.value;
    return 0.0;
}

Eigen::MatrixXcd SparseMatrix::to_dense() const {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n_, n_);
    for (int r = 0; r < n_; ++r)
        for (const auto& e : row(r)) d(r, e.col) += e.value;
    return d;
}

CmvRowSource::CmvRowSource(std::span<const Complex> alpha, std::span<const double> rho,
                           Topology topology)
    : alpha_(alpha), rho_(rho), topology_(topology) {}

int CmvRowSource::factor_row(bool first, int r, Entry* out) const {
    const int n = dimension();
    auto block_top = [&](int j) {  // row j is the upper row of Ξ(α_j)
        out[0] = {j, std::conj(alpha_[j])};
        out[1] = {(j + 1) % n, rho_[j]};
        return 2;
    };
    auto block_bottom = [&](int r0, int j) {  // row r0 is the lower row of Ξ(α_j)
        out[0] = {j, rho_[j]};
        out[1] = {r0, -alpha_[j]};
        return 2;
    };
    if (topology_ == Topology::Periodic) {
        // ℒ: Ξ(α_{2m}) on rows (2m, 2m+1). ℳ: Ξ(α_{2m+1}) on rows (2m+1, 2m+2 mod N).
        if (first) return (r % 2 == 0) ? block_top(r) : block_bottom(r, r - 1);
        return (r % 2 == 1) ? block_top(r) : block_bottom(r, (r - 1 + n) % n);
    }
    // Open: L = diag(Ξ_1, Ξ_3, ...), M = diag((1), Ξ_2, Ξ_4, ...), with a trailing
    // 1×1 block (ᾱ_N) in whichever factor has a row left over.
    if (first) {
        if (r % 2 == 0) {
            if (r + 1 < n) return block_top(r);
            out[0] = {r, std::conj(alpha_[r])};
            return 1;
        }
        return block_bottom(r, r - 1);
    }
    if (r == 0) {
        out[0] = {0, Complex(1.0)};
        return 1;
    }
    if (r % 2 == 1) {
        if (r + 1 < n) return block_top(r);
        out[0] = {r, std::conj(alpha_[r])};
        return 1;
    }
    return block_bottom(r, r - 1);
}

int CmvRowSource::row(int r, Entry* out) const {
    Entry f[2], s[2];
    int nf = factor_row(true, r, f);
    int cnt = 0;
    for (int a = 0; a < nf; ++a) {
        int ns = factor_row(false, f[a].col, s);
        for (int b = 0; b < ns; ++b) out[cnt++] = {s[b].col, f[a].value * s[b].value};
    }
    return sorted_merge(out, cnt);
}

namespace {

void check_periodic(const VerblunskyVector& v) {
    if (v.size() % 2 != 0)
        throw ShapeError("periodic CMV matrix needs even N, got " + std::to_string(v.size()));
}

CmvFactors make_factors(const VerblunskyVector& v, Topology t) {
    const auto rho = v.rhos();
    CmvRowSource src(v.entries(), rho, t);
    const int n = static_cast<int>(v.size());
    CmvFactors f;
    f.first = assemble(n, [&](int r, Entry* o) { return sorted_merge(o, src.factor_row(true, r, o)); });
    f.second = assemble(n, [&](int r, Entry* o) { return sorted_merge(o, src.factor_row(false, r, o)); });
    return f;
}

CmvMatrix make_cmv(const VerblunskyVector& v, Topology t) {
    const auto rho = v.rhos();
    CmvRowSource src(v.entries(), rho, t);
    return CmvMatrix(assemble(static_cast<int>(v.size()),
                              [&](int r, Entry* o) { return src.row(r, o); }),
                     t);
}

}  // namespace

CmvFactors periodic_factors(const VerblunskyVector& v) {
    check_periodic(v);
    return make_factors(v, Topology::Periodic);
}

CmvFactors open_factors(const VerblunskyVector& v) { return make_factors(v, Topology::Open); }

CmvMatrix build_periodic_cmv(const VerblunskyVector& v) {
    check_periodic(v);
    if (v.mode() != BoundaryMode::AllInterior)
        throw DomainError("periodic CMV matrix expects boundary mode AllInterior");
    return make_cmv(v, Topology::Periodic);
}

CmvMatrix build_cmv(const VerblunskyVector& v) { return make_cmv(v, Topology::Open); }

CmvMatrix build(const VerblunskyVector& v, Topology topology) {
    return topology == Topology::Periodic ? build_periodic_cmv(v) : build_cmv(v);
}

std::vector<std::vector<int>> expected_pattern(int n, Topology topology) {
    // Rows 2m and 2m+1 (0-based) reach columns 2m−1 .. 2m+2, wrapped or clipped.
    std::vector<std::vector<int>> pat(n);
    for (int r = 0; r < n; ++r) {
        int base = r - (r % 2);
        for (int c = base - 1; c <= base + 2; ++c) {
            int cc = c;
            if (topology == Topology::Periodic)
                cc = ((c % n) + n) % n;
            else if (c < 0 || c >= n)
                continue;
            pat[r].push_back(cc);
        }
        std::sort(pat[r].begin(), pat[r].end());
        pat[r].erase(std::unique(pat[r].begin(), pat[r].end()), pat[r].end());
    }
    return pat;
}

double unitarity_residual(const CmvMatrix& m) {
    Eigen::MatrixXcd d = m.to_dense();
    Eigen::MatrixXcd r = d.adjoint() * d - Eigen::MatrixXcd::Identity(d.rows(), d.cols());
    return r.cwiseAbs().maxCoeff();
}

std::vector<double> eigen_angles(const Eigen::MatrixXcd& dense) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(dense, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge", std::numeric_limits<double>::infinity());
    const auto& ev = es.eigenvalues();
    std::vector<double> out(ev.size());
    double worst = 0.0;
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
        worst = std::max(worst, std::abs(std::abs(ev[j]) - 1.0));
        double th = std::arg(ev[j]);
        if (th >= std::numbers::pi) th -= 2.0 * std::numbers::pi;
        out[j] = th;
    }
    if (worst > 1e-9)
        throw NumericalError("eigenvalues off the unit circle by " + std::to_string(worst), worst);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> eigen_angles(const CmvMatrix& m, int max_dim) {
    if (m.dimension() > max_dim)
        throw ConfigError("dense eigensolve capped at N = " + std::to_string(max_dim));
    return eigen_angles(m.to_dense());
}

std::vector<Complex> trace_powers(const CmvMatrix& m, int ell_max) {
    if (ell_max < 0) throw DomainError("trace power needs ell >= 0");
    const auto& e = m.sparse();
    std::vector<int> rows(m.dimension());
    for (int i = 0; i < m.dimension(); ++i) rows[i] = i;
    return propagate_diagonals(
        m.dimension(),
        [&](int r, Entry* o) {
            auto row = e.row(r);
            std::copy(row.begin(), row.end(), o);
            return static_cast<int>(row.size());
        },
        rows, ell_max);
}

Complex trace_power(const CmvMatrix& m, int ell) { return trace_powers(m, ell)[ell]; }

Eigen::MatrixXcd plus_part(const Eigen::MatrixXcd& a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::Index d = ((k - j) % n + n) % n;
            if (d == 0)
                p(j, k) = 0.5 * a(j, k);
            else if (d == 1 || d == 2)
                p(j, k) = a(j, k);
        }
    return p;
}

Eigen::MatrixXcd e_plus(const CmvMatrix& m) {
    if (m.topology() != Topology::Periodic)
        throw UnsupportedTopology("e_plus is defined for the periodic CMV matrix only");
    return plus_part(m.to_dense());
}

double trace_potential_from_traces(const std::vector<Complex>& traces, int n, const Potential& p) {
    const int d = p.degree();
    if (d >= static_cast<int>(traces.size())) throw ShapeError("not enough trace powers supplied");
    double v = 0.0;
    if (p.kind() == Potential::Kind::Torus) {
        v = p.c(0) * n;
        for (int k = 1; k <= d; ++k) v += p.c(k) * traces[k].real() + p.s(k) * traces[k].imag();
        return v;
    }
    if (n % 2 != 0) throw ShapeError("interval potentials need a paired spectrum (even N)");
    v = p.t(0) * (n / 2);
    for (int k = 1; k <= d; ++k) v += 0.5 * p.t(k) * traces[k].real();
    return v;
}

double trace_potential(const CmvMatrix& m, const Potential& p, int degree_cap) {
    if (p.degree() > degree_cap)
        throw ConfigError("potential degree " + std::to_string(p.degree()) + " exceeds cap " +
                          std::to_string(degree_cap));
    if (p.is_zero()) return 0.0;
    return trace_potential_from_traces(trace_powers(m, std::max(p.degree(), 0)), m.dimension(), p);
}

ConservedQuantities conserved_quantities(const VerblunskyVector& v, int ell_max) {
    ConservedQuantities q;
    for (std::size_t j = 0; j < v.size(); ++j) q.k0 *= (1.0 - std::norm(v[j]));
    auto tr = trace_powers(build_periodic_cmv(v), ell_max);
    q.k_traces.assign(tr.begin() + 1, tr.end());
    return q;
}

std::string to_json(const CmvMatrix& m) {
    nlohmann::json j;
    j["n"] = m.dimension();
    j["topology"] = to_string(m.topology());
    auto entries = nlohmann::json::array();
    for (int r = 0; r < m.dimension(); ++r)
        for (const auto& e : m.sparse().row(r))
            entries.push_back({r + 1, e.col + 1, e.value.real(), e.value.imag()});
    j["entries"] = std::move(entries);
    return j.dump();
}

std::vector<Complex> partial_trace_powers(const CmvRowSource& src, std::span<const int> rows,
                                          int ell_max) {
    return propagate_diagonals(
        src.dimension(), [&](int r, Entry* o) { return src.row(r, o); }, rows, ell_max);
}

std::vector<int> affected_rows(int n, Topology topology, int site, int ell_max) {
    // A closed walk of length ℓ stays within ℓ of its start and each row of ℰ
    // reaches at most two indices away, so rows farther than 2ℓ+2 from the
    // modified block are untouched.
    const int radius = 2 * ell_max + 2;
    std::vector<int> rows;
    if (2 * radius + 1 >= n) {
        rows.resize(n);
        for (int i = 0; i < n; ++i) rows[i] = i;
        return rows;
    }
    for (int d = -radius; d <= radius; ++d) {
        int r = site + d;
        if (topology == Topology::Periodic)
            r = ((r % n) + n) % n;
        else if (r < 0 || r >= n)
            continue;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace gge
