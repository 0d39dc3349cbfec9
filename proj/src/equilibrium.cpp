#include "gge/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>
#include <tuple>

#include <Eigen/Core>
#include <boost/math/quadrature/gauss.hpp>
#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "gge/error.hpp"

namespace gge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
const double kLnPi = std::log(kPi);
constexpr double kLogFloor = -690.0;  // ln(1e-300)

void check_params(const SolverParams& p) {
    if (!(p.damping > 0.0 && p.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
    if (!(p.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (p.max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if (p.grid_size < 8) throw ConfigError("grid_size must be at least 8");
}

void check_beta(double beta) {
    if (!std::isfinite(beta) || beta < 0.0) throw DomainError("beta must be finite and nonnegative");
}

double safe_log(double v) { return v > 0.0 ? std::max(std::log(v), kLogFloor) : kLogFloor; }

double log1pexp(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

// ln sin u from ln u, for 0 < u ≤ π/2.
double log_sin_small(double lu) {
    const double u = std::exp(lu);
    if (u < 1e-8) return lu - u * u / 6.0;
    return lu + std::log(std::sin(u) / u);
}

// ln(e^a + e^b)
double logaddexp(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct PointLogs {
    double s;   // a sinh t
    double lth; // ln θ
    double lpt; // ln(π − θ)
    double theta;
};

PointLogs point_logs(double t, double a) {
    PointLogs p;
    p.s = a * std::sinh(t);
    p.lth = kLnPi - log1pexp(-p.s);
    p.lpt = kLnPi - log1pexp(p.s);
    p.theta = std::exp(p.lth);
    return p;
}

// ln|cos θ_i − cos θ|; on a common side of π/2 the small angle u (θ or π−θ) is
// carried in logs so the difference keeps relative accuracy near the endpoints.
double log_kernel(const PointLogs& pi, const PointLogs& p) {
    const bool left_i = pi.s <= 0.0;
    const bool left = p.s <= 0.0;
    if (left_i == left) {
        const double lui = left_i ? pi.lth : pi.lpt;
        const double lu = left ? p.lth : p.lpt;
        const double hi = std::max(lui, lu);
        const double lo = std::min(lui, lu);
        const double lsum = logaddexp(lui, lu) - kLn2;
        const double ldif = hi + std::log(-std::expm1(lo - hi)) - kLn2;
        return kLn2 + log_sin_small(lsum) + log_sin_small(ldif);
    }
    const double half_sum = 0.5 * (pi.theta + p.theta);
    const double half_dif = 0.5 * std::abs(p.theta - pi.theta);
    return kLn2 + std::log(std::sin(half_sum)) + std::log(std::sin(half_dif));
}

// Normalizes ln q in place so that Σ w e^{ln q} = 1.
void normalize_log(std::vector<double>& lq, const std::vector<double>& w) {
    const double mx = *std::max_element(lq.begin(), lq.end());
    double s = 0.0;
    for (std::size_t i = 0; i < lq.size(); ++i) s += w[i] * std::exp(lq[i] - mx);
    const double shift = mx + std::log(s);
    for (double& v : lq) v -= shift;
}

double sup_deviation_from_mean(const std::vector<double>& r, const std::vector<double>& w) {
    double mean = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        mean += w[i] * r[i];
        wsum += w[i];
    }
    mean /= wsum;
    double dev = 0.0;
    for (double v : r) dev = std::max(dev, std::abs(v - mean));
    return dev;
}

}  // namespace

// ---- torus -----------------------------------------------------------------

std::vector<double> log_potential_torus(const GridDensity& rho) {
    const int m = rho.size();
    Eigen::FFT<double> fft;
    std::vector<double> in(rho.values());
    std::vector<Complex> spec;
    fft.fwd(spec, in);
    const double h = rho.step();
    for (int k = 0; k < m; ++k) {
        const int kk = k <= m / 2 ? k : m - k;
        spec[k] *= kk == 0 ? 0.0 : -h / (2.0 * kk);
    }
    std::vector<double> out;
    fft.inv(out, spec);
    // inv divides by M, which the kernel sum must not.
    for (double& v : out) v *= m;
    return out;
}

FreeEnergyBreakdown free_energy_torus(const GridDensity& rho, const Potential& v, double beta) {
    check_beta(beta);
    if (v.kind() != Potential::Kind::Torus) throw ConfigError("free_energy_torus needs a torus potential");
    for (double x : rho.values())
        if (x < 0.0) throw DomainError("free_energy_torus: density has negative entries");
    const int m = rho.size();
    const double h = rho.step();
    const auto& f = rho.fourier();
    FreeEnergyBreakdown out;
    double s = 0.0;
    for (int k = 1; k <= m / 2; ++k) s += std::norm(f[k]) / k;
    out.interaction_fourier = beta * s;
    out.log2_constant = beta * kLn2;
    out.interaction = out.interaction_fourier + out.log2_constant;
    double pot = 0.0, ent = 0.0;
    for (int i = 0; i < m; ++i) {
        const double r = rho[i];
        pot += v(rho.theta(i)) * r;
        if (r > 0.0) ent += r * std::log(r);
    }
    out.potential = pot * h;
    out.entropy = ent * h + std::log(2.0 * kPi);
    out.total = out.interaction + out.potential + out.entropy;
    return out;
}

TorusSolution minimize_torus(const Potential& v, double beta, const SolverParams& params,
                             const GridDensity* initial) {
    check_params(params);
    check_beta(beta);
    if (v.kind() != Potential::Kind::Torus) throw ConfigError("minimize_torus needs a torus potential");
    const int m = initial ? initial->size() : params.grid_size;
    const double h = 2.0 * kPi / m;
    std::vector<double> w(m, h);
    std::vector<double> vv(m);
    for (int i = 0; i < m; ++i) vv[i] = v(-kPi + h * i);

    std::vector<double> lr(m);
    if (initial) {
        for (int i = 0; i < m; ++i) lr[i] = safe_log((*initial)[i]);
    } else {
        for (int i = 0; i < m; ++i) lr[i] = -vv[i];
    }
    normalize_log(lr, w);

    double gamma = std::min(params.damping, 1.0 / (1.0 + beta));
    double d = 0.0, d_prev = INFINITY;
    int rising = 0;
    int it = 0;
    std::vector<double> rho(m), target(m);
    for (it = 1; it <= params.max_iterations; ++it) {
        for (int i = 0; i < m; ++i) rho[i] = std::exp(lr[i]);
        const auto lp = log_potential_torus(GridDensity(rho, false));
        for (int i = 0; i < m; ++i) target[i] = (1.0 - gamma) * lr[i] + gamma * (-vv[i] + 2.0 * beta * lp[i]);
        normalize_log(target, w);
        d = 0.0;
        for (int i = 0; i < m; ++i) d = std::max(d, std::abs(target[i] - lr[i]));
        lr.swap(target);
        if (d <= params.tolerance) break;
        if (d > d_prev) {
            if (++rising >= 3) {
                gamma *= 0.5;
                rising = 0;
            }
        } else {
            rising = 0;
        }
        d_prev = d;
    }
    for (int i = 0; i < m; ++i) rho[i] = std::exp(lr[i]);
    if (d > params.tolerance)
        throw ConvergenceError("minimize_torus: no convergence within max_iterations", d);

    TorusSolution sol;
    sol.density = GridDensity(rho, true);
    const auto lp = log_potential_torus(sol.density);
    std::vector<double> r(m);
    for (int i = 0; i < m; ++i) r[i] = lr[i] + vv[i] - 2.0 * beta * lp[i];
    sol.residual = sup_deviation_from_mean(r, w);
    sol.last_update = d;
    sol.iterations = it;
    sol.beta = beta;
    return sol;
}

double circular_free_energy(const Potential& v, double beta, const SolverParams& params) {
    const auto sol = minimize_torus(v, beta, params);
    return free_energy_torus(sol.density, v, beta).total - beta * kLn2;
}

// ---- interval grid -----------------------------------------------------------

IntervalGrid::IntervalGrid(const Params& p) : p_(p) {
    if (p.nodes < 16) throw ConfigError("interval grid needs at least 16 nodes");
    if (!(p.half_width > 0.0) || !(p.scale > 0.0)) throw ConfigError("interval grid: half_width and scale must be positive");
    const int m = p.nodes;
    h_ = 2.0 * p.half_width / (m - 1);
    t_.resize(m);
    theta_.resize(m);
    x_.resize(m);
    w_.assign(m, h_);
    w_.front() = w_.back() = 0.5 * h_;
    lsig_.resize(m);
    lg_.resize(m);
    lsin_.resize(m);
    lth_.resize(m);
    lpt_.resize(m);
    std::vector<PointLogs> node(m);
    for (int i = 0; i < m; ++i) {
        // Symmetric construction keeps t_{M−1−i} = −t_i exactly.
        const double t = i < m / 2 ? -p.half_width + h_ * i : p.half_width - h_ * (m - 1 - i);
        t_[i] = t;
        node[i] = point_logs(t, p.scale);
        lth_[i] = node[i].lth;
        lpt_[i] = node[i].lpt;
        theta_[i] = node[i].theta;
        const bool left = node[i].s <= 0.0;
        x_[i] = left ? std::cos(theta_[i]) : -std::cos(std::exp(lpt_[i]));
        lsin_[i] = log_sin_small(left ? lth_[i] : lpt_[i]);
        const double at = std::abs(t);
        lsig_[i] = std::log(p.scale) + at + std::log1p(std::exp(-2.0 * at)) - kLn2;
        lg_[i] = lth_[i] + lpt_[i] - kLnPi - lsin_[i];
    }

    // Product integration of the kernel against the hat functions on each cell.
    using GL = boost::math::quadrature::gauss<double, 8>;
    std::vector<double> gu, gw;  // nodes in (0,1) and weights summing to 1
    {
        const auto& ab = GL::abscissa();
        const auto& wt = GL::weights();
        for (std::size_t k = 0; k < ab.size(); ++k) {
            const double x = ab[k];
            if (x == 0.0) {
                gu.push_back(0.5);
                gw.push_back(0.5 * wt[k]);
                continue;
            }
            gu.push_back(0.5 * (1.0 - x));
            gw.push_back(0.5 * wt[k]);
            gu.push_back(0.5 * (1.0 + x));
            gw.push_back(0.5 * wt[k]);
        }
    }
    const int ng = static_cast<int>(gu.size());
    // Cell quadrature points are shared by every row.
    std::vector<PointLogs> cellpts(static_cast<std::size_t>(m - 1) * ng);
    for (int c = 0; c < m - 1; ++c)
        for (int k = 0; k < ng; ++k) cellpts[c * ng + k] = point_logs(t_[c] + gu[k] * h_, p.scale);

    kernel_.assign(static_cast<std::size_t>(m) * m, 0.0);
    const int half = (m + 1) / 2;
    // q is interpolated by the cubic through four neighbouring nodes; cell c uses
    // nodes b..b+3 with b = clamp(c−1, 0, M−4), which is mirror symmetric.
    auto lagrange = [](double pos, double* l) {
        for (int j = 0; j < 4; ++j) {
            double v = 1.0;
            for (int k = 0; k < 4; ++k)
                if (k != j) v *= (pos - k) / static_cast<double>(j - k);
            l[j] = v;
        }
    };
    std::vector<double> regular(static_cast<std::size_t>(m - 1) * ng * 4);
    for (int c = 0; c < m - 1; ++c) {
        const int b = std::clamp(c - 1, 0, m - 4);
        for (int k = 0; k < ng; ++k) lagrange(c - b + gu[k], &regular[(static_cast<std::size_t>(c) * ng + k) * 4]);
    }
    auto build_rows = [&](int lo, int hi) {
        double l[4];
        for (int i = lo; i < hi; ++i) {
            double* row = &kernel_[static_cast<std::size_t>(i) * m];
            for (int c = 0; c < m - 1; ++c) {
                const int b = std::clamp(c - 1, 0, m - 4);
                if (c == i || c == i - 1) {
                    // Graded rule toward the singular endpoint: d = h v⁴.
                    for (int k = 0; k < ng; ++k) {
                        const double vq = gu[k];
                        const double d = h_ * vq * vq * vq * vq;
                        const double dw = gw[k] * h_ * 4.0 * vq * vq * vq;
                        const double ts = c == i ? t_[c] + d : t_[c + 1] - d;
                        const double uu = c == i ? d / h_ : 1.0 - d / h_;
                        const double kv = dw * log_kernel(node[i], point_logs(ts, p.scale));
                        lagrange(c - b + uu, l);
                        for (int j = 0; j < 4; ++j) row[b + j] += kv * l[j];
                    }
                } else {
                    for (int k = 0; k < ng; ++k) {
                        const double kv = gw[k] * h_ * log_kernel(node[i], cellpts[c * ng + k]);
                        const double* lk = &regular[(static_cast<std::size_t>(c) * ng + k) * 4];
                        for (int j = 0; j < 4; ++j) row[b + j] += kv * lk[j];
                    }
                }
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(std::thread::hardware_concurrency(), 8));
    std::vector<std::thread> pool;
    for (int tdx = 0; tdx < nthreads; ++tdx) {
        const int lo = half * tdx / nthreads;
        const int hi = half * (tdx + 1) / nthreads;
        pool.emplace_back(build_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
    // K(−t_i, −t) = K(t_i, t): mirror the upper half of the rows.
    for (int i = half; i < m; ++i)
        for (int j = 0; j < m; ++j)
            kernel_[static_cast<std::size_t>(i) * m + j] = kernel_[static_cast<std::size_t>(m - 1 - i) * m + (m - 1 - j)];
}

std::shared_ptr<const IntervalGrid> IntervalGrid::shared(const Params& p) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const IntervalGrid>> cache;
    const auto key = std::make_tuple(p.nodes, p.half_width, p.scale);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto g = std::make_shared<const IntervalGrid>(p);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, g).first->second;
}

std::vector<double> IntervalGrid::log_potential(const std::vector<double>& q) const {
    const int m = p_.nodes;
    if (static_cast<int>(q.size()) != m) throw ShapeError("log_potential: density size does not match grid");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> k(kernel_.data(), m, m);
    Eigen::Map<const Eigen::VectorXd> qv(q.data(), m);
    Eigen::VectorXd u = k * qv;
    return {u.data(), u.data() + m};
}

// ---- interval density ----------------------------------------------------------

IntervalDensity::IntervalDensity(std::shared_ptr<const IntervalGrid> grid, std::vector<double> q, bool normalize,
                                 bool allow_negative)
    : grid_(std::move(grid)), q_(std::move(q)) {
    if (!grid_) throw ConfigError("IntervalDensity: null grid");
    if (static_cast<int>(q_.size()) != grid_->size()) throw ShapeError("IntervalDensity: size does not match grid");
    for (double v : q_) {
        if (!std::isfinite(v)) throw DomainError("IntervalDensity: non-finite entry");
        if (!allow_negative && v < 0.0) throw DomainError("IntervalDensity: negative entry");
    }
    if (normalize) {
        const double m = mass();
        if (!(m > 0.0)) throw DomainError("IntervalDensity: zero mass");
        for (double& v : q_) v /= m;
    }
}

IntervalDensity IntervalDensity::from_log_theta_density(
    std::shared_ptr<const IntervalGrid> grid,
    const std::function<double(double, double, double)>& log_rho_theta) {
    std::vector<double> q(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
        // dθ/dt = σ'·g·sin θ
        const double ldt = grid->log_sigma_prime(i) + grid->log_g(i) + grid->log_sin_theta(i);
        q[i] = std::exp(log_rho_theta(grid->theta(i), grid->log_theta(i), grid->log_pi_minus_theta(i)) + ldt);
    }
    return IntervalDensity(std::move(grid), std::move(q), false);
}

IntervalDensity IntervalDensity::arcsine(std::shared_ptr<const IntervalGrid> grid) {
    return from_log_theta_density(std::move(grid), [](double, double, double) { return -kLnPi; });
}

double IntervalDensity::mass() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += grid_->weight(i) * q_[i];
    return s;
}

double IntervalDensity::integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += grid_->weight(i) * q_[i] * f(grid_->x(i));
    return s;
}

double IntervalDensity::chebyshev_moment(int k) const {
    if (k < 0) throw DomainError("chebyshev_moment: negative order");
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += grid_->weight(i) * q_[i] * std::cos(k * grid_->theta(i));
    return s;
}

double IntervalDensity::power_moment(int k) const {
    if (k < 0) throw DomainError("power_moment: negative order");
    return integrate([k](double x) { return std::pow(x, k); });
}

double IntervalDensity::log_density_x(int i) const {
    // ρ_x = q / |dx/dt| with |dx/dt| = sin θ · dθ/dt
    const auto& g = *grid_;
    return safe_log(q_[i]) - g.log_sigma_prime(i) - g.log_g(i) - 2.0 * g.log_sin_theta(i);
}

IntervalDensity IntervalDensity::mirrored() const {
    std::vector<double> q(q_.rbegin(), q_.rend());
    return IntervalDensity(grid_, std::move(q), false, true);
}

FreeEnergyBreakdown free_energy_interval(const IntervalDensity& rho, const Potential& v, double beta) {
    check_beta(beta);
    if (v.kind() != Potential::Kind::Interval && !v.is_zero())
        throw ConfigError("free_energy_interval needs an interval potential");
    const auto& g = rho.grid();
    const auto& q = rho.q();
    for (double x : q)
        if (x < 0.0) throw DomainError("free_energy_interval: density has negative entries");
    const auto u = g.log_potential(q);
    FreeEnergyBreakdown out;
    double inter = 0.0, pot = 0.0, ent = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double wq = g.weight(i) * q[i];
        inter += wq * u[i];
        if (!v.is_zero()) pot += wq * v.at_x(g.x(i));
        // ln(ρ_x(1−x²)) = ln q − ln σ' − ln g
        if (q[i] > 0.0) ent += wq * (std::log(q[i]) - g.log_sigma_prime(i) - g.log_g(i));
    }
    out.interaction_fourier = -beta * inter;
    out.interaction = out.interaction_fourier;
    out.potential = pot;
    out.entropy = ent;
    out.total = out.interaction + out.potential + out.entropy;
    return out;
}

IntervalSolution minimize_interval(const Potential& v, double beta, const SolverParams& params,
                                   const IntervalDensity* initial) {
    check_params(params);
    check_beta(beta);
    if (v.kind() != Potential::Kind::Interval && !v.is_zero())
        throw ConfigError("minimize_interval needs an interval potential");
    std::shared_ptr<const IntervalGrid> grid;
    if (initial) {
        grid = initial->grid_ptr();
    } else {
        grid = IntervalGrid::shared({params.grid_size, params.interval_half_width, params.interval_scale});
    }
    const auto& g = *grid;
    const int m = g.size();
    std::vector<double> w(m), vv(m, 0.0), base(m);
    for (int i = 0; i < m; ++i) {
        w[i] = g.weight(i);
        if (!v.is_zero()) vv[i] = v.at_x(g.x(i));
        base[i] = g.log_sigma_prime(i) + g.log_g(i);
    }
    std::vector<double> lq(m);
    if (initial) {
        for (int i = 0; i < m; ++i) lq[i] = safe_log(initial->q()[i]);
    } else {
        // ln sech t: the asymptotic endpoint decay of the minimizer in t.
        for (int i = 0; i < m; ++i) {
            const double at = std::abs(g.t(i));
            lq[i] = kLn2 - at - std::log1p(std::exp(-2.0 * at)) - vv[i];
        }
    }
    normalize_log(lq, w);

    // Newton on F_i = ln q_i + V_i − 2β(Wq)_i − base_i − c with Σ w q = 1. A damped
    // fixed point is not contractive here: near ±T the kernel reaches −σ(T) ~ −10⁷ and
    // the log potential reacts strongly to the tail.
    const auto kmat = g.kernel();
    std::vector<double> q(m);
    auto residual = [&](const std::vector<double>& l, double c, Eigen::VectorXd& f) {
        std::vector<double> qq(m);
        for (int i = 0; i < m; ++i) qq[i] = std::exp(l[i]);
        const auto u = g.log_potential(qq);
        f.resize(m + 1);
        double mass = 0.0;
        for (int i = 0; i < m; ++i) {
            f[i] = l[i] + vv[i] - 2.0 * beta * u[i] - base[i] - c;
            mass += w[i] * qq[i];
        }
        f[m] = mass - 1.0;
        return f.lpNorm<Eigen::Infinity>();
    };
    double c = 0.0;
    {
        // Initial multiplier: weighted mean of the residual.
        Eigen::VectorXd f;
        residual(lq, 0.0, f);
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += w[i] * std::exp(lq[i]) * f[i];
        c = s;
    }
    Eigen::VectorXd f;
    double fnorm = residual(lq, c, f);
    double d = INFINITY;
    int it = 0;
    Eigen::MatrixXd jac(m + 1, m + 1);
    std::vector<double> trial(m);
    Eigen::VectorXd ftrial;
    for (it = 1; it <= params.max_iterations; ++it) {
        for (int i = 0; i < m; ++i) q[i] = std::exp(lq[i]);
        for (int j = 0; j < m; ++j) {
            const double sj = -2.0 * beta * q[j];
            for (int i = 0; i < m; ++i) jac(i, j) = sj * kmat(i, j);
            jac(j, j) += 1.0;
            jac(m, j) = w[j] * q[j];
        }
        for (int i = 0; i < m; ++i) jac(i, m) = -1.0;
        jac(m, m) = 0.0;
        const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
        if (!step.allFinite()) throw NumericalError("minimize_interval: singular Newton system", fnorm);
        double lambda = 1.0;
        double tnorm = INFINITY;
        for (int ls = 0; ls < 40; ++ls) {
            for (int i = 0; i < m; ++i) trial[i] = lq[i] + lambda * step[i];
            tnorm = residual(trial, c + lambda * step[m], ftrial);
            if (std::isfinite(tnorm) && tnorm < (1.0 - 1e-4 * lambda) * fnorm) break;
            if (fnorm < 1e-12 && std::isfinite(tnorm) && tnorm <= 10.0 * fnorm) break;  // at roundoff level
            lambda *= 0.5;
        }
        d = 0.0;
        for (int i = 0; i < m; ++i) d = std::max(d, std::abs(trial[i] - lq[i]));
        lq.swap(trial);
        c += lambda * step[m];
        f = ftrial;
        fnorm = tnorm;
        if (d <= params.tolerance) break;
    }
    for (int i = 0; i < m; ++i) q[i] = std::exp(lq[i]);

    // Endpoint decay q ~ e^{−λ|t|}, read off a window inside the boundary layer that the
    // truncation at ±T produces in the last unit of t; mass beyond ±T ≈ q(T−4)e^{−4λ}/λ.
    const int off = std::min(m / 4, static_cast<int>(std::lround(4.0 / g.step())));
    const int span = std::max(1, std::min(off / 2, static_cast<int>(std::lround(1.0 / g.step()))));
    const double lam_left = (lq[off + span] - lq[off]) / (span * g.step());
    const double lam_right = (lq[m - 1 - off - span] - lq[m - 1 - off]) / (span * g.step());
    const double lam = std::min(lam_left, lam_right);
    const double reach = off * g.step();
    double tail = INFINITY;
    if (lam > 0.0) tail = (std::exp(lq[off]) + std::exp(lq[m - 1 - off])) * std::exp(-lam * reach) / lam;
    if (!(lam > 0.0) || tail > 1e-6) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "minimize_interval: iterate not integrable on the grid (endpoint exponent %.4g, tail mass %.3g); "
                      "beta too small or half_width too short",
                      lam, tail);
        throw DomainError(buf);
    }
    if (d > params.tolerance)
        throw ConvergenceError("minimize_interval: no convergence within max_iterations", d);

    IntervalSolution sol;
    sol.density = IntervalDensity(grid, q, true);
    const auto u = g.log_potential(sol.density.q());
    std::vector<double> r(m);
    for (int i = 0; i < m; ++i) r[i] = safe_log(sol.density.q()[i]) + vv[i] - 2.0 * beta * u[i] - base[i];
    sol.residual = sup_deviation_from_mean(r, w);
    sol.last_update = d;
    sol.iterations = it;
    sol.tail_mass = tail;
    sol.beta = beta;
    return sol;
}

// ---- β-derivative ----------------------------------------------------------

namespace {

double resolve_delta(double beta, double delta) {
    if (!(beta > 0.0)) throw DomainError("beta_derivative: beta must be positive");
    if (delta <= 0.0) delta = 0.05 * beta;
    if (delta >= beta) throw ConfigError("beta_derivative: delta must be smaller than beta");
    return delta;
}

struct TorusDiff {
    std::vector<double> values;
    double residual;
};

TorusDiff torus_diff(const Potential& v, double beta, double delta, const SolverParams& params,
                     const GridDensity* warm) {
    const auto lo = minimize_torus(v, beta - delta, params, warm);
    const auto hi = minimize_torus(v, beta + delta, params, warm);
    TorusDiff out;
    out.values.resize(lo.density.size());
    for (int i = 0; i < lo.density.size(); ++i)
        out.values[i] = ((beta + delta) * hi.density[i] - (beta - delta) * lo.density[i]) / (2.0 * delta);
    out.residual = std::max(lo.residual, hi.residual);
    return out;
}

struct IntervalDiff {
    std::vector<double> q;
    double residual;
};

IntervalDiff interval_diff(const Potential& v, double beta, double delta, const SolverParams& params,
                           const IntervalDensity* warm) {
    const auto lo = minimize_interval(v, beta - delta, params, warm);
    const auto hi = minimize_interval(v, beta + delta, params, warm);
    IntervalDiff out;
    const auto& ql = lo.density.q();
    const auto& qh = hi.density.q();
    out.q.resize(ql.size());
    for (std::size_t i = 0; i < ql.size(); ++i)
        out.q[i] = ((beta + delta) * qh[i] - (beta - delta) * ql[i]) / (2.0 * delta);
    out.residual = std::max(lo.residual, hi.residual);
    return out;
}

void negativity_warning(double min_value, std::vector<std::string>& warnings) {
    if (min_value < -1e-6) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "derivative density has negative values (min %.3g); clipped only on export",
                      min_value);
        warnings.emplace_back(buf);
    }
}

}  // namespace

BetaDerivativeTorus beta_derivative_torus(const Potential& v, double beta, double delta, const SolverParams& params,
                                          bool richardson) {
    delta = resolve_delta(beta, delta);
    const auto mid = minimize_torus(v, beta, params);
    const auto full = torus_diff(v, beta, delta, params, &mid.density);
    BetaDerivativeTorus out;
    out.delta = delta;
    out.density = GridDensity(full.values, false, true);
    out.max_residual = std::max(mid.residual, full.residual);
    out.min_value = *std::min_element(full.values.begin(), full.values.end());
    if (richardson) {
        const auto halfd = torus_diff(v, beta, 0.5 * delta, params, &mid.density);
        double gap = 0.0;
        for (std::size_t i = 0; i < full.values.size(); ++i)
            gap = std::max(gap, std::abs(full.values[i] - halfd.values[i]));
        out.richardson_gap = gap;
        out.error_estimate = 4.0 / 3.0 * gap;
        out.max_residual = std::max(out.max_residual, halfd.residual);
    }
    negativity_warning(out.min_value, out.warnings);
    return out;
}

BetaDerivativeInterval beta_derivative_interval(const Potential& v, double beta, double delta,
                                                const SolverParams& params, bool richardson) {
    delta = resolve_delta(beta, delta);
    const auto mid = minimize_interval(v, beta, params);
    const auto full = interval_diff(v, beta, delta, params, &mid.density);
    BetaDerivativeInterval out;
    out.delta = delta;
    out.density = IntervalDensity(mid.density.grid_ptr(), full.q, false, true);
    out.max_residual = std::max(mid.residual, full.residual);
    double mn = INFINITY;
    for (int i = 0; i < out.density.size(); ++i) {
        // Compare in x-density units where representable.
        const auto& g = out.density.grid();
        const double jac = g.log_sigma_prime(i) + g.log_g(i) + 2.0 * g.log_sin_theta(i);
        if (jac > -600.0) mn = std::min(mn, full.q[i] * std::exp(-jac));
    }
    out.min_value = mn;
    if (richardson) {
        const auto halfd = interval_diff(v, beta, 0.5 * delta, params, &mid.density);
        const IntervalDensity half_density(mid.density.grid_ptr(), halfd.q, false, true);
        double gap = 0.0;
        for (int k = 0; k <= 4; ++k) {
            const double e = std::abs(out.density.chebyshev_moment(k) - half_density.chebyshev_moment(k));
            gap = std::max(gap, e);
            out.chebyshev_error.push_back(4.0 / 3.0 * e);
        }
        out.richardson_gap = gap;
        out.error_estimate = 4.0 / 3.0 * gap;
        out.max_residual = std::max(out.max_residual, halfd.residual);
    }
    negativity_warning(out.min_value, out.warnings);
    return out;
}

std::string to_csv(const IntervalDensity& rho) {
    std::string out = "x,rho\n";
    char buf[96];
    const auto& g = rho.grid();
    for (int i = 0; i < rho.size(); ++i) {
        const double x = g.x(i);
        if (std::abs(x) >= 1.0) continue;  // node not representable in x
        const double lr = rho.log_density_x(i);
        if (lr > 700.0) continue;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, rho.q()[i] > 0.0 ? std::exp(lr) : std::max(0.0, rho.q()[i]));
        out += buf;
    }
    return out;
}

std::string sidecar_json(double beta, const Potential& v, int grid_size, double residual, int iterations,
                         const std::string& grid_kind) {
    nlohmann::json j;
    j["beta"] = beta;
    j["potential"] = v.to_string();
    j["grid"] = {{"kind", grid_kind}, {"size", grid_size}};
    j["residual"] = residual;
    j["iterations"] = iterations;
    return j.dump(2);
}

}  // namespace gge
