#pragma once

#include <string>
#include <vector>

namespace gge {

// A trigonometric polynomial on the torus,
//   V(θ) = c0 + Σ_{k≥1} (c_k cos kθ + s_k sin kθ),
// or a Chebyshev series on [−1, 1],
//   V(x) = Σ_{k≥0} t_k T_k(x).
// Both forms admit exact trace evaluation through powers of ℰ.
class Potential {
public:
    enum class Kind { Torus, Interval };

    static constexpr int kDefaultDegreeCap = 64;

    Potential() = default;
    static Potential zero(Kind kind = Kind::Torus);
    static Potential torus(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs = {});
    static Potential interval(std::vector<double> cheb_coeffs);
    // 2η cos θ, the classical AL Gibbs weight.
    static Potential cosine(double eta);

    // Parses "c0=..,c1=..,s1=.." (torus) or "t0=..,t2=.." (interval).
    // An empty string gives the zero torus potential.
    static Potential parse(const std::string& text, int degree_cap = kDefaultDegreeCap);

    Kind kind() const noexcept { return kind_; }
    int degree() const noexcept;
    bool is_zero() const noexcept;

    double c(int k) const noexcept;
    double s(int k) const noexcept;
    double t(int k) const noexcept;

    double operator()(double theta) const;  // torus: V(θ); interval: V(cos θ)
    double at_x(double x) const;            // interval only

    Potential scaled(double factor) const;
    // V(· − φ) for torus potentials.
    Potential rotated(double phi) const;

    std::string to_string() const;

private:
    Kind kind_ = Kind::Torus;
    std::vector<double> a_;  // c_k (torus) or t_k (interval), k = 0..d
    std::vector<double> b_;  // s_k (torus), index 0 unused
};

}  // namespace gge
