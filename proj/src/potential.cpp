#include "gge/potential.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "gge/error.hpp"

namespace gge {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void strip_trailing_zeros(std::vector<double>& v, std::size_t keep) {
    while (v.size() > keep && v.back() == 0.0) v.pop_back();
}

}  // namespace

Potential Potential::zero(Kind kind) {
    Potential p;
    p.kind_ = kind;
    return p;
}

Potential Potential::torus(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
    Potential p;
    p.kind_ = Kind::Torus;
    p.a_ = std::move(cos_coeffs);
    p.b_ = std::move(sin_coeffs);
    if (!p.b_.empty() && p.b_[0] != 0.0) throw ConfigError("sin coefficient s0 is not allowed");
    strip_trailing_zeros(p.a_, 0);
    strip_trailing_zeros(p.b_, 0);
    return p;
}

Potential Potential::interval(std::vector<double> cheb_coeffs) {
    Potential p;
    p.kind_ = Kind::Interval;
    p.a_ = std::move(cheb_coeffs);
    strip_trailing_zeros(p.a_, 0);
    return p;
}

Potential Potential::cosine(double eta) { return torus({0.0, 2.0 * eta}); }

Potential Potential::parse(const std::string& text, int degree_cap) {
    std::vector<double> a, b;
    bool saw_torus = false, saw_interval = false;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos || eq < 2)
            throw ConfigError("bad potential term '" + item + "', expected e.g. c1=0.5");
        std::string key = trim(item.substr(0, eq));
        std::string val = trim(item.substr(eq + 1));
        char letter = key[0];
        int k;
        double x;
        try {
            std::size_t used = 0;
            k = std::stoi(key.substr(1), &used);
            if (used != key.size() - 1) throw std::invalid_argument("index");
            x = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument("value");
        } catch (const std::exception&) {
            throw ConfigError("bad potential term '" + item + "'");
        }
        if (k < 0) throw ConfigError("negative index in '" + item + "'");
        if (k > degree_cap)
            throw ConfigError("potential degree " + std::to_string(k) + " exceeds cap " +
                              std::to_string(degree_cap));
        std::vector<double>* dst = nullptr;
        if (letter == 'c') {
            saw_torus = true;
            dst = &a;
        } else if (letter == 's') {
            if (k == 0) throw ConfigError("s0 is not a valid coefficient");
            saw_torus = true;
            dst = &b;
        } else if (letter == 't') {
            saw_interval = true;
            dst = &a;
        } else {
            throw ConfigError("unknown coefficient letter in '" + item + "' (use c, s or t)");
        }
        if (dst->size() <= static_cast<std::size_t>(k)) dst->resize(k + 1, 0.0);
        (*dst)[k] = x;
    }
    if (saw_torus && saw_interval)
        throw ConfigError("cannot mix torus (c/s) and Chebyshev (t) coefficients");
    if (saw_interval) return interval(std::move(a));
    return torus(std::move(a), std::move(b));
}

int Potential::degree() const noexcept {
    return static_cast<int>(std::max(a_.size(), b_.size())) - 1;
}

bool Potential::is_zero() const noexcept {
    for (double x : a_)
        if (x != 0.0) return false;
    for (double x : b_)
        if (x != 0.0) return false;
    return true;
}

double Potential::c(int k) const noexcept {
    return (kind_ == Kind::Torus && k >= 0 && k < static_cast<int>(a_.size())) ? a_[k] : 0.0;
}
double Potential::s(int k) const noexcept {
    return (kind_ == Kind::Torus && k >= 1 && k < static_cast<int>(b_.size())) ? b_[k] : 0.0;
}
double Potential::t(int k) const noexcept {
    return (kind_ == Kind::Interval && k >= 0 && k < static_cast<int>(a_.size())) ? a_[k] : 0.0;
}

double Potential::operator()(double theta) const {
    double v = 0.0;
    for (std::size_t k = 0; k < a_.size(); ++k) v += a_[k] * std::cos(k * theta);
    for (std::size_t k = 1; k < b_.size(); ++k) v += b_[k] * std::sin(k * theta);
    return v;
}

double Potential::at_x(double x) const {
    if (kind_ != Kind::Interval) throw DomainError("at_x requires a Chebyshev potential");
    // Clenshaw recurrence for Σ t_k T_k(x).
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(a_.size()) - 1; k >= 1; --k) {
        double b0 = 2.0 * x * b1 - b2 + a_[k];
        b2 = b1;
        b1 = b0;
    }
    double t0 = a_.empty() ? 0.0 : a_[0];
    return t0 + x * b1 - b2;
}

Potential Potential::scaled(double factor) const {
    Potential p = *this;
    for (double& x : p.a_) x *= factor;
    for (double& x : p.b_) x *= factor;
    return p;
}

Potential Potential::rotated(double phi) const {
    if (kind_ != Kind::Torus) throw DomainError("rotation is defined for torus potentials only");
    int d = degree();
    std::vector<double> a(d + 1, 0.0), b(d + 1, 0.0);
    a[0] = c(0);
    for (int k = 1; k <= d; ++k) {
        double ck = c(k), sk = s(k), co = std::cos(k * phi), si = std::sin(k * phi);
        a[k] = ck * co - sk * si;
        b[k] = ck * si + sk * co;
    }
    return torus(std::move(a), std::move(b));
}

std::string Potential::to_string() const {
    std::string out;
    char buf[64];
    auto add = [&](char letter, std::size_t k, double x) {
        if (x == 0.0) return;
        std::snprintf(buf, sizeof buf, "%c%zu=%.17g", letter, k, x);
        if (!out.empty()) out += ',';
        out += buf;
    };
    char first = kind_ == Kind::Torus ? 'c' : 't';
    for (std::size_t k = 0; k < a_.size(); ++k) add(first, k, a_[k]);
    for (std::size_t k = 1; k < b_.size(); ++k) add('s', k, b_[k]);
    if (out.empty()) out = std::string(1, first) + "0=0";
    return out;
}

}  // namespace gge
