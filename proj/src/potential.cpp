#include "vps/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vps {

Potential::Potential(std::vector<double> r, std::vector<double> phi, std::vector<double> dphi, double mass)
    : r_(std::move(r)), phi_(std::move(phi)), dphi_(std::move(dphi)), mass_(mass) {
    const std::size_t n = r_.size();
    if (n < 2 || phi_.size() != n || dphi_.size() != n) throw std::invalid_argument("potential table size mismatch");
    if (r_.front() != 0.0) throw std::invalid_argument("potential table must start at r = 0");
    for (std::size_t i = 1; i < n; ++i)
        if (!(r_[i] > r_[i - 1])) throw std::invalid_argument("potential nodes must increase");
    h_ = r_[1] - r_[0];
    uniform_ = true;
    for (std::size_t i = 1; i < n && uniform_; ++i)
        if (std::abs((r_[i] - r_[i - 1]) - h_) > 1e-9 * h_) uniform_ = false;

    // Fritsch-Carlson limiting keeps monotone data monotone between nodes
    slope_ = dphi_;
    if (nondecreasing()) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double delta = (phi_[i + 1] - phi_[i]) / (r_[i + 1] - r_[i]);
            if (delta <= 0.0) {
                slope_[i] = std::max(0.0, std::min(slope_[i], 0.0));
                slope_[i + 1] = std::max(0.0, std::min(slope_[i + 1], 0.0));
                continue;
            }
            double a = std::max(0.0, slope_[i]) / delta, b = std::max(0.0, slope_[i + 1]) / delta;
            double s = a * a + b * b;
            if (s > 9.0) {
                double tau = 3.0 / std::sqrt(s);
                slope_[i] = tau * a * delta;
                slope_[i + 1] = tau * b * delta;
            }
        }
    }
}

Potential Potential::from_function(const std::function<double(double)>& phi, const std::function<double(double)>& dphi,
                                   double r_max, std::size_t n, double mass) {
    std::vector<double> r(n + 1), p(n + 1), d(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        r[i] = r_max * double(i) / double(n);
        p[i] = phi(r[i]);
        d[i] = dphi(r[i]);
    }
    return Potential(std::move(r), std::move(p), std::move(d), mass);
}

Potential Potential::combine(double a, const Potential& p, double b, const Potential& q) {
    std::vector<double> r;
    if (p.r_ == q.r_) {
        r = p.r_;
    } else {
        r.reserve(p.r_.size() + q.r_.size());
        std::merge(p.r_.begin(), p.r_.end(), q.r_.begin(), q.r_.end(), std::back_inserter(r));
        r.erase(std::unique(r.begin(), r.end(), [](double x, double y) { return std::abs(x - y) <= 1e-14 * (1 + std::abs(x)); }),
                r.end());
    }
    std::vector<double> v(r.size()), d(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        v[i] = a * p.value(r[i]) + b * q.value(r[i]);
        d[i] = a * p.derivative(r[i]) + b * q.derivative(r[i]);
    }
    return Potential(std::move(r), std::move(v), std::move(d), a * p.mass_ + b * q.mass_);
}

std::size_t Potential::locate(double r) const {
    std::size_t n = r_.size();
    std::size_t k;
    if (uniform_) {
        k = std::size_t(std::max(0.0, r / h_));
        if (k >= n - 1) k = n - 2;
        while (k > 0 && r < r_[k]) --k;
        while (k + 2 < n && r >= r_[k + 1]) ++k;
    } else {
        auto it = std::upper_bound(r_.begin(), r_.end(), r);
        k = it == r_.begin() ? 0 : std::size_t(it - r_.begin()) - 1;
        if (k >= n - 1) k = n - 2;
    }
    return k;
}

double Potential::value(double r) const {
    r = std::abs(r);
    if (r > r_.back()) return -mass_ / (4.0 * pi * r);
    std::size_t k = locate(r);
    return Hermite::value(r_[k], r_[k + 1], phi_[k], phi_[k + 1], slope_[k], slope_[k + 1], r);
}

double Potential::derivative(double r) const {
    r = std::abs(r);
    if (r > r_.back()) return mass_ / (4.0 * pi * r * r);
    std::size_t k = locate(r);
    return Hermite::deriv(r_[k], r_[k + 1], phi_[k], phi_[k + 1], slope_[k], slope_[k + 1], r);
}

double Potential::inverse(double e) const {
    if (e < phi_.front()) throw std::domain_error("energy below the potential minimum");
    if (e >= phi_.back()) {
        if (e >= 0.0 || mass_ <= 0.0) throw std::domain_error("energy above the bound range of the potential");
        return std::max(r_.back(), mass_ / (4.0 * pi * -e));
    }
    auto it = std::upper_bound(phi_.begin(), phi_.end(), e);
    std::size_t k = std::size_t(it - phi_.begin()) - 1;
    if (k >= r_.size() - 1) k = r_.size() - 2;
    double a = r_[k], b = r_[k + 1];
    auto f = [&](double x) { return Hermite::value(r_[k], r_[k + 1], phi_[k], phi_[k + 1], slope_[k], slope_[k + 1], x) - e; };
    double fa = f(a), fb = f(b);
    if (fa >= 0.0) return a;
    if (fb <= 0.0) return b;
    double x = a + (b - a) * (-fa) / (fb - fa);
    for (int it2 = 0; it2 < 60; ++it2) {
        double fx = f(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) a = x; else b = x;
        double d = Hermite::deriv(r_[k], r_[k + 1], phi_[k], phi_[k + 1], slope_[k], slope_[k + 1], x);
        double xn = d > 0.0 ? x - fx / d : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (std::abs(xn - x) <= 1e-15 * (std::abs(x) + 1e-300)) return xn;
        x = xn;
    }
    return x;
}

bool Potential::nondecreasing() const {
    for (std::size_t i = 1; i < phi_.size(); ++i)
        if (phi_[i] < phi_[i - 1]) return false;
    return true;
}

double Potential::sup_norm() const {
    double m = 0.0;
    for (double v : phi_) m = std::max(m, std::abs(v));
    return m;
}

double Potential::gradient_norm2() const { return gradient_inner(*this, *this); }

double Potential::gradient_inner(const Potential& a, const Potential& b) {
    std::vector<double> r;
    if (a.r_ == b.r_) {
        r = a.r_;
    } else {
        std::merge(a.r_.begin(), a.r_.end(), b.r_.begin(), b.r_.end(), std::back_inserter(r));
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    const GaussRule& g = gauss_legendre(4);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        double c = 0.5 * (r[i] + r[i + 1]), h = 0.5 * (r[i + 1] - r[i]);
        for (std::size_t k = 0; k < g.x.size(); ++k) {
            double x = c + h * g.x[k];
            s += g.w[k] * h * a.derivative(x) * b.derivative(x) * x * x;
        }
    }
    double R = r.back();
    return 4.0 * pi * s + a.mass_ * b.mass_ / (4.0 * pi * R);
}

}  // namespace vps
