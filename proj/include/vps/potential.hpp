#pragma once

#include <functional>
#include <vector>

#include "vps/numerics.hpp"

namespace vps {

struct RadialProfile {
    RadialGrid grid;
    std::vector<double> values;
};

// Radial potential: cubic Hermite table on [0, r_max] and the Newtonian tail
// -mass/(4 pi r) beyond r_max.
class Potential {
public:
    Potential() = default;
    Potential(std::vector<double> r, std::vector<double> phi, std::vector<double> dphi, double mass);

    static Potential from_function(const std::function<double(double)>& phi, const std::function<double(double)>& dphi,
                                   double r_max, std::size_t n, double mass);
    // a*p + b*q on the merged node set
    static Potential combine(double a, const Potential& p, double b, const Potential& q);

    double operator()(double r) const { return value(r); }
    double value(double r) const;
    double derivative(double r) const;
    // inverse on [phi(0), 0): the radius where phi(r) = e
    double inverse(double e) const;

    double min() const { return phi_.front(); }
    double r_max() const { return r_.back(); }
    double mass() const { return mass_; }
    bool empty() const { return r_.empty(); }
    bool nondecreasing() const;
    double sup_norm() const;

    const std::vector<double>& nodes() const { return r_; }
    const std::vector<double>& values() const { return phi_; }
    const std::vector<double>& derivatives() const { return dphi_; }

    // 4 pi int phi'^2 r^2 dr including the exterior tail mass^2/(4 pi r_max)
    double gradient_norm2() const;
    // 4 pi int phi' psi' r^2 dr over all space
    static double gradient_inner(const Potential& a, const Potential& b);

private:
    std::size_t locate(double r) const;

    std::vector<double> r_, phi_, dphi_, slope_;
    double mass_ = 0.0;
    bool uniform_ = false;
    double h_ = 0.0;
};

}  // namespace vps
