#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace roughsmile {

// Volatility surface sigma(x,y) with analytic partials; all expansion formulas
// consume only the values at the origin plus pointwise sigma, sigma', sigma_dot
// along paths.
struct VolModel {
    std::function<double(double, double)> sigma;
    std::function<double(double, double)> dsigma_dx;
    std::function<double(double, double)> d2sigma_dx2;
    std::function<double(double, double)> dsigma_dy;
    double sigma0 = 0.0;
    double sigma0_prime = 0.0;
    double sigma0_second = 0.0;
    double sigma0_dot = 0.0;
};

struct RBergomiParams {
    double sigma0 = 0.2;
    double eta = 1.5;
    double rho = -0.7;
    double H = 0.3;
    double theta = 1.0;

    void validate() const;
};

// sigma(x,y) = sigma0 exp(eta/2 x - theta eta^2/4 y)
VolModel make_rbergomi(const RBergomiParams& params);

struct DerivativeReport {
    double max_rel_error = 0.0;
    bool ok = true;
};

// Finite-difference check of the three derivative fields at (0,0) and at
// random points in [-1,1]x[0,1]; flags relative errors above 1e-6.
DerivativeReport derivative_selfcheck(const VolModel& model, std::uint64_t seed = 42);

// Key-value config file: sigma0, eta, rho, H, theta (plus MC keys, ignored here).
RBergomiParams load_rbergomi_config(const std::string& path);

}  // namespace roughsmile
