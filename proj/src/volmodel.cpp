#include "roughsmile/volmodel.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace roughsmile {

void RBergomiParams::validate() const {
    if (!(sigma0 > 0.0)) throw std::domain_error("rBergomi: sigma0 must be positive");
    if (!(rho > -1.0 && rho < 1.0)) throw std::domain_error("rBergomi: rho must lie in (-1,1)");
    if (!(H > 0.0) || H > 0.5) throw std::domain_error("rBergomi: H must lie in (0,1/2]");
}

VolModel make_rbergomi(const RBergomiParams& p) {
    p.validate();
    const double s0 = p.sigma0, eta = p.eta, theta = p.theta;
    VolModel m;
    m.sigma = [s0, eta, theta](double x, double y) {
        return s0 * std::exp(0.5 * eta * x - 0.25 * theta * eta * eta * y);
    };
    auto sig = m.sigma;
    m.dsigma_dx = [sig, eta](double x, double y) { return 0.5 * eta * sig(x, y); };
    m.d2sigma_dx2 = [sig, eta](double x, double y) { return 0.25 * eta * eta * sig(x, y); };
    m.dsigma_dy = [sig, eta, theta](double x, double y) {
        return -0.25 * theta * eta * eta * sig(x, y);
    };
    m.sigma0 = s0;
    m.sigma0_prime = 0.5 * eta * s0;
    m.sigma0_second = 0.25 * eta * eta * s0;
    m.sigma0_dot = -0.25 * theta * eta * eta * s0;
    return m;
}

DerivativeReport derivative_selfcheck(const VolModel& m, std::uint64_t seed) {
    DerivativeReport rep;
    const double h = 1e-5;
    const double h2 = 1e-4;  // wider step: the second difference divides by h^2
    auto update = [&](double analytic, double fd, double scale) {
        const double denom = std::max({std::fabs(analytic), std::fabs(fd), scale});
        if (denom == 0.0) return;
        rep.max_rel_error = std::max(rep.max_rel_error, std::fabs(analytic - fd) / denom);
    };
    auto check_point = [&](double x, double y) {
        const double scale = std::fabs(m.sigma(x, y));
        update(m.dsigma_dx(x, y), (m.sigma(x + h, y) - m.sigma(x - h, y)) / (2 * h), scale);
        update(m.d2sigma_dx2(x, y),
               (m.sigma(x + h2, y) - 2 * m.sigma(x, y) + m.sigma(x - h2, y)) / (h2 * h2),
               scale);
        update(m.dsigma_dy(x, y), (m.sigma(x, y + h) - m.sigma(x, y - h)) / (2 * h), scale);
    };
    check_point(0.0, 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.0, 1.0);
    for (int i = 0; i < 8; ++i) check_point(ux(rng), uy(rng));
    // also verify the stored origin values
    update(m.sigma0, m.sigma(0, 0), 1.0);
    update(m.sigma0_prime, m.dsigma_dx(0, 0), 1.0);
    update(m.sigma0_second, m.d2sigma_dx2(0, 0), 1.0);
    update(m.sigma0_dot, m.dsigma_dy(0, 0), 1.0);
    rep.ok = rep.max_rel_error <= 1e-6;
    return rep;
}

RBergomiParams load_rbergomi_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RBergomiParams p;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const double val = std::stod(line.substr(eq + 1));
        if (key == "sigma0") p.sigma0 = val;
        else if (key == "eta") p.eta = val;
        else if (key == "rho") p.rho = val;
        else if (key == "H") p.H = val;
        else if (key == "theta") p.theta = val;
    }
    p.validate();
    return p;
}

}  // namespace roughsmile
