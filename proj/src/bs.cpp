#include "roughsmile/bs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace roughsmile {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double bs_price(double sigma, double t, double k, bool is_call) {
    if (sigma < 0.0) throw std::domain_error("bs_price: sigma must be >= 0");
    if (t < 0.0) throw std::domain_error("bs_price: t must be >= 0");
    const double strike = std::exp(k);
    const double v = sigma * std::sqrt(t);
    if (v == 0.0) {
        const double call = std::max(1.0 - strike, 0.0);
        return is_call ? call : call - 1.0 + strike;  // parity
    }
    const double d1 = -k / v + 0.5 * v;
    const double d2 = d1 - v;
    // evaluate each side directly; going through parity cancels catastrophically
    // when the requested option is far out of the money
    if (is_call) return norm_cdf(d1) - strike * norm_cdf(d2);
    return strike * norm_cdf(-d2) - norm_cdf(-d1);
}

double bs_vega(double sigma, double t, double k) {
    const double v = sigma * std::sqrt(t);
    if (v == 0.0) return 0.0;
    const double d1 = -k / v + 0.5 * v;
    return norm_pdf(d1) * std::sqrt(t);
}

double implied_vol(double price, double t, double k, bool is_call) {
    if (!(t > 0.0)) throw std::domain_error("implied_vol: t must be > 0");
    const double strike = std::exp(k);
    const double lo_band = is_call ? std::max(1.0 - strike, 0.0)
                                   : std::max(strike - 1.0, 0.0);
    const double hi_band = is_call ? 1.0 : strike;
    if (!(price > lo_band && price < hi_band)) {
        std::ostringstream msg;
        msg << "implied_vol: price " << price << " outside the no-arbitrage band ("
            << lo_band << ", " << hi_band << ") at t=" << t << " k=" << k;
        throw std::domain_error(msg.str());
    }

    // Work with the out-of-the-money time value: by parity it equals
    // price - intrinsic, stays positive, and its logarithm is well conditioned
    // even for extreme strikes where the price underflows toward 0.
    const bool otm_call = k >= 0.0;
    const double tv = price - lo_band;
    const double log_tv = std::log(tv);

    // bracket [lo, hi] with value(lo) < tv < value(hi); increasing in sigma
    double lo = 0.0, hi = 1.0;
    while (bs_price(hi, t, k, otm_call) < tv) {
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("implied_vol: bracket expansion failed");
    }

    double sigma = std::clamp(std::sqrt(2.0 * std::fabs(k) / t) + 0.1, 1e-8, hi);
    for (int it = 0; it < 200; ++it) {
        const double value = bs_price(sigma, t, k, otm_call);
        if (value == tv) break;
        if (value > tv) hi = sigma; else lo = sigma;
        const double vega = bs_vega(sigma, t, k);
        double next = 0.5 * (lo + hi);
        if (value > 0.0 && vega > 0.0) {
            // Newton step on log(value) - log(tv); slope vega/value
            const double cand = sigma - (std::log(value) - log_tv) * value / vega;
            if (cand > lo && cand < hi) next = cand;
        }
        if (hi - lo <= 1e-15 * (1.0 + sigma)) break;
        if (std::fabs(next - sigma) <= 1e-15 * (1.0 + sigma)) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

}  // namespace roughsmile
