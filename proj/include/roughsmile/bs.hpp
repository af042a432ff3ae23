#pragma once

namespace roughsmile {

double norm_cdf(double x);
double norm_pdf(double x);

// Black-Scholes price with S0 = 1, r = 0, log-strike k.
double bs_price(double sigma, double t, double k, bool is_call);

// Vega d price / d sigma.
double bs_vega(double sigma, double t, double k);

// Inverts bs_price in sigma by safeguarded Newton/bisection; absolute price
// tolerance 1e-10. Throws std::domain_error if price is outside the
// no-arbitrage band.
double implied_vol(double price, double t, double k, bool is_call);

}  // namespace roughsmile
