#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "roughsmile/volmodel.hpp"

namespace roughsmile {

enum class MCScheme { CovarianceExact, HybridStyle };

MCScheme parse_scheme(const std::string& name);
std::string scheme_name(MCScheme scheme);

struct MCConfig {
    long n_paths = 1000000;
    int n_steps = 256;  // uniform steps over [0, max maturity]
    MCScheme scheme = MCScheme::CovarianceExact;
    std::uint64_t seed = 1;
    bool antithetic = true;
    std::vector<double> maturities;
    std::vector<double> strikes;  // log strikes

    void validate() const;
};

// Terminal values per requested maturity. Maturities are snapped to the
// nearest simulation grid time; `maturities` holds the snapped values.
struct PathBundle {
    std::vector<double> maturities;
    std::vector<double> requested;
    long n_paths = 0;
    bool antithetic = false;
    MCScheme scheme = MCScheme::CovarianceExact;
    std::uint64_t seed = 0;
    double H = 0.5;

    std::vector<Eigen::VectorXd> X;      // log price per maturity, per path
    std::vector<Eigen::VectorXd> W_hat;  // Volterra process
    std::vector<Eigen::VectorXd> W;      // driving Brownian motion
};

PathBundle simulate(const RBergomiParams& params, const MCConfig& cfg);

struct PriceRow {
    double t = 0.0;
    double k = 0.0;
    double call = 0.0, call_se = 0.0;
    double put = 0.0, put_se = 0.0;
    double ivol = 0.0, ivol_se = 0.0;
    bool ivol_ok = false;
};

std::vector<PriceRow> price_options(const PathBundle& bundle,
                                    const std::vector<double>& strikes);

// CSV with columns t,k,x,call,call_se,put,put_se,ivol,ivol_se,scheme,seed and
// `# key=value` provenance headers.
void write_price_csv(const std::string& path, const std::vector<PriceRow>& rows,
                     const PathBundle& bundle,
                     const std::vector<std::pair<std::string, std::string>>& header);

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
};

// Compensated mean and standard error; with antithetic pairing consecutive
// paths (2i, 2i+1) count as one sample.
MeanSE mean_se(const Eigen::VectorXd& values, bool antithetic = false);

// Worker count: min(hardware, ROUGHSMILE_THREADS if set).
int worker_count();

}  // namespace roughsmile
