#pragma once

#include <functional>

namespace roughsmile {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

// Adaptive Gauss-Kronrod (G7/K15) on [a,b] with absolute tolerance.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double abs_tol,
                                    int max_depth = 30);

// Single G7/K15 panel; err receives the local error estimate.
double gauss_kronrod_15(const std::function<double(double)>& f,
                        double a, double b, double& err);

}  // namespace roughsmile
