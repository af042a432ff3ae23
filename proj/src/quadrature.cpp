#include "roughsmile/quadrature.hpp"

#include <cmath>
#include <algorithm>

namespace roughsmile {

namespace {

// Kronrod-15 abscissae on [0,1] (positive half), Gauss-7 weights on the
// shared nodes, Kronrod weights on all nodes.
const double kNodes[8] = {
    0.000000000000000000000000000000000e+00,
    2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01,
    5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01,
    8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01,
    9.914553711208126392068546975263285e-01};
const double kWeightsK[8] = {
    2.094821410847278280129991748917143e-01,
    2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01,
    1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01,
    1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02,
    2.293532201052922496373200805896959e-02};
const double kWeightsG[4] = {
    4.179591836734693877551020408163265e-01,
    3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01,
    1.294849661688696932706114326790820e-01};

}  // namespace

double gauss_kronrod_15(const std::function<double(double)>& f,
                        double a, double b, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k15 = kWeightsK[0] * fc;
    double g7 = kWeightsG[0] * fc;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * kNodes[i];
        const double fi = f(c + dx) + f(c - dx);
        k15 += kWeightsK[i] * fi;
        if (i % 2 == 0) g7 += kWeightsG[i / 2] * fi;
    }
    k15 *= h;
    g7 *= h;
    const double d = std::fabs(k15 - g7);
    err = std::min(d, 200.0 * d * std::sqrt(d));
    return k15;
}

namespace {

void integrate_rec(const std::function<double(double)>& f, double a, double b,
                   double tol, int depth, QuadratureResult& out) {
    double err;
    const double v = gauss_kronrod_15(f, a, b, err);
    if (err <= tol || depth <= 0) {
        out.value += v;
        out.error_estimate += err;
        if (err > tol) out.converged = false;
        return;
    }
    const double c = 0.5 * (a + b);
    integrate_rec(f, a, c, 0.5 * tol, depth - 1, out);
    integrate_rec(f, c, b, 0.5 * tol, depth - 1, out);
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double abs_tol,
                                    int max_depth) {
    QuadratureResult out;
    if (a == b) return out;
    integrate_rec(f, a, b, abs_tol, max_depth, out);
    return out;
}

}  // namespace roughsmile
