#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "castor/tensor.hpp"

namespace castor {

// Certify an analytic gradient against central finite differences.
//
// `f` evaluates the scalar objective; `analytic_grad` returns df/dx at x.
// Every coordinate is perturbed by ±eps and the numeric slope is compared to
// the analytic one with the scale-aware relative error
//     |analytic - numeric| / max(1, |analytic|, |numeric|).
// Returns the maximum error over all coordinates.  Run at 64-bit precision;
// float rounding would drown the signal.
inline double grad_check(const std::function<double(const Tensor<double>&)>& f,
                         const std::function<Tensor<double>(const Tensor<double>&)>& analytic_grad,
                         const Tensor<double>& x, double eps) {
    if (!(eps > 0.0) || eps > 1e-3) {
        throw std::invalid_argument("grad_check: eps must be in (0, 1e-3]");
    }

    Tensor<double> grad = analytic_grad(x);
    if (!grad.same_shape(x)) {
        throw ShapeMismatch("grad_check: analytic gradient shape differs from x");
    }
    require_finite(grad, "analytic gradient");

    Tensor<double> probe = x;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double original = x.data[i];
        probe.data[i] = original + eps;
        double up = f(probe);
        probe.data[i] = original - eps;
        double down = f(probe);
        probe.data[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NonFinite("grad_check: objective evaluated to a non-finite value");
        }
        double numeric = (up - down) / (2.0 * eps);
        double analytic = grad.data[i];
        double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

}  // namespace castor
