#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lattag/nn.hpp"

namespace lattag {

// Central-difference check of analytic gradients. The caller populates
// param.grad (one backward pass) before calling; loss() must be a pure
// re-evaluation of the same scalar objective. Relative error per coordinate
// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8); the maximum
// over all coordinates is returned.
inline double grad_check(const std::vector<Parameter<double>*>& params,
                         const std::function<double()>& loss, double eps = 1e-5) {
    double max_rel_err = 0.0;
    for (Parameter<double>* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + eps;
            const double loss_plus = loss();
            p->value[i] = saved - eps;
            const double loss_minus = loss();
            p->value[i] = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * eps);
            const double analytic = p->grad[i];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            max_rel_err = std::max(max_rel_err, rel);
        }
    }
    return max_rel_err;
}

} // namespace lattag
