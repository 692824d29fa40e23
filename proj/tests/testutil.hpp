#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wlab/tensor.hpp"

namespace wlab::testutil {

// Worst-case relative error between analytic gradients of fn() and central
// finite differences over every coordinate of the given leaf tensors. fn must
// rebuild the computation each call (it is re-evaluated under perturbation).
template <typename Fn>
double max_gradcheck_error(Fn&& fn, std::vector<Tensor>& leaves,
                           double h = 1e-5) {
    for (Tensor& t : leaves) t.zero_grad();
    Tensor out = fn();
    backward(out);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (Tensor& t : leaves) analytic.push_back(t.grad());

    double worst = 0.0;
    for (std::size_t ti = 0; ti < leaves.size(); ++ti) {
        std::vector<double>& vals = leaves[ti].values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = fn().item();
            vals[i] = orig - h;
            const double fm = fn().item();
            vals[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[ti][i];
            const double rel = std::fabs(a - numeric) /
                               std::max({1.0, std::fabs(a), std::fabs(numeric)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace wlab::testutil
