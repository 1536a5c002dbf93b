#pragma once

#include <functional>
#include <vector>

namespace freeknot {

/// 1D bilinear kernel a(u, v) = int (d^k u)(d^k v) dx with unit coefficient.
struct bilinear_kernel {
    int k = 0;
};

/// 1D linear kernel l(v) = int f (d^k v) dx with data evaluator f.
struct linear_kernel {
    int k = 0;
    std::function<double(double)> data;
};

/// Rank-r sums of tensor products of 1D kernels; every term carries
/// exactly one kernel per axis.
struct separable_form {
    std::vector<std::vector<bilinear_kernel>> a_terms; // [term][axis]
    std::vector<std::vector<linear_kernel>> l_terms;   // [term][axis]
};

} // namespace freeknot
