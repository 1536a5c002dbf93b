#pragma once

#include <Eigen/Dense>
#include <vector>

#include "freeknot/errors.hpp"

namespace freeknot {

/// Dense rank-d tensor, row-major with the last axis fastest.
struct tensor {
    std::vector<int> dims;
    std::vector<double> data;

    static tensor zeros(std::vector<int> d) {
        tensor t;
        long n = 1;
        for (int k : d) n *= k;
        t.dims = std::move(d);
        t.data.assign(n, 0.0);
        return t;
    }
};

namespace detail {

inline long pre_size(const std::vector<int>& dims, int axis) {
    long n = 1;
    for (int t = 0; t < axis; ++t) n *= dims[t];
    return n;
}

inline long post_size(const std::vector<int>& dims, int axis) {
    long n = 1;
    for (int t = axis + 1; t < static_cast<int>(dims.size()); ++t) n *= dims[t];
    return n;
}

} // namespace detail

/// Contract `axis` of T with the columns of M: out[.., r, ..] = sum_c M(r,c) T[.., c, ..].
inline tensor mode_apply(const Eigen::MatrixXd& M, const tensor& T, int axis) {
    const int n = T.dims[axis];
    if (M.cols() != n) throw arity_error("mode_apply dimension mismatch");
    const long pre = detail::pre_size(T.dims, axis);
    const long post = detail::post_size(T.dims, axis);
    auto dims = T.dims;
    dims[axis] = static_cast<int>(M.rows());
    tensor out = tensor::zeros(dims);
    for (long ip = 0; ip < pre; ++ip)
        for (int r = 0; r < M.rows(); ++r) {
            double* dst = out.data.data() + (ip * M.rows() + r) * post;
            for (int c = 0; c < n; ++c) {
                const double m = M(r, c);
                if (m == 0.0) continue;
                const double* src = T.data.data() + (ip * n + c) * post;
                for (long io = 0; io < post; ++io) dst[io] += m * src[io];
            }
        }
    return out;
}

/// Q(r, c) = sum over all shared indices of A[.., r, ..] * B[.., c, ..],
/// pairing every axis except `axis` (those extents must match).
inline Eigen::MatrixXd contract_all_but(const tensor& A, const tensor& B, int axis) {
    const long pre = detail::pre_size(A.dims, axis);
    const long post = detail::post_size(A.dims, axis);
    if (pre != detail::pre_size(B.dims, axis) || post != detail::post_size(B.dims, axis))
        throw arity_error("contract_all_but dimension mismatch");
    const int na = A.dims[axis], nb = B.dims[axis];
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(na, nb);
    for (long ip = 0; ip < pre; ++ip)
        for (int r = 0; r < na; ++r)
            for (int c = 0; c < nb; ++c) {
                const double* pa = A.data.data() + (ip * na + r) * post;
                const double* pb = B.data.data() + (ip * nb + c) * post;
                double acc = 0.0;
                for (long io = 0; io < post; ++io) acc += pa[io] * pb[io];
                Q(r, c) += acc;
            }
    return Q;
}

} // namespace freeknot
