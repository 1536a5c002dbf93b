#pragma once

#include <algorithm>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "freeknot/errors.hpp"

namespace freeknot {

/// Immutable non-decreasing sequence of knot abscissae. All operators
/// return fresh vectors; equality of abscissae is exact floating-point
/// equality (repeated knots are created deliberately, never by snapping).
class knot_vector {
public:
    knot_vector() = default;

    explicit knot_vector(std::vector<double> values) : values_(std::move(values)) {
        check();
    }

    knot_vector(std::initializer_list<double> values) : values_(values) { check(); }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    const std::vector<double>& values() const { return values_; }
    std::span<const double> span() const { return values_; }

    bool operator==(const knot_vector& other) const = default;

private:
    void check() const {
        if (values_.size() < 2)
            throw arity_error("knot vector needs at least 2 entries");
        if (!std::is_sorted(values_.begin(), values_.end()))
            throw range_error("knot vector must be non-decreasing");
    }

    std::vector<double> values_;
};

namespace detail {

inline std::vector<double> drop_first_v(std::span<const double> v) {
    return {v.begin() + 1, v.end()};
}

inline std::vector<double> drop_last_v(std::span<const double> v) {
    return {v.begin(), v.end() - 1};
}

inline std::vector<double> insert_v(std::span<const double> v, double x) {
    std::vector<double> out(v.begin(), v.end());
    out.insert(std::upper_bound(out.begin(), out.end(), x), x);
    return out;
}

inline double width_v(std::span<const double> v) { return v.back() - v.front(); }

inline double min_gap_v(std::span<const double> v) {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) h = std::min(h, v[i + 1] - v[i]);
    return h;
}

} // namespace detail

/// Remove the first knot.
inline knot_vector drop_first(const knot_vector& kv) {
    if (kv.size() < 3)
        throw arity_error("drop_first requires at least 3 knots");
    return knot_vector(detail::drop_first_v(kv.span()));
}

/// Remove the last knot.
inline knot_vector drop_last(const knot_vector& kv) {
    if (kv.size() < 3)
        throw arity_error("drop_last requires at least 3 knots");
    return knot_vector(detail::drop_last_v(kv.span()));
}

/// Insert x, keeping the order. x must lie within [front, back].
inline knot_vector insert(const knot_vector& kv, double x) {
    if (x < kv.front() || x > kv.back())
        throw range_error("inserted knot outside the vector's span");
    return knot_vector(detail::insert_v(kv.span(), x));
}

/// Span between the outermost knots.
inline double width(const knot_vector& kv) { return kv.back() - kv.front(); }

/// Smallest gap between consecutive knots; 0 iff a knot is repeated.
inline double min_mesh_size(const knot_vector& kv) {
    return detail::min_gap_v(kv.span());
}

/// Joint minimum mesh size of a collection of knot vectors.
inline double joint_min_mesh_size(std::span<const knot_vector> kvs) {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& kv : kvs) h = std::min(h, min_mesh_size(kv));
    return h;
}

} // namespace freeknot
