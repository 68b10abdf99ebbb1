#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "vistruct/rng.hpp"

namespace vistruct {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;  // one row per item

/// Stored embeddings must be unit length within this tolerance.
inline constexpr double kUnitNormTolerance = 1e-6;

template <typename Derived>
bool is_unit_norm(const Eigen::MatrixBase<Derived>& v,
                  typename Derived::Scalar tol = kUnitNormTolerance) {
    return std::abs(v.norm() - typename Derived::Scalar(1)) <= tol;
}

/// Returns v scaled to unit length. Throws on the zero vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> l2_normalized(
    const Eigen::MatrixBase<Derived>& v) {
    const auto n = v.norm();
    if (n == typename Derived::Scalar(0))
        throw std::invalid_argument("l2_normalized: zero vector");
    return v / n;
}

/// cos(a, b) = a.b / (|a||b|), in [-1, 1]. Throws on dimension mismatch or a
/// zero operand.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    const auto na = a.norm();
    const auto nb = b.norm();
    if (na == typename DerivedA::Scalar(0) || nb == typename DerivedA::Scalar(0))
        throw std::invalid_argument("cosine_similarity: zero vector");
    return a.dot(b) / (na * nb);
}

/// Deterministic pseudo-embedding: splitmix-filled uniform components,
/// normalized. The mock embedding backends and test fixtures share this.
inline Vec pseudo_embedding(std::uint64_t seed, int dim) {
    if (dim <= 0) throw std::invalid_argument("pseudo_embedding: dim must be > 0");
    SplitMix64 rng(seed);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
    double n = v.norm();
    while (n == 0.0) {  // astronomically unlikely; re-roll for safety
        for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
        n = v.norm();
    }
    return v / n;
}

}  // namespace vistruct
