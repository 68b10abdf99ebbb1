#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

#include "vistruct/rng.hpp"

namespace vistruct {

template <typename Scalar>
struct KMeansResultT {
    std::vector<int> assignments;  // one cluster id in [0, k) per input row
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centroids;  // k x d
    Scalar inertia = Scalar(0);    // sum of squared distances to assigned centroids
    int iterations = 0;
    std::vector<Scalar> inertia_history;  // inertia after each assignment pass
};

using KMeansResult = KMeansResultT<double>;

namespace detail {

// Nearest centroid by squared Euclidean distance; ties go to the lowest
// cluster id (strict < keeps the first minimum).
template <typename Scalar, typename Derived, typename CentroidDerived>
std::pair<int, Scalar> nearest_centroid(const Eigen::MatrixBase<Derived>& point,
                                        const Eigen::MatrixBase<CentroidDerived>& centroids) {
    int best = 0;
    Scalar best_d = (point - centroids.row(0)).squaredNorm();
    for (int c = 1; c < centroids.rows(); ++c) {
        const Scalar d = (point - centroids.row(c)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return {best, best_d};
}

}  // namespace detail

/// Lloyd's algorithm from seeded k-means++ initialization over the rows of
/// `points` (n x d). Stops when every centroid moves less than `tol`
/// (Euclidean) or after max_iter iterations, then runs a final assignment
/// pass so each point ends on its nearest centroid. Deterministic for fixed
/// (points, k, seed): all reductions run in fixed index order and
/// equidistant ties resolve to the lowest cluster id. Empty clusters are
/// reseeded at the point farthest from their previous centroid.
template <typename Derived>
KMeansResultT<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, int k,
                                               std::uint64_t seed, int max_iter = 100,
                                               typename Derived::Scalar tol = 1e-6) {
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= n");
    if (max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be >= 1");
    if (tol < Scalar(0)) throw std::invalid_argument("kmeans: tol must be >= 0");

    SplitMix64 rng(seed);
    Matrix centroids(k, d);

    // k-means++ seeding: first centroid uniform, then D^2-weighted picks.
    std::vector<Scalar> dist2(n, std::numeric_limits<Scalar>::max());
    {
        const int first = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
        centroids.row(0) = points.row(first);
        for (int c = 1; c < k; ++c) {
            Scalar total = Scalar(0);
            for (int i = 0; i < n; ++i) {
                const Scalar d2 = (points.row(i) - centroids.row(c - 1)).squaredNorm();
                if (d2 < dist2[i]) dist2[i] = d2;
                total += dist2[i];
            }
            int chosen = -1;
            if (total > Scalar(0)) {
                const Scalar u = static_cast<Scalar>(rng.next_double()) * total;
                Scalar acc = Scalar(0);
                for (int i = 0; i < n; ++i) {
                    acc += dist2[i];
                    if (u < acc) {
                        chosen = i;
                        break;
                    }
                }
                if (chosen < 0) chosen = n - 1;
            } else {
                // all remaining points coincide with existing centroids
                chosen = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
            }
            centroids.row(c) = points.row(chosen);
        }
    }

    KMeansResultT<Scalar> result;
    result.assignments.assign(n, 0);
    std::vector<int> counts(k, 0);

    for (int iter = 0; iter < max_iter; ++iter) {
        // assignment pass, inertia accumulated in point order
        Scalar inertia = Scalar(0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            const auto [best, best_d] = detail::nearest_centroid<Scalar>(points.row(i), centroids);
            result.assignments[i] = best;
            counts[best]++;
            inertia += best_d;
        }
        result.inertia = inertia;
        result.inertia_history.push_back(inertia);
        result.iterations = iter + 1;

        // update pass: means in fixed point order
        Matrix next = Matrix::Zero(k, d);
        for (int i = 0; i < n; ++i) next.row(result.assignments[i]) += points.row(i);
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) next.row(c) /= Scalar(counts[c]);

        // reseed each empty cluster at the point farthest from its previous
        // centroid (lowest index on ties; points already claimed this pass
        // are skipped so two empty clusters never grab the same row)
        std::vector<bool> claimed(n, false);
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int far = -1;
            Scalar far_d = Scalar(-1);
            for (int i = 0; i < n; ++i) {
                if (claimed[i]) continue;
                const Scalar d2 = (points.row(i) - centroids.row(c)).squaredNorm();
                if (d2 > far_d) {
                    far_d = d2;
                    far = i;
                }
            }
            if (far >= 0) {
                next.row(c) = points.row(far);
                claimed[far] = true;
            }
        }

        Scalar max_move = Scalar(0);
        for (int c = 0; c < k; ++c) {
            const Scalar move = (next.row(c) - centroids.row(c)).norm();
            if (move > max_move) max_move = move;
        }
        centroids = next;
        if (max_move < tol) break;
    }

    // final assignment so reported clusters match the final centroids
    Scalar inertia = Scalar(0);
    for (int i = 0; i < n; ++i) {
        const auto [best, best_d] = detail::nearest_centroid<Scalar>(points.row(i), centroids);
        result.assignments[i] = best;
        inertia += best_d;
    }
    result.inertia = inertia;
    result.inertia_history.push_back(inertia);
    result.centroids = std::move(centroids);
    return result;
}

/// Recomputes inertia from scratch for a given clustering; the audit
/// counterpart of the incrementally tracked value.
template <typename Derived, typename CentroidDerived>
typename Derived::Scalar kmeans_inertia(const Eigen::MatrixBase<Derived>& points,
                                        const Eigen::MatrixBase<CentroidDerived>& centroids,
                                        const std::vector<int>& assignments) {
    using Scalar = typename Derived::Scalar;
    if (assignments.size() != static_cast<std::size_t>(points.rows()))
        throw std::invalid_argument("kmeans_inertia: assignment count mismatch");
    Scalar total = Scalar(0);
    for (int i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(assignments[i])).squaredNorm();
    return total;
}

}  // namespace vistruct
