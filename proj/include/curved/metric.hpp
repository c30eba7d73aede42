#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "curved/errors.hpp"
#include "curved/types.hpp"

namespace curved {

/**
 * Metric tensor of the label space: a symmetric k x k matrix with unit
 * diagonal and non-negative entries. Off-diagonal entries scale the distance
 * between distinct classes; the identity tensor recovers flat (one-hot)
 * geometry.
 *
 * Positive semidefiniteness is not required and not enforced. The smallest
 * eigenvalue is computed at construction purely as a diagnostic.
 */
template <typename Scalar>
class MetricT {
    static_assert(std::is_floating_point_v<Scalar>, "non floating-point scalar type");

public:
    /// Flat metric: g = identity.
    static MetricT identity(Index k) {
        check_dim(k);
        MatrixX<Scalar> g = MatrixX<Scalar>::Identity(k, k);
        return MetricT(std::move(g), Scalar(1));
    }

    /// Validates invariants to exact equality: produced values must satisfy
    /// them bit-for-bit, unlike values measured from files.
    static MetricT from_matrix(MatrixX<Scalar> g) {
        check_dim(g.rows());
        if (g.rows() != g.cols())
            throw DimensionError("Metric: tensor must be square, got " + shape_str(g));
        for (Index a = 0; a < g.rows(); ++a) {
            if (!(g(a, a) == Scalar(1)))
                throw ValidationError("Metric: diagonal entry (" + std::to_string(a) +
                                      ") must equal 1");
            for (Index b = 0; b < g.cols(); ++b) {
                if (!std::isfinite(static_cast<double>(g(a, b))))
                    throw ValidationError("Metric: non-finite entry at (" + std::to_string(a) +
                                          "," + std::to_string(b) + ")");
                if (g(a, b) < Scalar(0))
                    throw ValidationError("Metric: negative entry at (" + std::to_string(a) +
                                          "," + std::to_string(b) + ")");
                if (g(a, b) != g(b, a))
                    throw ValidationError("Metric: tensor not symmetric at (" +
                                          std::to_string(a) + "," + std::to_string(b) + ")");
            }
        }
        const Scalar min_eig = smallest_eigenvalue(g);
        return MetricT(std::move(g), min_eig);
    }

    /// Import path: accepts symmetry/diagonal drift up to tol (values read
    /// from text), then canonicalizes so the stored tensor is exact.
    static MetricT from_matrix_tolerant(MatrixX<Scalar> g, Scalar tol = Scalar(1e-12)) {
        check_dim(g.rows());
        if (g.rows() != g.cols())
            throw DimensionError("Metric: tensor must be square, got " + shape_str(g));
        for (Index a = 0; a < g.rows(); ++a) {
            using std::abs;
            if (abs(g(a, a) - Scalar(1)) > tol)
                throw ValidationError("Metric: diagonal entry (" + std::to_string(a) +
                                      ") deviates from 1 beyond tolerance");
            for (Index b = a + 1; b < g.cols(); ++b) {
                if (abs(g(a, b) - g(b, a)) > tol)
                    throw ValidationError("Metric: asymmetry beyond tolerance at (" +
                                          std::to_string(a) + "," + std::to_string(b) + ")");
            }
        }
        for (Index a = 0; a < g.rows(); ++a) {
            g(a, a) = Scalar(1);
            for (Index b = a + 1; b < g.cols(); ++b) {
                const Scalar v = (g(a, b) + g(b, a)) / Scalar(2);
                g(a, b) = v;
                g(b, a) = v;
            }
        }
        return from_matrix(std::move(g));
    }

    Index k() const { return g_.rows(); }
    const MatrixX<Scalar>& tensor() const { return g_; }

    Scalar operator()(Index a, Index b) const {
        if (a < 0 || a >= k() || b < 0 || b >= k())
            throw OutOfRangeError("Metric: class index out of range");
        return g_(a, b);
    }

    /// Smallest eigenvalue of g, for diagnostics only; may be negative.
    Scalar min_eigenvalue() const { return min_eig_; }

private:
    MetricT(MatrixX<Scalar> g, Scalar min_eig) : g_(std::move(g)), min_eig_(min_eig) {}

    static void check_dim(Index k) {
        if (k < 2)
            throw DimensionError("Metric: class count must be >= 2, got " + std::to_string(k));
    }

    static std::string shape_str(const MatrixX<Scalar>& m) {
        return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
    }

    static Scalar smallest_eigenvalue(const MatrixX<Scalar>& g) {
        Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(g, Eigen::EigenvaluesOnly);
        return solver.eigenvalues()(0);
    }

    MatrixX<Scalar> g_;
    Scalar min_eig_;
};

using Metric = MetricT<double>;

template <typename Scalar = double>
MetricT<Scalar> identity_metric(Index k) {
    return MetricT<Scalar>::identity(k);
}

/// One-hot target: class index plus the class count it lives in.
struct OneHotLabel {
    OneHotLabel(Index class_index, Index k) : class_index(class_index), k(k) {
        if (k < 2) throw DimensionError("OneHotLabel: class count must be >= 2");
        if (class_index < 0 || class_index >= k)
            throw OutOfRangeError("OneHotLabel: class index " + std::to_string(class_index) +
                                  " out of range [0," + std::to_string(k) + ")");
    }

    template <typename Scalar = double>
    VectorX<Scalar> to_vector() const {
        VectorX<Scalar> v = VectorX<Scalar>::Zero(k);
        v(class_index) = Scalar(1);
        return v;
    }

    Index class_index;
    Index k;
};

/// Classifier output: entries in [0, 1] summing to 1 within 1e-9.
template <typename Scalar>
class ProbVectorT {
    static_assert(std::is_floating_point_v<Scalar>, "non floating-point scalar type");

public:
    explicit ProbVectorT(VectorX<Scalar> p) : p_(std::move(p)) {
        if (p_.size() < 1) throw DimensionError("ProbVector: empty vector");
        Scalar sum = Scalar(0);
        for (Index i = 0; i < p_.size(); ++i) {
            const Scalar v = p_(i);
            if (!std::isfinite(static_cast<double>(v)) || v < Scalar(0) || v > Scalar(1))
                throw ValidationError("ProbVector: entry " + std::to_string(i) +
                                      " outside [0,1]");
            sum += v;
        }
        using std::abs;
        if (abs(sum - Scalar(1)) > Scalar(1e-9))
            throw ValidationError("ProbVector: entries sum to " + std::to_string(sum) +
                                  ", not 1 within 1e-9");
    }

    const VectorX<Scalar>& vec() const { return p_; }
    Index size() const { return p_.size(); }
    Scalar operator[](Index i) const { return p_(i); }

private:
    VectorX<Scalar> p_;
};

using ProbVector = ProbVectorT<double>;

/// Squared Euclidean distance between two label-space vectors.
template <typename Scalar>
Scalar euclidean_sq_distance(const VectorX<Scalar>& y, const VectorX<Scalar>& yhat) {
    if (y.size() != yhat.size())
        throw DimensionError("euclidean_sq_distance: vector lengths " +
                             std::to_string(y.size()) + " and " + std::to_string(yhat.size()) +
                             " differ");
    return (yhat - y).squaredNorm();
}

/// Curved squared distance: sum_{ab} g_ab |yhat_a - y_a| |yhat_b - y_b|.
/// Reduces to euclidean_sq_distance under the identity metric.
template <typename Scalar>
Scalar curved_sq_distance(const MetricT<Scalar>& m, const VectorX<Scalar>& y,
                          const VectorX<Scalar>& yhat) {
    if (y.size() != yhat.size() || y.size() != m.k())
        throw DimensionError("curved_sq_distance: expected vectors of length " +
                             std::to_string(m.k()));
    const VectorX<Scalar> ad = (yhat - y).cwiseAbs();
    return ad.dot(m.tensor() * ad);
}

/// Squared distance between the one-hot vectors of classes a and b:
/// 0 when a = b, otherwise 2 (1 + g_ab).
template <typename Scalar>
Scalar class_pair_sq_distance(const MetricT<Scalar>& m, Index a, Index b) {
    if (a < 0 || a >= m.k() || b < 0 || b >= m.k())
        throw OutOfRangeError("class_pair_sq_distance: class index out of range");
    if (a == b) return Scalar(0);
    return Scalar(2) * (Scalar(1) + m.tensor()(a, b));
}

/// Pairwise class distances sqrt(2 (1 + g_ab)); symmetric, zero diagonal.
template <typename Scalar>
MatrixX<Scalar> distance_report(const MetricT<Scalar>& m) {
    const Index k = m.k();
    MatrixX<Scalar> d = MatrixX<Scalar>::Zero(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            const Scalar v = std::sqrt(class_pair_sq_distance(m, a, b));
            d(a, b) = v;
            d(b, a) = v;
        }
    }
    return d;
}

}  // namespace curved
