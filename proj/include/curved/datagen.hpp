#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "curved/errors.hpp"
#include "curved/io.hpp"
#include "curved/rng.hpp"
#include "curved/types.hpp"

namespace curved {

/// Synthetic hierarchical dataset: n_super superclass clusters, each split
/// into per_super subclasses, with Gaussian noise around subclass centers.
struct HierarchySpec {
    Index n_super = 2;
    Index per_super = 2;
    Index d = 8;
    double super_sep = 6.0;
    double sub_sep = 1.5;
    double noise_sigma = 1.0;
    Index n_per_class = 500;
    std::uint64_t seed = 1;

    Index num_classes() const { return n_super * per_super; }

    void validate() const {
        if (n_super < 1 || per_super < 1 || n_per_class < 1 || d < 1)
            throw ValidationError("HierarchySpec: counts and dimension must be >= 1");
        if (!(super_sep > sub_sep) || !(sub_sep > 0))
            throw ValidationError("HierarchySpec: need super_sep > sub_sep > 0");
        if (!(noise_sigma >= 0)) throw ValidationError("HierarchySpec: negative noise sigma");
        if (d < n_super - 1)
            throw ValidationError("HierarchySpec: d = " + std::to_string(d) +
                                  " too small to embed a " + std::to_string(n_super) +
                                  "-superclass simplex (need d >= n_super - 1)");
        if (d < per_super - 1)
            throw ValidationError("HierarchySpec: d = " + std::to_string(d) +
                                  " too small to embed a " + std::to_string(per_super) +
                                  "-subclass simplex (need d >= per_super - 1)");
        if (num_classes() < 2)
            throw ValidationError("HierarchySpec: need at least 2 classes in total");
    }
};

/// Feature matrix (one example per row) with integer class labels.
/// superclass_of is the ground-truth coarse grouping when known (generated
/// data); it is empty for datasets loaded from CSV.
struct Dataset {
    MatrixX<double> features;
    std::vector<Index> labels;
    Index k = 0;
    std::vector<Index> superclass_of;

    Index n() const { return features.rows(); }
    Index d() const { return features.cols(); }

    void validate() const {
        if (static_cast<Index>(labels.size()) != n())
            throw DimensionError("Dataset: label count does not match example count");
        for (Index label : labels)
            if (label < 0 || label >= k)
                throw OutOfRangeError("Dataset: label out of range");
        if (!superclass_of.empty() && static_cast<Index>(superclass_of.size()) != k)
            throw DimensionError("Dataset: superclass map does not cover all classes");
    }
};

namespace detail {

/// Vertices of a regular simplex with n points, centered on the origin of
/// R^(n-1), written via the Helmert basis: vertex i is column i of the
/// (n-1) x n Helmert matrix. Pairwise distances are sqrt(2) and every vertex
/// has norm sqrt(1 - 1/n).
inline MatrixX<double> helmert_simplex(Index n) {
    MatrixX<double> v = MatrixX<double>::Zero(n > 1 ? n - 1 : 0, n);
    for (Index j = 1; j < n; ++j) {
        const double norm = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
        for (Index i = 0; i < j; ++i) v(j - 1, i) = norm;
        v(j - 1, j) = -static_cast<double>(j) * norm;
    }
    return v;
}

/// Haar-distributed rotation from the QR decomposition of a Gaussian matrix,
/// with column signs fixed by the diagonal of R.
inline MatrixX<double> random_rotation(Index d, Rng& rng) {
    MatrixX<double> a(d, d);
    for (Index r = 0; r < d; ++r)
        for (Index c = 0; c < d; ++c) a(r, c) = rng.normal();
    Eigen::HouseholderQR<MatrixX<double>> qr(a);
    MatrixX<double> q = qr.householderQ();
    const MatrixX<double> r_mat = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Index c = 0; c < d; ++c)
        if (r_mat(c, c) < 0) q.col(c) = -q.col(c);
    return q;
}

/// Unit vector drawn uniformly from the sphere.
inline VectorX<double> random_direction(Index d, Rng& rng) {
    while (true) {
        VectorX<double> v(d);
        for (Index i = 0; i < d; ++i) v(i) = rng.normal();
        const double norm = v.norm();
        if (norm > 1e-12) return v / norm;
    }
}

/// Pads simplex coordinates into R^d and applies a rotation.
inline MatrixX<double> embed_simplex(const MatrixX<double>& vertices, Index d, double scale,
                                     const MatrixX<double>& rotation) {
    MatrixX<double> centers = MatrixX<double>::Zero(vertices.cols(), d);
    for (Index i = 0; i < vertices.cols(); ++i) {
        VectorX<double> padded = VectorX<double>::Zero(d);
        padded.head(vertices.rows()) = scale * vertices.col(i);
        centers.row(i) = (rotation * padded).transpose();
    }
    return centers;
}

}  // namespace detail

/// Generates the dataset. Superclass centers sit on a randomly rotated
/// simplex with edge length super_sep. Subclass centers are offset from their
/// superclass center by vectors of norm sub_sep, arranged as an independently
/// rotated simplex per superclass so sibling separations are equal. All
/// center geometry is drawn before any example noise, so centers depend only
/// on (spec minus noise_sigma, n_per_class).
inline Dataset generate(const HierarchySpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Index k = spec.num_classes();

    const MatrixX<double> super_simplex = detail::helmert_simplex(spec.n_super);
    const double super_scale = spec.super_sep / std::sqrt(2.0);
    const MatrixX<double> super_rot = detail::random_rotation(spec.d, rng);
    const MatrixX<double> super_centers =
        detail::embed_simplex(super_simplex, spec.d, super_scale, super_rot);

    MatrixX<double> class_centers(k, spec.d);
    for (Index s = 0; s < spec.n_super; ++s) {
        if (spec.per_super == 1) {
            class_centers.row(s) =
                super_centers.row(s) +
                (spec.sub_sep * detail::random_direction(spec.d, rng)).transpose();
            continue;
        }
        const MatrixX<double> sub_simplex = detail::helmert_simplex(spec.per_super);
        const double circumradius =
            std::sqrt(1.0 - 1.0 / static_cast<double>(spec.per_super));
        const MatrixX<double> sub_rot = detail::random_rotation(spec.d, rng);
        const MatrixX<double> offsets =
            detail::embed_simplex(sub_simplex, spec.d, spec.sub_sep / circumradius, sub_rot);
        for (Index j = 0; j < spec.per_super; ++j)
            class_centers.row(s * spec.per_super + j) = super_centers.row(s) + offsets.row(j);
    }

    Dataset ds;
    ds.k = k;
    ds.features.resize(k * spec.n_per_class, spec.d);
    ds.labels.reserve(static_cast<std::size_t>(k * spec.n_per_class));
    ds.superclass_of.resize(static_cast<std::size_t>(k));
    for (Index c = 0; c < k; ++c)
        ds.superclass_of[static_cast<std::size_t>(c)] = c / spec.per_super;

    Index row = 0;
    for (Index c = 0; c < k; ++c) {
        for (Index e = 0; e < spec.n_per_class; ++e, ++row) {
            for (Index f = 0; f < spec.d; ++f)
                ds.features(row, f) = class_centers(c, f) + spec.noise_sigma * rng.normal();
            ds.labels.push_back(c);
        }
    }
    ds.validate();
    return ds;
}

/// Result of a CSV load; warnings carry non-fatal findings such as label
/// gaps that imply empty classes.
struct LoadedCsv {
    Dataset data;
    std::vector<std::string> warnings;
};

/// Parses "d decimal features, one integer label" rows. The class count is
/// inferred as max label + 1.
inline LoadedCsv load_csv(const std::string& path, bool skip_header = false) {
    auto in = io::open_input(path);
    std::vector<std::vector<double>> features;
    std::vector<Index> labels;
    std::string line;
    long line_no = 0;
    Index d = -1;
    Index max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1) continue;
        if (io::trim(line).empty()) continue;
        const auto fields = io::split_fields(line);
        if (fields.size() < 2)
            throw ParseError(path, line_no, "need at least one feature and a label");
        if (d < 0)
            d = static_cast<Index>(fields.size()) - 1;
        else if (static_cast<Index>(fields.size()) - 1 != d)
            throw ParseError(path, line_no,
                             "expected " + std::to_string(d + 1) + " fields, got " +
                                 std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(d));
        for (Index f = 0; f < d; ++f) {
            const double v =
                io::parse_double_field(fields[static_cast<std::size_t>(f)], path, line_no);
            if (!std::isfinite(v)) throw ParseError(path, line_no, "non-finite feature value");
            row.push_back(v);
        }
        const long long label = io::parse_int_field(fields.back(), path, line_no);
        if (label < 0) throw ParseError(path, line_no, "negative class label");
        max_label = std::max(max_label, static_cast<Index>(label));
        features.push_back(std::move(row));
        labels.push_back(static_cast<Index>(label));
    }
    if (features.empty()) throw ParseError(path + ": no data rows");

    LoadedCsv loaded;
    loaded.data.k = max_label + 1;
    loaded.data.labels = std::move(labels);
    loaded.data.features.resize(static_cast<Index>(features.size()), d);
    for (Index r = 0; r < loaded.data.features.rows(); ++r)
        for (Index c = 0; c < d; ++c)
            loaded.data.features(r, c) =
                features[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];

    std::vector<Index> counts(static_cast<std::size_t>(loaded.data.k), 0);
    for (Index label : loaded.data.labels) ++counts[static_cast<std::size_t>(label)];
    std::string empty_classes;
    for (Index c = 0; c < loaded.data.k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            if (!empty_classes.empty()) empty_classes += ", ";
            empty_classes += std::to_string(c);
        }
    }
    if (!empty_classes.empty())
        loaded.warnings.push_back("classes with no examples: " + empty_classes +
                                  " (class count inferred as max label + 1)");
    loaded.data.validate();
    return loaded;
}

/// Writes a dataset in the same CSV layout load_csv reads.
inline void write_csv(const std::string& path, const Dataset& ds) {
    auto out = io::open_output(path);
    for (Index r = 0; r < ds.n(); ++r) {
        for (Index c = 0; c < ds.d(); ++c) out << io::format_double(ds.features(r, c)) << ',';
        out << ds.labels[static_cast<std::size_t>(r)] << '\n';
    }
}

/// Stratified train/test split: per-class shuffles driven by the seed, train
/// share rounded per class and kept within [1, count-1] so both sides stay
/// populated.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_frac,
                                         std::uint64_t seed) {
    ds.validate();
    if (!(train_frac > 0.0) || !(train_frac < 1.0))
        throw ValidationError("split: train fraction must lie in (0, 1)");
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.k));
    for (Index i = 0; i < ds.n(); ++i)
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (Index c = 0; c < ds.k; ++c)
        if (by_class[static_cast<std::size_t>(c)].size() < 2)
            throw ValidationError("split: class " + std::to_string(c) + " has " +
                                  std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                                  " examples; stratification needs at least 2");

    Rng rng(seed);
    std::vector<Index> train_rows, test_rows;
    for (Index c = 0; c < ds.k; ++c) {
        auto& rows = by_class[static_cast<std::size_t>(c)];
        rng.shuffle(rows);
        const Index count = static_cast<Index>(rows.size());
        Index n_train = static_cast<Index>(std::llround(train_frac * static_cast<double>(count)));
        n_train = std::max<Index>(1, std::min<Index>(n_train, count - 1));
        for (Index i = 0; i < count; ++i)
            (i < n_train ? train_rows : test_rows).push_back(rows[static_cast<std::size_t>(i)]);
    }

    auto take = [&ds](const std::vector<Index>& rows) {
        Dataset out;
        out.k = ds.k;
        out.superclass_of = ds.superclass_of;
        out.features.resize(static_cast<Index>(rows.size()), ds.d());
        out.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.features.row(static_cast<Index>(i)) = ds.features.row(rows[i]);
            out.labels.push_back(ds.labels[static_cast<std::size_t>(rows[i])]);
        }
        return out;
    };
    return {take(train_rows), take(test_rows)};
}

}  // namespace curved
