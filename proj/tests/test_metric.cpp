#include <catch2/catch_amalgamated.hpp>

#include "curved/metric.hpp"
#include "curved/rng.hpp"
#include "testutil.hpp"

using namespace curved;

TEST_CASE("identity_metric produces the flat tensor") {
    const Metric m3 = identity_metric(3);
    REQUIRE(m3.k() == 3);
    REQUIRE(m3.tensor() == MatrixX<double>::Identity(3, 3));
    const Metric m2 = identity_metric(2);
    REQUIRE(m2.tensor() == MatrixX<double>::Identity(2, 2));
}

TEST_CASE("identity_metric rejects k < 2") {
    REQUIRE_THROWS_AS(identity_metric(1), DimensionError);
    REQUIRE_THROWS_AS(identity_metric(0), DimensionError);
}

TEST_CASE("Metric validation") {
    SECTION("asymmetric tensor rejected") {
        MatrixX<double> g = MatrixX<double>::Identity(3, 3);
        g(0, 1) = 0.5;
        REQUIRE_THROWS_AS(Metric::from_matrix(g), ValidationError);
    }
    SECTION("bad diagonal rejected") {
        MatrixX<double> g = MatrixX<double>::Identity(2, 2);
        g(1, 1) = 0.9;
        REQUIRE_THROWS_AS(Metric::from_matrix(g), ValidationError);
    }
    SECTION("negative entry rejected") {
        MatrixX<double> g = MatrixX<double>::Identity(2, 2);
        g(0, 1) = g(1, 0) = -0.1;
        REQUIRE_THROWS_AS(Metric::from_matrix(g), ValidationError);
    }
    SECTION("non-square rejected") {
        REQUIRE_THROWS_AS(Metric::from_matrix(MatrixX<double>::Ones(2, 3)), DimensionError);
    }
}

TEST_CASE("Metric reports a negative smallest eigenvalue without rejecting") {
    // [[1, 1.5], [1.5, 1]] has eigenvalues 2.5 and -0.5: valid per the
    // invariants, indefinite as a bilinear form.
    MatrixX<double> g(2, 2);
    g << 1.0, 1.5, 1.5, 1.0;
    const Metric m = Metric::from_matrix(g);
    REQUIRE(m.min_eigenvalue() == Catch::Approx(-0.5).margin(1e-12));
    REQUIRE(identity_metric(4).min_eigenvalue() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("euclidean_sq_distance examples") {
    const VectorX<double> e0 = OneHotLabel(0, 3).to_vector();
    const VectorX<double> e1 = OneHotLabel(1, 3).to_vector();
    REQUIRE(euclidean_sq_distance(e0, e1) == 2.0);
    REQUIRE(euclidean_sq_distance(e0, e0) == 0.0);

    VectorX<double> yhat(3);
    yhat << 0.5, 0.3, 0.2;
    // 0.25 + 0.09 + 0.04, checked by direct summation
    double by_hand = 0.0;
    for (Index i = 0; i < 3; ++i) by_hand += (yhat(i) - e0(i)) * (yhat(i) - e0(i));
    REQUIRE(euclidean_sq_distance(e0, yhat) == Catch::Approx(0.38).margin(1e-15));
    REQUIRE(euclidean_sq_distance(e0, yhat) == Catch::Approx(by_hand).margin(1e-15));

    REQUIRE_THROWS_AS(euclidean_sq_distance(e0, VectorX<double>::Zero(2).eval()), DimensionError);
}

TEST_CASE("curved_sq_distance frozen example") {
    MatrixX<double> g(3, 3);
    g << 1.0, 0.2, 0.8,
         0.2, 1.0, 0.4,
         0.8, 0.4, 1.0;
    const Metric m = Metric::from_matrix(g);
    const VectorX<double> y = OneHotLabel(0, 3).to_vector();
    VectorX<double> yhat(3);
    yhat << 0.5, 0.3, 0.2;
    // 0.38 + 2 (0.2*0.5*0.3 + 0.8*0.5*0.2 + 0.4*0.3*0.2) = 0.648
    REQUIRE(curved_sq_distance(m, y, yhat) == Catch::Approx(0.648).margin(1e-12));
    REQUIRE(curved_sq_distance(m, y, yhat) ==
            Catch::Approx(testutil::brute_curved_sq(g, y, yhat)).margin(1e-14));
    REQUIRE(curved_sq_distance(m, y, y) == 0.0);
    REQUIRE_THROWS_AS(curved_sq_distance(m, y, VectorX<double>::Zero(2).eval()), DimensionError);
}

TEST_CASE("flat reduction: identity metric recovers the Euclidean distance") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Index k = 2 + rng.index(19);
        const Metric id = identity_metric(k);
        VectorX<double> y(k), yhat(k);
        for (Index i = 0; i < k; ++i) {
            y(i) = rng.uniform(-2.0, 2.0);
            yhat(i) = rng.uniform(-2.0, 2.0);
        }
        REQUIRE(std::abs(curved_sq_distance(id, y, yhat) - euclidean_sq_distance(y, yhat)) <=
                1e-12);
    }
}

TEST_CASE("one-hot consistency with class_pair_sq_distance is exact") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Index k = 2 + rng.index(10);
        const Metric m = testutil::random_metric(rng, k);
        const Index a = rng.index(k);
        const Index b = rng.index(k);
        const double via_vectors = curved_sq_distance(m, OneHotLabel(a, k).to_vector(),
                                                      OneHotLabel(b, k).to_vector());
        REQUIRE(via_vectors == class_pair_sq_distance(m, a, b));
    }
}

TEST_CASE("curved_sq_distance is symmetric in its arguments and non-negative") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const Index k = 2 + rng.index(8);
        const Metric m = testutil::random_metric(rng, k);
        VectorX<double> y(k), yhat(k);
        for (Index i = 0; i < k; ++i) {
            y(i) = rng.uniform(-1.0, 1.0);
            yhat(i) = rng.uniform(-1.0, 1.0);
        }
        REQUIRE(curved_sq_distance(m, y, yhat) == curved_sq_distance(m, yhat, y));
        REQUIRE(curved_sq_distance(m, y, yhat) >= 0.0);
    }
}

TEST_CASE("class_pair_sq_distance examples and ordering") {
    MatrixX<double> g(3, 3);
    g << 1.0, 0.0, 0.5,
         0.0, 1.0, 0.2,
         0.5, 0.2, 1.0;
    const Metric m = Metric::from_matrix(g);
    REQUIRE(class_pair_sq_distance(m, 1, 1) == 0.0);
    REQUIRE(class_pair_sq_distance(m, 0, 1) == 2.0);  // flat pair recovered
    REQUIRE(class_pair_sq_distance(m, 0, 2) == 3.0);  // 2 (1 + 0.5)
    REQUIRE_THROWS_AS(class_pair_sq_distance(m, 0, 3), OutOfRangeError);
    REQUIRE_THROWS_AS(class_pair_sq_distance(m, -1, 0), OutOfRangeError);

    // monotone ordering: g[1][0] < g[1][2] so d(1,0) < d(1,2)
    REQUIRE(m(1, 0) < m(1, 2));
    REQUIRE(class_pair_sq_distance(m, 1, 0) < class_pair_sq_distance(m, 1, 2));
}

TEST_CASE("monotone ordering holds for random metrics") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const Index k = 3 + rng.index(8);
        const Metric m = testutil::random_metric(rng, k);
        const Index a = rng.index(k);
        Index b = rng.index(k), c = rng.index(k);
        if (b == a || c == a || b == c) continue;
        if (m(a, b) < m(a, c))
            REQUIRE(class_pair_sq_distance(m, a, b) < class_pair_sq_distance(m, a, c));
    }
}

TEST_CASE("distance_report") {
    SECTION("flat case") {
        const MatrixX<double> d = distance_report(identity_metric(2));
        REQUIRE(d(0, 0) == 0.0);
        REQUIRE(d(1, 1) == 0.0);
        REQUIRE(d(0, 1) == Catch::Approx(std::sqrt(2.0)).margin(1e-15));
        REQUIRE(d(1, 0) == d(0, 1));
    }
    SECTION("g = 1 gives distance 2") {
        MatrixX<double> g(2, 2);
        g << 1.0, 1.0, 1.0, 1.0;
        const MatrixX<double> d = distance_report(Metric::from_matrix(g));
        REQUIRE(d(0, 1) == Catch::Approx(2.0).margin(1e-15));
    }
    SECTION("symmetric with zero diagonal for random metrics") {
        Rng rng(19);
        const Metric m = testutil::random_metric(rng, 6);
        const MatrixX<double> d = distance_report(m);
        REQUIRE(d == d.transpose().eval());
        REQUIRE(d.diagonal().isZero(0.0));
    }
}

TEST_CASE("tolerant import canonicalizes small drift and rejects large") {
    MatrixX<double> g = MatrixX<double>::Identity(3, 3);
    g(0, 1) = 0.5;
    g(1, 0) = 0.5 + 5e-13;
    const Metric m = Metric::from_matrix_tolerant(g);
    REQUIRE(m.tensor()(0, 1) == m.tensor()(1, 0));

    g(1, 0) = 0.5 + 1e-9;
    REQUIRE_THROWS_AS(Metric::from_matrix_tolerant(g), ValidationError);

    MatrixX<double> bad_diag = MatrixX<double>::Identity(2, 2);
    bad_diag(0, 0) = 1.0 + 1e-9;
    REQUIRE_THROWS_AS(Metric::from_matrix_tolerant(bad_diag), ValidationError);
}

TEST_CASE("OneHotLabel and ProbVector validation") {
    REQUIRE_THROWS_AS(OneHotLabel(3, 3), OutOfRangeError);
    REQUIRE_THROWS_AS(OneHotLabel(-1, 3), OutOfRangeError);
    const VectorX<double> v = OneHotLabel(1, 3).to_vector();
    REQUIRE(v(1) == 1.0);
    REQUIRE(v.sum() == 1.0);

    VectorX<double> p(3);
    p << 0.2, 0.3, 0.5;
    REQUIRE_NOTHROW(ProbVector(p));
    p(0) = 0.21;
    REQUIRE_THROWS_AS(ProbVector(p), ValidationError);  // sum off by 0.01
    p << -0.1, 0.6, 0.5;
    REQUIRE_THROWS_AS(ProbVector(p), ValidationError);  // negative entry
}

TEST_CASE("metric works at float precision too") {
    const MetricT<float> m = identity_metric<float>(3);
    VectorX<float> y(3), yhat(3);
    y << 1.f, 0.f, 0.f;
    yhat << 0.5f, 0.3f, 0.2f;
    REQUIRE(curved_sq_distance<float>(m, y, yhat) == Catch::Approx(0.38).margin(1e-6));
}
