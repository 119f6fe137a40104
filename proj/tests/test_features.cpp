#include "corrgraph/features.hpp"

#include <cmath>
#include <string>

#include "corrgraph/errors.hpp"
#include "corrgraph/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace corrgraph;

namespace {

// Closed form of the row-axis feature matrix, derived independently: the
// shifted-transpose term shift(A,l)^T has (i,j) entry A((j+l) mod N, i), and
// summing over all N lags walks every row of column i exactly once, so
// G(i,j) = A(i,j)/2 + mean_k A(k,i) / 2.
Eigen::MatrixXd closed_form_row_g(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
        const double col_mean = a.col(i).mean();
        for (int j = 0; j < n; ++j) g(i, j) = a(i, j) / 2.0 + col_mean / 2.0;
    }
    return g;
}

Eigen::MatrixXd naive_kron_d(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const int p = static_cast<int>(a.rows());
    const int q = static_cast<int>(b.rows());
    Eigen::MatrixXd out(p * q, p * q);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int u = 0; u < q; ++u)
                for (int v = 0; v < q; ++v)
                    out(i * q + u, j * q + v) = a(i, j) * b(u, v);
    return out;
}

} // namespace

TEST_CASE("graph and feature kinds round-trip through their names") {
    for (const auto kind : {GraphKind::grid, GraphKind::row, GraphKind::column,
                            GraphKind::product})
        CHECK(parse_graph_kind(to_string(kind)) == kind);
    for (const auto kind :
         {FeatureKind::pixel, FeatureKind::standard, FeatureKind::correlation})
        CHECK(parse_feature_kind(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_graph_kind("hexagon"), UsageError);
    CHECK_THROWS_AS(parse_feature_kind(""), UsageError);
}

TEST_CASE("pixel features depend on the graph kind") {
    Rng rng(51);
    const int n = 5;
    const Image img = testutil::random_image(n, rng);

    SUBCASE("row graph nodes carry image rows") {
        const NodeFeatures f = pixel_features(img, GraphKind::row);
        REQUIRE(f.node_count() == n);
        REQUIRE(f.dim() == n);
        CHECK(f.values == img.pixels);
    }
    SUBCASE("column graph nodes carry image columns") {
        const NodeFeatures f = pixel_features(img, GraphKind::column);
        REQUIRE(f.node_count() == n);
        REQUIRE(f.dim() == n);
        CHECK(f.values == img.pixels.transpose().eval());
    }
    SUBCASE("grid and product nodes carry one scalar in i*N+u order") {
        for (const auto kind : {GraphKind::grid, GraphKind::product}) {
            const NodeFeatures f = pixel_features(img, kind);
            REQUIRE(f.node_count() == n * n);
            REQUIRE(f.dim() == 1);
            for (int i = 0; i < n; ++i)
                for (int u = 0; u < n; ++u)
                    CHECK(f.values(i * n + u, 0) == img.pixels(i, u));
        }
    }
}

TEST_CASE("standard features match a naive 3x3 stencil") {
    Rng rng(52);
    const int n = 7;
    const Image img = testutil::random_image(n, rng);
    const NodeFeatures f = standard_features(img);
    REQUIRE(f.node_count() == n * n);
    REQUIRE(f.dim() == 4);

    auto px = [&](int r, int c) {
        r = std::clamp(r, 0, n - 1);
        c = std::clamp(c, 0, n - 1);
        return img.pixels(r, c);
    };
    const int sobel_x[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double sum = 0.0, sumsq = 0.0, gx = 0.0, gy = 0.0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const double v = px(r + dr, c + dc);
                    sum += v;
                    sumsq += v * v;
                    gx += sobel_x[dr + 1][dc + 1] * v;
                    gy += sobel_x[dc + 1][dr + 1] * v; // gy kernel is gx transposed
                }
            const double mean = sum / 9.0;
            const double var = sumsq / 9.0 - mean * mean;
            const int node = r * n + c;
            CHECK(f.values(node, 0) == doctest::Approx(mean).epsilon(1e-12));
            CHECK(f.values(node, 1) ==
                  doctest::Approx(var).epsilon(1e-9).scale(1.0));
            CHECK(f.values(node, 2) ==
                  doctest::Approx(std::sqrt(gx * gx + gy * gy)).epsilon(1e-9).scale(1.0));
            CHECK(f.values(node, 3) ==
                  doctest::Approx(std::atan2(gy, gx)).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("standard features of a constant image are flat") {
    Image img;
    img.pixels = Eigen::MatrixXd::Constant(4, 4, 0.7);
    const NodeFeatures f = standard_features(img);
    for (int node = 0; node < 16; ++node) {
        CHECK(f.values(node, 0) == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(f.values(node, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(f.values(node, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("standard features need at least a 3x3 image") {
    Image img;
    img.pixels = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(standard_features(img), ImageTooSmall);
}

TEST_CASE("gradient direction stays within (-pi, pi]") {
    Rng rng(53);
    const Image img = testutil::random_image(9, rng);
    const NodeFeatures f = standard_features(img);
    for (int node = 0; node < f.node_count(); ++node) {
        CHECK(f.values(node, 3) <= M_PI);
        CHECK(f.values(node, 3) > -M_PI - 1e-15);
    }
}

TEST_CASE("correlation feature matrix matches its closed form") {
    Rng rng(54);
    for (const int n : {4, 9, 28}) {
        const Image img = testutil::random_image(n, rng);

        const CorrelationFeatureMatrix g_r =
            correlation_feature_matrix(img, Axis::row);
        const Eigen::MatrixXd want_r = closed_form_row_g(img.pixels);
        CHECK((g_r.g - want_r).cwiseAbs().maxCoeff() < 1e-12);

        const CorrelationFeatureMatrix g_c =
            correlation_feature_matrix(img, Axis::column);
        const Eigen::MatrixXd want_c =
            closed_form_row_g(img.pixels.transpose());
        CHECK((g_c.g - want_c).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("g_mean symmetrizes the Kronecker structure") {
    Rng rng(55);
    const int n = 3;
    const Image img = testutil::random_image(n, rng);
    const CorrelationFeatureMatrix g_r = correlation_feature_matrix(img, Axis::row);
    const CorrelationFeatureMatrix g_c = correlation_feature_matrix(img, Axis::column);

    const NodeFeatures f = g_mean(g_r, g_c);
    REQUIRE(f.node_count() == n * n);
    REQUIRE(f.dim() == n * n);

    const Eigen::MatrixXd want =
        (naive_kron_d(g_r.g, g_c.g) + naive_kron_d(g_c.g, g_r.g)) / 2.0;
    CHECK((f.values - want).cwiseAbs().maxCoeff() < 1e-15);

    SUBCASE("swapping the arguments changes nothing") {
        const NodeFeatures swapped = g_mean(g_c, g_r);
        CHECK(swapped.values == f.values);
    }
    SUBCASE("identity factors give the identity") {
        CorrelationFeatureMatrix id_r, id_c;
        id_r.axis = Axis::row;
        id_c.axis = Axis::column;
        id_r.g = Eigen::MatrixXd::Identity(n, n);
        id_c.g = Eigen::MatrixXd::Identity(n, n);
        const NodeFeatures ident = g_mean(id_r, id_c);
        CHECK(ident.values == Eigen::MatrixXd::Identity(n * n, n * n));
    }
    SUBCASE("mismatched factor sizes are rejected") {
        CorrelationFeatureMatrix small;
        small.axis = Axis::column;
        small.g = Eigen::MatrixXd::Identity(2, 2);
        CHECK_THROWS_AS(g_mean(g_r, small), DimMismatch);
    }
}
