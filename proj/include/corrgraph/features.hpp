#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Core>

#include "corrgraph/correlation.hpp"
#include "corrgraph/image_io.hpp"

namespace corrgraph {

enum class GraphKind : std::uint8_t { grid = 0, row = 1, column = 2, product = 3 };
enum class FeatureKind : std::uint8_t { pixel = 0, standard = 1, correlation = 2 };

const char* to_string(GraphKind k);
const char* to_string(FeatureKind k);

// Inverse of to_string; UsageError on anything else.
GraphKind parse_graph_kind(std::string_view s);
FeatureKind parse_feature_kind(std::string_view s);

// One row per node.
struct NodeFeatures {
    FeatureKind kind = FeatureKind::pixel;
    Eigen::MatrixXd values;

    int node_count() const { return static_cast<int>(values.rows()); }
    int dim() const { return static_cast<int>(values.cols()); }
};

// Raw intensities: row graphs get image rows, column graphs get image
// columns, grid/product graphs get one scalar per pixel in node order i*N+u.
NodeFeatures pixel_features(const Image& a, GraphKind kind);

// Per pixel over its 3x3 neighbourhood with replicate padding: mean,
// population variance, Sobel gradient magnitude and direction
// (atan2(gy, gx), in (-pi, pi]). N^2 nodes x 4 dims.
NodeFeatures standard_features(const Image& a);

// G = (1/N) * sum_l (A + shift(A,l)^T) / 2 for the row axis; the column axis
// applies the same construction to A^T.
struct CorrelationFeatureMatrix {
    Axis axis = Axis::row;
    Eigen::MatrixXd g;
};

CorrelationFeatureMatrix correlation_feature_matrix(const Image& a, Axis axis);

// (G_r (x) G_c + G_c (x) G_r) / 2; row k is the feature vector of product
// node k. Symmetric in its arguments.
NodeFeatures g_mean(const CorrelationFeatureMatrix& g_r,
                    const CorrelationFeatureMatrix& g_c);

} // namespace corrgraph
