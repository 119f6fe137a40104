#include "corrgraph/features.hpp"

#include <cmath>

namespace corrgraph {

const char* to_string(GraphKind k) {
    switch (k) {
        case GraphKind::grid: return "grid";
        case GraphKind::row: return "row";
        case GraphKind::column: return "column";
        case GraphKind::product: return "product";
    }
    return "?";
}

const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::pixel: return "pixel";
        case FeatureKind::standard: return "standard";
        case FeatureKind::correlation: return "correlation";
    }
    return "?";
}

GraphKind parse_graph_kind(std::string_view s) {
    if (s == "grid") return GraphKind::grid;
    if (s == "row") return GraphKind::row;
    if (s == "column") return GraphKind::column;
    if (s == "product") return GraphKind::product;
    throw UsageError("unknown graph kind: " + std::string(s));
}

FeatureKind parse_feature_kind(std::string_view s) {
    if (s == "pixel") return FeatureKind::pixel;
    if (s == "standard") return FeatureKind::standard;
    if (s == "correlation") return FeatureKind::correlation;
    throw UsageError("unknown feature kind: " + std::string(s));
}

NodeFeatures pixel_features(const Image& a, GraphKind kind) {
    const int n = a.side();
    NodeFeatures f;
    f.kind = FeatureKind::pixel;
    switch (kind) {
        case GraphKind::row:
            f.values = a.pixels;
            break;
        case GraphKind::column:
            f.values = a.pixels.transpose();
            break;
        case GraphKind::grid:
        case GraphKind::product:
            f.values.resize(n * n, 1);
            for (int i = 0; i < n; ++i)
                for (int u = 0; u < n; ++u) f.values(i * n + u, 0) = a.pixels(i, u);
            break;
    }
    return f;
}

namespace {

// Replicate padding.
inline double px(const Eigen::MatrixXd& a, int n, int r, int c) {
    r = r < 0 ? 0 : (r >= n ? n - 1 : r);
    c = c < 0 ? 0 : (c >= n ? n - 1 : c);
    return a(r, c);
}

} // namespace

NodeFeatures standard_features(const Image& a) {
    const int n = a.side();
    if (n < 3) throw ImageTooSmall("standard features need at least a 3x3 image");

    // gx responds to increase along columns, gy along rows.
    static const int sx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const int sy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

    NodeFeatures f;
    f.kind = FeatureKind::standard;
    f.values.resize(n * n, 4);
    for (int i = 0; i < n; ++i) {
        for (int u = 0; u < n; ++u) {
            double sum = 0.0, sumsq = 0.0, gx = 0.0, gy = 0.0;
            for (int di = -1; di <= 1; ++di) {
                for (int du = -1; du <= 1; ++du) {
                    const double v = px(a.pixels, n, i + di, u + du);
                    sum += v;
                    sumsq += v * v;
                    gx += sx[di + 1][du + 1] * v;
                    gy += sy[di + 1][du + 1] * v;
                }
            }
            const double mean = sum / 9.0;
            const double var = sumsq / 9.0 - mean * mean;
            const int node = i * n + u;
            f.values(node, 0) = mean;
            f.values(node, 1) = var < 0.0 ? 0.0 : var;
            f.values(node, 2) = std::sqrt(gx * gx + gy * gy);
            f.values(node, 3) = std::atan2(gy, gx);
        }
    }
    return f;
}

CorrelationFeatureMatrix correlation_feature_matrix(const Image& a, Axis axis) {
    Eigen::MatrixXd base = axis == Axis::row
                               ? a.pixels
                               : Eigen::MatrixXd(a.pixels.transpose());
    const int n = static_cast<int>(base.rows());

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int lag = 0; lag < n; ++lag) {
        const Eigen::MatrixXd shifted = cyclic_row_shift(base, lag);
        acc += (base + shifted.transpose()) / 2.0;
    }
    CorrelationFeatureMatrix out;
    out.axis = axis;
    out.g = acc / static_cast<double>(n);
    return out;
}

NodeFeatures g_mean(const CorrelationFeatureMatrix& g_r,
                    const CorrelationFeatureMatrix& g_c) {
    const int n = static_cast<int>(g_r.g.rows());
    if (g_c.g.rows() != n || g_r.g.cols() != n || g_c.g.cols() != n)
        throw DimMismatch("feature matrices must both be NxN");

    NodeFeatures f;
    f.kind = FeatureKind::correlation;
    f.values.resize(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int u = 0; u < n; ++u)
            for (int j = 0; j < n; ++j)
                for (int v = 0; v < n; ++v)
                    f.values(i * n + u, j * n + v) =
                        (g_r.g(i, j) * g_c.g(u, v) + g_c.g(i, j) * g_r.g(u, v)) / 2.0;
    return f;
}

} // namespace corrgraph
