#include "corrgraph/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace corrgraph {

Eigen::MatrixXd cyclic_row_shift(const Eigen::MatrixXd& a, int lag) {
    const int n = static_cast<int>(a.rows());
    if (lag < 0 || lag >= n)
        throw LagOutOfRange("lag " + std::to_string(lag) + " outside 0.." +
                            std::to_string(n - 1));
    Eigen::MatrixXd out(n, a.cols());
    for (int i = 0; i < n; ++i) out.row(i) = a.row((i + lag) % n);
    return out;
}

namespace {

// stack.mats[lag](i,j) = (1/N) * dot(row i, row (j+lag) mod N), accumulated in
// ascending column order. The entry value depends only on the two row vectors,
// never on their positions, which keeps shifted images bitwise consistent.
CorrelationStack correlations_of_rows(const Eigen::MatrixXd& a, Axis axis) {
    const int n = static_cast<int>(a.rows());
    CorrelationStack stack;
    stack.axis = axis;
    stack.mats.resize(n);
    const double inv_n = 1.0 / n;
    for (int lag = 0; lag < n; ++lag) {
        Eigen::MatrixXd& m = stack.mats[lag];
        m.resize(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int shifted = (j + lag) % n;
                double acc = 0.0;
                for (int k = 0; k < n; ++k) acc += a(i, k) * a(shifted, k);
                m(i, j) = acc * inv_n;
            }
        }
    }
    return stack;
}

} // namespace

CorrelationStack row_correlations(const Image& a) {
    if (a.side() < 2) throw InputError("image side must be at least 2");
    if (a.pixels.rows() != a.pixels.cols())
        throw NonSquare("image must be square");
    return correlations_of_rows(a.pixels, Axis::row);
}

CorrelationStack col_correlations(const Image& a) {
    if (a.side() < 2) throw InputError("image side must be at least 2");
    if (a.pixels.rows() != a.pixels.cols())
        throw NonSquare("image must be square");
    Eigen::MatrixXd t = a.pixels.transpose();
    return correlations_of_rows(t, Axis::column);
}

PairFeatureTable pair_features(const CorrelationStack& stack) {
    const int n = stack.side();
    PairFeatureTable table;
    table.side = n;
    table.pairs.reserve(std::size_t(n) * (n + 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) table.pairs.emplace_back(i, j);

    table.rows.resize(static_cast<Eigen::Index>(table.pairs.size()), n);
    for (std::size_t p = 0; p < table.pairs.size(); ++p) {
        const auto [i, j] = table.pairs[p];
        for (int lag = 0; lag < n; ++lag)
            table.rows(static_cast<Eigen::Index>(p), lag) =
                (stack.mats[lag](i, j) + stack.mats[lag](j, i)) / 2.0;
    }
    return table;
}

namespace {

constexpr double kDegenerateTol = 1e-12;

// Row indices ordered by lexicographic comparison of the row values; ties by
// pair id. Summing in this order makes every reduction independent of the
// caller's row order.
std::vector<std::uint32_t> canonical_order(const PairFeatureTable& t) {
    std::vector<std::uint32_t> order(t.count());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
        const int dim = static_cast<int>(t.rows.cols());
        for (int d = 0; d < dim; ++d) {
            if (t.rows(x, d) < t.rows(y, d)) return true;
            if (t.rows(x, d) > t.rows(y, d)) return false;
        }
        return t.pairs[x] < t.pairs[y];
    });
    return order;
}

// Up to this many pairs the minimum-SSE 2-partition is found by enumerating
// all of them (2^(count-1) splits); Lloyd's local search takes over beyond
// that, where enumeration is intractable and a local optimum is accepted.
constexpr std::size_t kExhaustivePairLimit = 12;

// Exact 2-means for small tables. Splits are enumerated over canonical row
// positions with the first canonical row fixed to cluster 1, and cluster sums
// accumulate in canonical order, so the winning partition — and its bits —
// do not depend on the caller's row order. Minimizing within-cluster SSE is
// equivalent to maximizing sum_c |cluster sum|^2 / cluster size.
std::vector<EdgeLabel> exhaustive_partition(const PairFeatureTable& table,
                                            const std::vector<std::uint32_t>& order) {
    const auto count = table.count();
    const int dim = static_cast<int>(table.rows.cols());

    std::uint32_t best_mask = 0;
    double best_obj = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd s1(dim), s2(dim);
    for (std::uint32_t mask = 0; mask < (1u << (count - 1)); ++mask) {
        s1.setZero();
        s2.setZero();
        std::size_t n1 = 0, n2 = 0;
        for (std::size_t b = 0; b < count; ++b) {
            const auto row = table.rows.row(order[b]);
            // Bit 0 of the mask covers canonical position 1; position 0 is
            // pinned to cluster 1 so complementary splits appear once.
            if (b != 0 && (mask >> (b - 1) & 1u)) {
                s2 += row.transpose();
                ++n2;
            } else {
                s1 += row.transpose();
                ++n1;
            }
        }
        double obj = s1.squaredNorm() / static_cast<double>(n1);
        if (n2 > 0) obj += s2.squaredNorm() / static_cast<double>(n2);
        if (obj > best_obj) {
            best_obj = obj;
            best_mask = mask;
        }
    }

    s1.setZero();
    s2.setZero();
    std::size_t n1 = 0, n2 = 0;
    std::vector<std::uint8_t> in_cluster1(count, 0);
    for (std::size_t b = 0; b < count; ++b) {
        const bool first = b == 0 || !(best_mask >> (b - 1) & 1u);
        in_cluster1[order[b]] = first ? 1 : 0;
        if (first) {
            s1 += table.rows.row(order[b]).transpose();
            ++n1;
        } else {
            s2 += table.rows.row(order[b]).transpose();
            ++n2;
        }
    }
    const double norm1 = (s1 / static_cast<double>(n1)).squaredNorm();
    const double norm2 = n2 > 0 ? (s2 / static_cast<double>(n2)).squaredNorm() : 0.0;
    const bool cluster1_is_edge = norm1 >= norm2;

    std::vector<EdgeLabel> labels(count);
    for (std::size_t p = 0; p < count; ++p)
        labels[p] = (in_cluster1[p] != 0) == cluster1_is_edge ? EdgeLabel::edge
                                                              : EdgeLabel::non_edge;
    return labels;
}

} // namespace

std::vector<EdgeLabel> kmeans2(const PairFeatureTable& table, int max_iters) {
    if (max_iters < 1) throw InputError("max_iters must be at least 1");
    const auto count = table.count();
    if (count == 0) return {};
    const int dim = static_cast<int>(table.rows.cols());

    // No spread in any dimension: no correlation structure, no edges.
    bool degenerate = true;
    for (int d = 0; d < dim && degenerate; ++d) {
        double lo = table.rows(0, d), hi = table.rows(0, d);
        for (std::size_t p = 1; p < count; ++p) {
            lo = std::min(lo, table.rows(static_cast<Eigen::Index>(p), d));
            hi = std::max(hi, table.rows(static_cast<Eigen::Index>(p), d));
        }
        if (hi - lo > kDegenerateTol) degenerate = false;
    }
    if (degenerate) return std::vector<EdgeLabel>(count, EdgeLabel::non_edge);

    const auto order = canonical_order(table);
    if (count <= kExhaustivePairLimit) return exhaustive_partition(table, order);

    std::vector<double> sq_norm(count);
    for (std::size_t p = 0; p < count; ++p)
        sq_norm[p] = table.rows.row(static_cast<Eigen::Index>(p)).squaredNorm();

    // Seed centroids at the extreme-norm rows; norm ties resolve to the
    // lowest (i,j) pair, and pairs are stored in lexicographic order.
    std::size_t hi_row = 0, lo_row = 0;
    for (std::size_t p = 1; p < count; ++p) {
        if (sq_norm[p] > sq_norm[hi_row]) hi_row = p;
        if (sq_norm[p] < sq_norm[lo_row]) lo_row = p;
    }
    Eigen::VectorXd c1 = table.rows.row(static_cast<Eigen::Index>(hi_row));
    Eigen::VectorXd c2 = table.rows.row(static_cast<Eigen::Index>(lo_row));

    std::vector<std::uint8_t> assign(count, 0), prev(count, 255);

    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t p = 0; p < count; ++p) {
            const auto row = table.rows.row(static_cast<Eigen::Index>(p));
            const double d1 = (row.transpose() - c1).squaredNorm();
            const double d2 = (row.transpose() - c2).squaredNorm();
            assign[p] = d2 < d1 ? 1 : 0; // tie -> cluster 1
        }
        if (assign == prev) break;
        prev = assign;

        Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(dim);
        std::size_t n1 = 0, n2 = 0;
        for (auto p : order) {
            if (assign[p] == 0) {
                sum1 += table.rows.row(p).transpose();
                ++n1;
            } else {
                sum2 += table.rows.row(p).transpose();
                ++n2;
            }
        }
        if (n1 > 0) c1 = sum1 / static_cast<double>(n1);
        if (n2 > 0) c2 = sum2 / static_cast<double>(n2);
    }

    const bool cluster1_is_edge = c1.squaredNorm() >= c2.squaredNorm();
    std::vector<EdgeLabel> labels(count);
    for (std::size_t p = 0; p < count; ++p) {
        const bool in_cluster1 = assign[p] == 0;
        labels[p] = (in_cluster1 == cluster1_is_edge) ? EdgeLabel::edge
                                                      : EdgeLabel::non_edge;
    }
    return labels;
}

GraphAdjacency build_graph(const std::vector<EdgeLabel>& labels, int side) {
    const std::size_t expected = std::size_t(side) * (side + 1) / 2;
    if (labels.size() != expected)
        throw InputError("expected " + std::to_string(expected) +
                         " pair labels for side " + std::to_string(side) +
                         ", got " + std::to_string(labels.size()));
    GraphAdjacency g;
    g.a = Eigen::MatrixXi::Zero(side, side);
    std::size_t p = 0;
    for (int i = 0; i < side; ++i)
        for (int j = i; j < side; ++j, ++p)
            if (labels[p] == EdgeLabel::edge) {
                g.a(i, j) = 1;
                g.a(j, i) = 1;
            }
    return g;
}

GraphAdjacency grid_graph(int side) {
    if (side < 2) throw InputError("grid side must be at least 2");
    const int nodes = side * side;
    GraphAdjacency g;
    g.a = Eigen::MatrixXi::Zero(nodes, nodes);
    auto id = [side](int i, int u) { return i * side + u; };
    for (int i = 0; i < side; ++i) {
        for (int u = 0; u < side; ++u) {
            if (u + 1 < side) {
                g.a(id(i, u), id(i, u + 1)) = 1;
                g.a(id(i, u + 1), id(i, u)) = 1;
            }
            if (i + 1 < side) {
                g.a(id(i, u), id(i + 1, u)) = 1;
                g.a(id(i + 1, u), id(i, u)) = 1;
            }
        }
    }
    return g;
}

GraphAdjacency row_graph(const Image& a) {
    return build_graph(kmeans2(pair_features(row_correlations(a))), a.side());
}

GraphAdjacency column_graph(const Image& a) {
    return build_graph(kmeans2(pair_features(col_correlations(a))), a.side());
}

} // namespace corrgraph
