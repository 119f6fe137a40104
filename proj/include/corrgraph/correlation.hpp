#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "corrgraph/errors.hpp"
#include "corrgraph/image_io.hpp"

namespace corrgraph {

enum class Axis : std::uint8_t { row = 0, column = 1 };

// Row i of the result is row (i+lag) mod N of the input. Applying the shift
// N times is the identity.
Eigen::MatrixXd cyclic_row_shift(const Eigen::MatrixXd& a, int lag);

// N lag-indexed correlation matrices for one image.
struct CorrelationStack {
    Axis axis = Axis::row;
    std::vector<Eigen::MatrixXd> mats;

    int side() const { return static_cast<int>(mats.size()); }
};

// mats[n] = (1/N) * A * shift(A, n)^T. Entries are computed with explicit
// fixed-order dot products so that shifted images produce bitwise-permuted
// stacks (the shift-equivariance tests compare exactly).
CorrelationStack row_correlations(const Image& a);

// Same construction applied to the transposed image; correlates columns.
CorrelationStack col_correlations(const Image& a);

// One feature row per unordered node pair {i,j}, i <= j, diagonal included.
// Row order is lexicographic in (i,j); feature n is the symmetrized lag-n
// correlation (mats[n](i,j) + mats[n](j,i)) / 2.
struct PairFeatureTable {
    int side = 0;
    std::vector<std::pair<int, int>> pairs;
    Eigen::MatrixXd rows; // pairs.size() x side

    std::size_t count() const { return pairs.size(); }
};

PairFeatureTable pair_features(const CorrelationStack& stack);

enum class EdgeLabel : std::uint8_t { non_edge = 0, edge = 1 };

// Deterministic two-cluster split of the pair vectors. Tables of up to 12
// rows are partitioned exactly: every 2-partition is enumerated and the one
// with minimum within-cluster SSE wins (Lloyd's local search from any seed
// can miss it — measured on >half of random small tables). Larger tables run
// Lloyd iteration with a deterministic start: one centroid at the max-norm
// row, one at the min-norm row (norm ties -> lowest (i,j) pair). Either way
// the cluster whose final centroid has the larger norm is "edge", and all
// reductions run in a canonical value-sorted row order, so the result is
// invariant under permutations of the table rows. A table whose rows are all
// identical within 1e-12 per dimension carries no structure and yields all
// non-edges.
std::vector<EdgeLabel> kmeans2(const PairFeatureTable& table, int max_iters = 100);

// Symmetric binary adjacency; self-loops live on the diagonal.
struct GraphAdjacency {
    Eigen::MatrixXi a;

    int nodes() const { return static_cast<int>(a.rows()); }
};

GraphAdjacency build_graph(const std::vector<EdgeLabel>& labels, int side);

// 4-neighbour pixel lattice on side^2 nodes, row-major (i,u) -> i*side+u,
// non-periodic, no self-loops.
GraphAdjacency grid_graph(int side);

// Full per-image inference: correlations -> pair features -> 2-means -> graph.
GraphAdjacency row_graph(const Image& a);
GraphAdjacency column_graph(const Image& a);

} // namespace corrgraph
