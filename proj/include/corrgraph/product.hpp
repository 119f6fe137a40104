#pragma once

#include <Eigen/Core>

#include "corrgraph/correlation.hpp"

namespace corrgraph {

// Kronecker product for square integer matrices:
// out[(i*q+u),(j*q+v)] = a(i,j) * b(u,v).
Eigen::MatrixXi kron(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b);

// a_r (x) I + I (x) a_c. Entries stay integer; the diagonal reaches 2 when a
// node carries a self-loop in both factors.
Eigen::MatrixXi cartesian_sum(const GraphAdjacency& a_r, const GraphAdjacency& a_c);

// Elementwise mask of the Cartesian sum by a_r (x) a_c + a_c (x) a_r, then
// binarized. Node (i,u) of the result is row-graph node i paired with
// column-graph node u, at index i*N+u.
GraphAdjacency masked_product(const GraphAdjacency& a_r, const GraphAdjacency& a_c);

} // namespace corrgraph
