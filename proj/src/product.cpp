#include "corrgraph/product.hpp"

namespace corrgraph {

Eigen::MatrixXi kron(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
    const int p = static_cast<int>(a.rows());
    const int q = static_cast<int>(b.rows());
    if (a.cols() != p || b.cols() != q)
        throw DimMismatch("kron expects square factors");
    Eigen::MatrixXi out(p * q, p * q);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            out.block(i * q, j * q, q, q) = a(i, j) * b;
    return out;
}

Eigen::MatrixXi cartesian_sum(const GraphAdjacency& a_r, const GraphAdjacency& a_c) {
    const int n = a_r.nodes();
    if (a_c.nodes() != n)
        throw DimMismatch("row and column graphs have different node counts: " +
                          std::to_string(n) + " vs " + std::to_string(a_c.nodes()));
    Eigen::MatrixXi out = Eigen::MatrixXi::Zero(n * n, n * n);
    // a_r (x) I: (i,u)-(j,u) edges; I (x) a_c: (i,u)-(i,v) edges.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (a_r.a(i, j) != 0)
                for (int u = 0; u < n; ++u) out(i * n + u, j * n + u) += a_r.a(i, j);
            if (a_c.a(i, j) != 0)
                for (int u = 0; u < n; ++u) out(u * n + i, u * n + j) += a_c.a(i, j);
        }
    return out;
}

GraphAdjacency masked_product(const GraphAdjacency& a_r, const GraphAdjacency& a_c) {
    const int n = a_r.nodes();
    if (a_c.nodes() != n)
        throw DimMismatch("row and column graphs have different node counts: " +
                          std::to_string(n) + " vs " + std::to_string(a_c.nodes()));
    const Eigen::MatrixXi a2 = cartesian_sum(a_r, a_c);
    const Eigen::MatrixXi mask = kron(a_r.a, a_c.a) + kron(a_c.a, a_r.a);

    GraphAdjacency out;
    out.a.resize(n * n, n * n);
    for (int r = 0; r < n * n; ++r)
        for (int c = 0; c < n * n; ++c)
            out.a(r, c) = (a2(r, c) * mask(r, c)) != 0 ? 1 : 0;
    return out;
}

} // namespace corrgraph
