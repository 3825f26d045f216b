#ifndef MATSAMPLE_GRAPH_HPP
#define MATSAMPLE_GRAPH_HPP

#include "matsample/sparse_matrix.hpp"

#include <span>
#include <utility>
#include <vector>

namespace matsample {

using Edge = std::pair<index_t, index_t>;

// Unweighted graph held as its n x n 0/1 adjacency matrix. Row v lists the
// neighbors v samples from.
class Graph {
public:
    Graph() = default;
    explicit Graph(SparseMatrix adjacency);

    // Duplicate edges collapse. With `symmetrize`, (u, v) also adds (v, u).
    static Graph from_edges(index_t n, std::span<const Edge> edges, bool symmetrize);

    const SparseMatrix& adjacency() const { return adjacency_; }
    index_t n() const { return adjacency_.n_rows(); }
    index_t edge_count() const { return adjacency_.nnz(); }
    index_t degree(index_t v) const { return adjacency_.row_nnz(v); }
    std::span<const index_t> neighbors(index_t v) const { return adjacency_.row_cols(v); }
    bool has_edge(index_t u, index_t v) const;

    std::vector<index_t> degrees() const;

private:
    SparseMatrix adjacency_;
};

}  // namespace matsample

#endif  // MATSAMPLE_GRAPH_HPP
