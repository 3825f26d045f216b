#include "matsample/graph.hpp"

#include <algorithm>
#include <string>

namespace matsample {

Graph::Graph(SparseMatrix adjacency) : adjacency_(std::move(adjacency)) {
    require(adjacency_.n_rows() == adjacency_.n_cols(), "adjacency matrix must be square");
    for (const value_t v : adjacency_.values()) {
        require(v == 1.0, "adjacency values must all equal 1");
    }
}

Graph Graph::from_edges(index_t n, std::span<const Edge> edges, bool symmetrize) {
    std::vector<Triplet> triplets;
    triplets.reserve(edges.size() * (symmetrize ? 2 : 1));
    for (const auto& [u, v] : edges) {
        require(u >= 0 && u < n && v >= 0 && v < n,
                "edge (" + std::to_string(u) + ", " + std::to_string(v) +
                    ") out of range for n=" + std::to_string(n));
        triplets.push_back({u, v, 1.0});
        if (symmetrize && u != v) triplets.push_back({v, u, 1.0});
    }
    // from_triplets sums duplicates; the pattern is all we keep.
    return Graph(SparseMatrix::from_triplets(n, n, std::move(triplets)).with_values(1.0));
}

bool Graph::has_edge(index_t u, index_t v) const {
    if (u < 0 || u >= n()) return false;
    const auto nbrs = neighbors(u);
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<index_t> Graph::degrees() const {
    std::vector<index_t> out(static_cast<std::size_t>(n()));
    for (index_t v = 0; v < n(); ++v) out[v] = degree(v);
    return out;
}

}  // namespace matsample
