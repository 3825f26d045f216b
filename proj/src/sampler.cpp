#include "matsample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace matsample {

std::string to_string(SamplerKind kind) {
    return kind == SamplerKind::graphsage ? "graphsage" : "ladies";
}

SamplerKind parse_sampler_kind(const std::string& name) {
    if (name == "graphsage" || name == "sage") return SamplerKind::graphsage;
    if (name == "ladies") return SamplerKind::ladies;
    throw ContractViolation("unknown sampler kind: " + name);
}

void SamplerConfig::validate() const {
    require(layers >= 1, "layers must be at least 1");
    require(batch_size >= 1, "batch size must be at least 1");
    require(bulk_count >= 1, "bulk count must be at least 1");
    require(static_cast<index_t>(fanouts.size()) == layers,
            "expected one fanout per layer (" + std::to_string(layers) + "), got " +
                std::to_string(fanouts.size()));
    for (const index_t s : fanouts) require(s >= 1, "fanouts must be at least 1");
}

namespace {

void require_vertices_in_range(std::span<const std::vector<index_t>> batches, index_t n) {
    for (const auto& batch : batches) {
        for (const index_t v : batch) {
            require(v >= 0 && v < n, "batch vertex " + std::to_string(v) + " out of range");
        }
    }
}

}  // namespace

SparseMatrix sage_seed_matrix(std::span<const std::vector<index_t>> batches, index_t n) {
    require_vertices_in_range(batches, n);
    std::vector<index_t> offsets{0};
    std::vector<index_t> cols;
    for (const auto& batch : batches) {
        for (const index_t v : batch) {
            cols.push_back(v);
            offsets.push_back(static_cast<index_t>(cols.size()));
        }
    }
    const auto rows = static_cast<index_t>(cols.size());
    return SparseMatrix(rows, n, std::move(offsets), std::move(cols),
                        std::vector<value_t>(static_cast<std::size_t>(rows), 1.0));
}

SparseMatrix ladies_seed_matrix(std::span<const std::vector<index_t>> batches, index_t n) {
    require_vertices_in_range(batches, n);
    std::vector<index_t> offsets{0};
    std::vector<index_t> cols;
    for (const auto& batch : batches) {
        std::vector<index_t> sorted(batch);
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                "LADIES batch contains a repeated vertex");
        cols.insert(cols.end(), sorted.begin(), sorted.end());
        offsets.push_back(static_cast<index_t>(cols.size()));
    }
    const auto nnz = cols.size();
    return SparseMatrix(static_cast<index_t>(batches.size()), n, std::move(offsets),
                        std::move(cols), std::vector<value_t>(nnz, 1.0));
}

std::vector<index_t> its_draw_order(std::span<const value_t> probabilities, index_t count,
                                    RowRng& rng) {
    const auto m = static_cast<index_t>(probabilities.size());
    if (m == 0 || count <= 0) return {};
    value_t total = 0.0;
    for (const value_t p : probabilities) {
        require(p > 0.0, "sampling probabilities must be positive");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, "sampling probabilities must sum to 1");

    if (count >= m) {
        std::vector<index_t> all(static_cast<std::size_t>(m));
        std::iota(all.begin(), all.end(), index_t{0});
        return all;
    }

    std::vector<value_t> weights(probabilities.begin(), probabilities.end());
    std::vector<value_t> cdf(weights.size());
    std::vector<index_t> drawn;
    drawn.reserve(static_cast<std::size_t>(count));
    for (index_t d = 0; d < count; ++d) {
        // Entry i owns [cdf[i-1], cdf[i]); removed entries own an empty range.
        std::inclusive_scan(weights.begin(), weights.end(), cdf.begin());
        const value_t u = rng.uniform() * cdf.back();
        auto idx = static_cast<index_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= m) {
            // u rounded up onto the total; fall back to the last live entry.
            idx = m - 1;
            while (weights[idx] == 0.0) --idx;
        }
        drawn.push_back(idx);
        weights[idx] = 0.0;
    }
    return drawn;
}

std::vector<index_t> its_sample_row(std::span<const value_t> probabilities, index_t count,
                                    RowRng& rng) {
    auto drawn = its_draw_order(probabilities, count, rng);
    std::sort(drawn.begin(), drawn.end());
    return drawn;
}

SparseMatrix sample_frontier(const SparseMatrix& probabilities, index_t count,
                             const StreamKey& key, std::span<const RowId> rows) {
    require(static_cast<index_t>(rows.size()) == probabilities.n_rows(),
            "sample_frontier needs one RowId per probability row");
    std::vector<index_t> offsets(probabilities.n_rows() + 1, 0);
    std::vector<index_t> cols;
    for (index_t r = 0; r < probabilities.n_rows(); ++r) {
        const auto pcols = probabilities.row_cols(r);
        RowRng rng(key.seed, key.epoch, key.layer, static_cast<std::uint64_t>(rows[r].batch),
                   static_cast<std::uint64_t>(rows[r].row));
        for (const index_t e : its_sample_row(probabilities.row_values(r), count, rng)) {
            cols.push_back(pcols[e]);
        }
        offsets[r + 1] = static_cast<index_t>(cols.size());
    }
    const auto nnz = cols.size();
    return SparseMatrix(probabilities.n_rows(), probabilities.n_cols(), std::move(offsets),
                        std::move(cols), std::vector<value_t>(nnz, 1.0));
}

SparseMatrix ProductEngine::multiply(const SparseMatrix& left, const SparseMatrix& right,
                                     ProductRole role) {
    count(role);
    return compute(left, right, role);
}

SparseMatrix SerialEngine::compute(const SparseMatrix& left, const SparseMatrix& right,
                                   ProductRole) {
    return spgemm(left, right);
}

BatchLayer SampledLayer::batch(std::size_t i) const {
    require(i + 1 < batch_rows.size(), "batch index out of range");
    const index_t r0 = batch_rows[i];
    const index_t r1 = batch_rows[i + 1];
    const index_t c0 = batch_columns[i];
    const index_t c1 = batch_columns[i + 1];
    const index_t col_begin = shared_columns ? 0 : c0;
    BatchLayer out;
    out.adjacency = adjacency.slice_rows(r0, r1).slice_columns(col_begin, col_begin + (c1 - c0));
    out.row_vertices.assign(row_vertices.begin() + r0, row_vertices.begin() + r1);
    out.column_vertices.assign(column_vertices.begin() + c0, column_vertices.begin() + c1);
    return out;
}

BatchSample SampledEpoch::batch(std::size_t i) const {
    require(i < batch_ids.size(), "batch index out of range");
    BatchSample out;
    out.id = batch_ids[i];
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) out.layers.push_back(layer.batch(i));
    return out;
}

namespace {

// Row offsets of `m` taken at the given row boundaries.
std::vector<index_t> entry_offsets_at(const SparseMatrix& m, std::span<const index_t> row_bounds) {
    std::vector<index_t> out;
    out.reserve(row_bounds.size());
    for (const index_t r : row_bounds) out.push_back(m.row_offsets()[r]);
    return out;
}

std::vector<RowId> row_ids_for(std::span<const index_t> batch_rows,
                               std::span<const Minibatch> batches) {
    std::vector<RowId> ids;
    ids.reserve(static_cast<std::size_t>(batch_rows.back()));
    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (index_t r = batch_rows[b]; r < batch_rows[b + 1]; ++r) {
            ids.push_back({batches[b].id, r - batch_rows[b]});
        }
    }
    return ids;
}

std::vector<std::vector<index_t>> vertex_lists(std::span<const Minibatch> batches) {
    std::vector<std::vector<index_t>> out;
    out.reserve(batches.size());
    for (const auto& b : batches) out.push_back(b.vertices);
    return out;
}

SampledEpoch sample_graphsage(const Graph& graph, const SamplerConfig& config,
                              std::span<const Minibatch> batches, std::uint64_t epoch,
                              ProductEngine& engine) {
    const auto& a = graph.adjacency();
    SampledEpoch out;
    SparseMatrix seeds = sage_seed_matrix(vertex_lists(batches), graph.n());
    std::vector<index_t> batch_rows{0};
    for (const auto& b : batches) {
        batch_rows.push_back(batch_rows.back() + static_cast<index_t>(b.vertices.size()));
    }

    for (index_t depth = 0; depth < config.layers; ++depth) {
        SparseMatrix probabilities = engine.multiply(seeds, a, ProductRole::probability);
        probabilities = norm_rows_sage(probabilities);
        const auto ids = row_ids_for(batch_rows, batches);
        SparseMatrix sampled =
            sample_frontier(probabilities, config.fanout(depth),
                            {config.seed, epoch, static_cast<std::uint64_t>(depth)}, ids);

        // Every sampled entry becomes its own column (and its own row of the
        // next frontier), so a vertex drawn by two parents is not merged.
        SampledLayer layer;
        layer.depth = depth;
        std::vector<index_t> entry_cols(static_cast<std::size_t>(sampled.nnz()));
        std::iota(entry_cols.begin(), entry_cols.end(), index_t{0});
        layer.adjacency = SparseMatrix(sampled.n_rows(), sampled.nnz(), sampled.row_offsets(),
                                       std::move(entry_cols), sampled.values());
        layer.row_vertices = seeds.col_indices();
        layer.column_vertices = sampled.col_indices();
        layer.batch_rows = batch_rows;
        layer.batch_columns = entry_offsets_at(sampled, batch_rows);
        layer.shared_columns = false;

        seeds = expand_row_extraction(sampled);
        batch_rows = layer.batch_columns;
        layer.frontier = std::move(sampled);
        out.layers.push_back(std::move(layer));
    }
    return out;
}

SampledEpoch sample_ladies(const Graph& graph, const SamplerConfig& config,
                           std::span<const Minibatch> batches, std::uint64_t epoch,
                           ProductEngine& engine) {
    const auto& a = graph.adjacency();
    const index_t n = graph.n();
    SampledEpoch out;
    SparseMatrix seeds = ladies_seed_matrix(vertex_lists(batches), n);
    std::vector<RowId> ids;
    for (const auto& b : batches) ids.push_back({b.id, 0});

    for (index_t depth = 0; depth < config.layers; ++depth) {
        const index_t width = config.fanout(depth);
        SparseMatrix probabilities = engine.multiply(seeds, a, ProductRole::probability);
        probabilities = norm_rows_ladies(probabilities);
        SparseMatrix sampled = sample_frontier(
            probabilities, width, {config.seed, epoch, static_cast<std::uint64_t>(depth)}, ids);

        // Rows: one per current frontier vertex. Columns: the vertices each
        // batch just sampled, extracted batch by batch.
        const SparseMatrix row_extract = expand_row_extraction(seeds);
        const SparseMatrix rows_of_a = engine.multiply(row_extract, a, ProductRole::row_extraction);
        std::vector<SparseMatrix> row_blocks;
        std::vector<SparseMatrix> col_blocks;
        row_blocks.reserve(batches.size());
        col_blocks.reserve(batches.size());
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto r = static_cast<index_t>(b);
            row_blocks.push_back(
                rows_of_a.slice_rows(seeds.row_offsets()[r], seeds.row_offsets()[r + 1]));
            col_blocks.push_back(build_column_extraction(sampled.row_cols(r), n, width));
        }
        constexpr std::size_t kChunk = 64;
        engine.count(ProductRole::column_extraction, (batches.size() + kChunk - 1) / kChunk);

        SampledLayer layer;
        layer.depth = depth;
        layer.adjacency = batches.empty() ? SparseMatrix::zeros(0, width)
                                          : block_diag_product(row_blocks, col_blocks, kChunk);
        layer.row_vertices = seeds.col_indices();
        layer.column_vertices = sampled.col_indices();
        layer.batch_rows = seeds.row_offsets();
        layer.batch_columns = sampled.row_offsets();
        layer.shared_columns = true;

        seeds = sampled;
        layer.frontier = std::move(sampled);
        out.layers.push_back(std::move(layer));
    }
    return out;
}

}  // namespace

SampledEpoch sample_epoch_bulk(const Graph& graph, const SamplerConfig& config,
                               std::span<const Minibatch> batches, std::uint64_t epoch,
                               ProductEngine& engine) {
    config.validate();
    SampledEpoch out = config.kind == SamplerKind::graphsage
                           ? sample_graphsage(graph, config, batches, epoch, engine)
                           : sample_ladies(graph, config, batches, epoch, engine);
    for (const auto& b : batches) out.batch_ids.push_back(b.id);
    return out;
}

SampledEpoch sample_epoch_bulk(const Graph& graph, const SamplerConfig& config,
                               std::span<const Minibatch> batches, std::uint64_t epoch) {
    SerialEngine engine;
    return sample_epoch_bulk(graph, config, batches, epoch, engine);
}

}  // namespace matsample
