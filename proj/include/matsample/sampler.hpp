#ifndef MATSAMPLE_SAMPLER_HPP
#define MATSAMPLE_SAMPLER_HPP

#include "matsample/graph.hpp"
#include "matsample/row_rng.hpp"
#include "matsample/sparse_matrix.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace matsample {

enum class SamplerKind { graphsage, ladies };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

struct SamplerConfig {
    SamplerKind kind = SamplerKind::graphsage;
    index_t layers = 1;
    index_t batch_size = 1;
    // Samples per row at each hop from the batch; fanouts[0] applies to the
    // batch vertices themselves. Must hold `layers` entries.
    std::vector<index_t> fanouts{1};
    index_t bulk_count = 1;
    std::uint64_t seed = 0;

    void validate() const;
    index_t fanout(index_t depth) const { return fanouts.at(static_cast<std::size_t>(depth)); }
};

struct Minibatch {
    index_t id = 0;
    std::vector<index_t> vertices;
};

// k x n-style seed matrices. GraphSAGE gets one one-hot row per batch vertex
// (stacked batch after batch); LADIES gets one row per batch holding all of
// its vertices.
SparseMatrix sage_seed_matrix(std::span<const std::vector<index_t>> batches, index_t n);
SparseMatrix ladies_seed_matrix(std::span<const std::vector<index_t>> batches, index_t n);

// Inverse transform sampling without replacement. Each draw binary-searches
// a uniform variate in the running prefix sum, then removes the drawn entry
// and renormalises. Returns indices in draw order.
std::vector<index_t> its_draw_order(std::span<const value_t> probabilities, index_t count,
                                    RowRng& rng);

// Same draws, returned sorted ascending.
std::vector<index_t> its_sample_row(std::span<const value_t> probabilities, index_t count,
                                    RowRng& rng);

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    std::uint64_t layer = 0;
};

// Identifies a distribution row independently of how rows are stacked.
struct RowId {
    index_t batch = 0;
    index_t row = 0;  // position of the row within its batch
};

// Samples min(count, nnz) columns of every row of a row-normalised P, giving
// a 0/1 matrix of P's shape. Row r draws from RowRng(key, rows[r]).
SparseMatrix sample_frontier(const SparseMatrix& probabilities, index_t count,
                             const StreamKey& key, std::span<const RowId> rows);

enum class ProductRole { probability, row_extraction, column_extraction };

// Executes the Q * A products of the sampling loop. Subclasses decide how the
// product is computed (serially or on a simulated process grid); the result
// must always equal spgemm(left, right).
class ProductEngine {
public:
    virtual ~ProductEngine() = default;

    SparseMatrix multiply(const SparseMatrix& left, const SparseMatrix& right, ProductRole role);

    std::size_t invocations(ProductRole role) const {
        return counts_[static_cast<std::size_t>(role)];
    }
    void count(ProductRole role, std::size_t n = 1) { counts_[static_cast<std::size_t>(role)] += n; }

protected:
    virtual SparseMatrix compute(const SparseMatrix& left, const SparseMatrix& right,
                                 ProductRole role) = 0;

private:
    std::array<std::size_t, 3> counts_{};
};

class SerialEngine final : public ProductEngine {
protected:
    SparseMatrix compute(const SparseMatrix& left, const SparseMatrix& right,
                         ProductRole role) override;
};

// One batch's view of a sampled layer.
struct BatchLayer {
    SparseMatrix adjacency;               // rows x sampled columns, local ids
    std::vector<index_t> row_vertices;    // vertex behind each row
    std::vector<index_t> column_vertices; // vertex behind each column

    friend bool operator==(const BatchLayer&, const BatchLayer&) = default;
};

struct BatchSample {
    index_t id = 0;
    std::vector<BatchLayer> layers;  // depth 0 (batch rows) first

    friend bool operator==(const BatchSample&, const BatchSample&) = default;
};

// Output of one sampling-loop iteration, stacked over all k batches.
struct SampledLayer {
    index_t depth = 0;  // hops between the rows of `adjacency` and the batch
    SparseMatrix frontier;                // sampled 0/1 matrix, one row per distribution
    SparseMatrix adjacency;               // stacked sampled adjacency
    std::vector<index_t> row_vertices;    // vertex behind each adjacency row
    std::vector<index_t> column_vertices; // sampled vertices, batch after batch
    std::vector<index_t> batch_rows;      // k + 1 offsets into adjacency rows
    std::vector<index_t> batch_columns;   // k + 1 offsets into column_vertices
    // LADIES layout: every batch's block starts at column 0 of a shared
    // width-s column space. Otherwise (GraphSAGE) blocks sit on the diagonal.
    bool shared_columns = false;

    BatchLayer batch(std::size_t i) const;

    friend bool operator==(const SampledLayer&, const SampledLayer&) = default;
};

struct SampledEpoch {
    std::vector<index_t> batch_ids;
    std::vector<SampledLayer> layers;  // depth 0 first

    std::size_t batch_count() const { return batch_ids.size(); }
    BatchSample batch(std::size_t i) const;

    friend bool operator==(const SampledEpoch&, const SampledEpoch&) = default;
};

// Runs the full sampling loop for a stack of minibatches: probability
// product, normalisation, ITS sampling and extraction for each layer.
SampledEpoch sample_epoch_bulk(const Graph& graph, const SamplerConfig& config,
                               std::span<const Minibatch> batches, std::uint64_t epoch,
                               ProductEngine& engine);

SampledEpoch sample_epoch_bulk(const Graph& graph, const SamplerConfig& config,
                               std::span<const Minibatch> batches, std::uint64_t epoch);

}  // namespace matsample

#endif  // MATSAMPLE_SAMPLER_HPP
