#ifndef MATSAMPLE_PIPELINE_HPP
#define MATSAMPLE_PIPELINE_HPP

#include "matsample/dist.hpp"
#include "matsample/graph.hpp"
#include "matsample/sampler.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace matsample {

// Row-major dense matrix.
struct DenseMatrix {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<value_t> data;

    DenseMatrix() = default;
    DenseMatrix(index_t r, index_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

    std::span<value_t> row(index_t i) { return {data.data() + i * cols, static_cast<std::size_t>(cols)}; }
    std::span<const value_t> row(index_t i) const {
        return {data.data() + i * cols, static_cast<std::size_t>(cols)};
    }
    value_t& operator()(index_t i, index_t j) { return data[i * cols + j]; }
    value_t operator()(index_t i, index_t j) const { return data[i * cols + j]; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

// H split into grid.rows() block rows; block i is stored on every process of
// grid row i, so each process column holds a full copy of H.
class FeaturePartition {
public:
    FeaturePartition(const DenseMatrix& features, const ProcessGrid& grid);

    const ProcessGrid& grid() const { return grid_; }
    index_t n() const { return offsets_.back(); }
    index_t dim() const { return dim_; }
    int owner_row(index_t vertex) const;
    const std::vector<index_t>& row_offsets() const { return offsets_; }
    const DenseMatrix& block(int row) const { return blocks_[static_cast<std::size_t>(row)]; }
    // Row of H for `vertex` as stored in its owning block.
    std::span<const value_t> local_row(index_t vertex) const;

private:
    ProcessGrid grid_;
    index_t dim_;
    std::vector<index_t> offsets_;
    std::vector<DenseMatrix> blocks_;
};

// One all-to-allv round. requests[r] lists the vertices process r needs;
// each row comes from the replica in r's own process column, P(owner, col(r)).
// Returns one |requests[r]| x f matrix per process, rows in request order.
std::vector<DenseMatrix> fetch_features_collective(
    const std::vector<std::vector<index_t>>& requests, const FeaturePartition& features,
    CommLedger& ledger);

DenseMatrix fetch_features(std::span<const index_t> vertices, int requester,
                           const FeaturePartition& features, CommLedger& ledger);

// Sparse-dense product A_l * H_in.
DenseMatrix forward_aggregate(const SparseMatrix& adjacency, const DenseMatrix& input);

enum class DistMode { replicated, partitioned };

std::string to_string(DistMode mode);
DistMode parse_dist_mode(const std::string& name);

struct EpochPlan {
    std::vector<Minibatch> batches;
    index_t bulk_count = 1;
    // [begin, end) ranges into `batches`, one per bulk sampling round.
    std::vector<std::pair<std::size_t, std::size_t>> chunks;
};

// Shuffles the training vertices with a stream keyed by (seed, epoch) and
// deals them into batches of `batch_size`; the last batch may be short.
EpochPlan make_epoch_plan(std::span<const index_t> train_vertices, index_t batch_size,
                          index_t bulk_count, std::uint64_t seed, std::uint64_t epoch);

struct PipelineOptions {
    ProcessGrid grid{1, 1};
    DistMode mode = DistMode::replicated;
    std::uint64_t epoch = 0;
    bool keep_samples = false;
    // Called with (batch id, requested vertices, fetched rows) for every fetch.
    std::function<void(index_t, std::span<const index_t>, const DenseMatrix&)> on_fetch;
};

struct EpochReport {
    std::uint64_t epoch = 0;
    index_t batches_trained = 0;
    index_t sampling_rounds = 0;
    std::size_t probability_products = 0;
    std::size_t extraction_products = 0;
    double sample_seconds = 0;
    double fetch_seconds = 0;
    double propagate_seconds = 0;
    // Sum of every minibatch's aggregated output, added in batch-id order.
    double output_checksum = 0;
    std::vector<index_t> trained_batch_ids;  // sorted
    std::vector<BatchSample> samples;        // only with keep_samples, sorted by id
    CommLedger ledger{1};
};

// Samples the epoch in bulk rounds of k batches, then for each batch fetches
// the deepest frontier's features and aggregates them back up to the batch.
EpochReport run_epoch(const Graph& graph, const FeaturePartition& features,
                      const SamplerConfig& config, std::span<const index_t> train_vertices,
                      const PipelineOptions& options);

}  // namespace matsample

#endif  // MATSAMPLE_PIPELINE_HPP
