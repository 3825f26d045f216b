#include "matsample/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <numeric>
#include <string>

namespace matsample {

FeaturePartition::FeaturePartition(const DenseMatrix& features, const ProcessGrid& grid)
    : grid_(grid), dim_(features.cols), offsets_(balanced_offsets(features.rows, grid.rows())) {
    require(features.cols > 0, "feature dimension must be positive");
    for (int i = 0; i < grid.rows(); ++i) {
        DenseMatrix block(offsets_[i + 1] - offsets_[i], dim_);
        std::copy(features.data.begin() + offsets_[i] * dim_,
                  features.data.begin() + offsets_[i + 1] * dim_, block.data.begin());
        blocks_.push_back(std::move(block));
    }
}

int FeaturePartition::owner_row(index_t vertex) const {
    require(vertex >= 0 && vertex < n(), "feature row " + std::to_string(vertex) + " out of range");
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), vertex);
    return static_cast<int>(it - offsets_.begin()) - 1;
}

std::span<const value_t> FeaturePartition::local_row(index_t vertex) const {
    const int row = owner_row(vertex);
    return blocks_[row].row(vertex - offsets_[row]);
}

std::vector<DenseMatrix> fetch_features_collective(
    const std::vector<std::vector<index_t>>& requests, const FeaturePartition& features,
    CommLedger& ledger) {
    const ProcessGrid& grid = features.grid();
    const int p = grid.size();
    require(static_cast<int>(requests.size()) == p, "need one request list per process");
    const index_t f = features.dim();

    std::vector<DenseMatrix> out;
    out.reserve(static_cast<std::size_t>(p));
    // send[owner][requester]: rows the owner ships, in the requester's order.
    std::vector<std::vector<WordBuffer>> send(static_cast<std::size_t>(p),
                                              std::vector<WordBuffer>(static_cast<std::size_t>(p)));
    // For each requester, (owner, slot) pairs still to be filled from messages.
    std::vector<std::vector<std::pair<int, index_t>>> pending(static_cast<std::size_t>(p));

    for (int r = 0; r < p; ++r) {
        out.emplace_back(static_cast<index_t>(requests[r].size()), f);
        for (std::size_t slot = 0; slot < requests[r].size(); ++slot) {
            const index_t v = requests[r][slot];
            const int owner = grid.rank(features.owner_row(v), grid.col_of(r));
            const auto src = features.local_row(v);
            if (owner == r) {
                std::copy(src.begin(), src.end(), out[r].row(static_cast<index_t>(slot)).begin());
            } else {
                auto& buf = send[owner][r];
                buf.insert(buf.end(), src.begin(), src.end());
                pending[r].push_back({owner, static_cast<index_t>(slot)});
            }
        }
    }

    std::vector<int> everyone(static_cast<std::size_t>(p));
    std::iota(everyone.begin(), everyone.end(), 0);
    const auto recv = alltoallv(std::move(send), everyone, ledger);

    for (int r = 0; r < p; ++r) {
        std::vector<std::size_t> cursor(static_cast<std::size_t>(p), 0);
        for (const auto& [owner, slot] : pending[r]) {
            const auto& buf = recv[r][owner];
            auto& pos = cursor[owner];
            std::copy(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                      buf.begin() + static_cast<std::ptrdiff_t>(pos + f), out[r].row(slot).begin());
            pos += static_cast<std::size_t>(f);
        }
    }
    return out;
}

DenseMatrix fetch_features(std::span<const index_t> vertices, int requester,
                           const FeaturePartition& features, CommLedger& ledger) {
    require(requester >= 0 && requester < features.grid().size(), "requester rank out of range");
    std::vector<std::vector<index_t>> requests(static_cast<std::size_t>(features.grid().size()));
    requests[requester].assign(vertices.begin(), vertices.end());
    return std::move(fetch_features_collective(requests, features, ledger)[requester]);
}

DenseMatrix forward_aggregate(const SparseMatrix& adjacency, const DenseMatrix& input) {
    require(adjacency.n_cols() == input.rows,
            "forward_aggregate dimension mismatch: adjacency has " +
                std::to_string(adjacency.n_cols()) + " columns, input has " +
                std::to_string(input.rows) + " rows");
    DenseMatrix out(adjacency.n_rows(), input.cols);
    for (index_t r = 0; r < adjacency.n_rows(); ++r) {
        auto dst = out.row(r);
        const auto cols = adjacency.row_cols(r);
        const auto vals = adjacency.row_values(r);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const auto src = input.row(cols[e]);
            for (index_t j = 0; j < input.cols; ++j) dst[j] += vals[e] * src[j];
        }
    }
    return out;
}

std::string to_string(DistMode mode) {
    return mode == DistMode::replicated ? "replicated" : "partitioned";
}

DistMode parse_dist_mode(const std::string& name) {
    if (name == "replicated") return DistMode::replicated;
    if (name == "partitioned") return DistMode::partitioned;
    throw ContractViolation("unknown distribution mode: " + name);
}

EpochPlan make_epoch_plan(std::span<const index_t> train_vertices, index_t batch_size,
                          index_t bulk_count, std::uint64_t seed, std::uint64_t epoch) {
    require(batch_size >= 1, "batch size must be at least 1");
    require(bulk_count >= 1, "bulk count must be at least 1");
    std::vector<index_t> order(train_vertices.begin(), train_vertices.end());
    // Fisher-Yates over a dedicated stream (layer id all-ones marks shuffling).
    RowRng rng(seed, epoch, ~std::uint64_t{0}, 0, 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    EpochPlan plan;
    plan.bulk_count = bulk_count;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(batch_size)) {
        const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(batch_size));
        plan.batches.push_back({static_cast<index_t>(plan.batches.size()),
                                {order.begin() + static_cast<std::ptrdiff_t>(first),
                                 order.begin() + static_cast<std::ptrdiff_t>(last)}});
    }
    for (std::size_t first = 0; first < plan.batches.size();
         first += static_cast<std::size_t>(bulk_count)) {
        plan.chunks.push_back(
            {first, std::min(plan.batches.size(), first + static_cast<std::size_t>(bulk_count))});
    }
    return plan;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::unique_ptr<ProductEngine> make_engine(const PipelineOptions& options, CommLedger& ledger) {
    if (options.mode == DistMode::partitioned) {
        return std::make_unique<PartitionedEngine>(options.grid, ledger);
    }
    return std::make_unique<ReplicatedEngine>(options.grid, ledger);
}

}  // namespace

EpochReport run_epoch(const Graph& graph, const FeaturePartition& features,
                      const SamplerConfig& config, std::span<const index_t> train_vertices,
                      const PipelineOptions& options) {
    config.validate();
    require(features.grid() == options.grid, "feature partition and pipeline grid differ");
    require(features.n() == graph.n(), "feature rows must match the vertex count");
    const int p = options.grid.size();

    EpochReport report;
    report.epoch = options.epoch;
    report.ledger = CommLedger(p);
    const EpochPlan plan = make_epoch_plan(train_vertices, config.batch_size, config.bulk_count,
                                           config.seed, options.epoch);
    auto engine = make_engine(options, report.ledger);
    std::map<index_t, double> batch_sums;

    for (const auto& [first, last] : plan.chunks) {
        const std::span<const Minibatch> chunk(plan.batches.data() + first, last - first);
        auto start = Clock::now();
        const SampledEpoch sampled =
            sample_epoch_bulk(graph, config, chunk, options.epoch, *engine);
        report.sample_seconds += seconds_since(start);
        ++report.sampling_rounds;

        // Batch j of the round trains on process j mod p; every process
        // handles one batch per all-to-allv round.
        const std::size_t count = chunk.size();
        const std::size_t rounds = (count + static_cast<std::size_t>(p) - 1) / static_cast<std::size_t>(p);
        for (std::size_t round = 0; round < rounds; ++round) {
            std::vector<BatchSample> mine(static_cast<std::size_t>(p));
            std::vector<bool> active(static_cast<std::size_t>(p), false);
            std::vector<std::vector<index_t>> requests(static_cast<std::size_t>(p));
            for (int r = 0; r < p; ++r) {
                const std::size_t j = round * static_cast<std::size_t>(p) + static_cast<std::size_t>(r);
                if (j >= count) continue;
                mine[r] = sampled.batch(j);
                active[r] = true;
                requests[r] = mine[r].layers.back().column_vertices;
            }

            start = Clock::now();
            const auto fetched = fetch_features_collective(requests, features, report.ledger);
            report.fetch_seconds += seconds_since(start);

            start = Clock::now();
            for (int r = 0; r < p; ++r) {
                if (!active[r]) continue;
                const auto& batch = mine[r];
                if (options.on_fetch) options.on_fetch(batch.id, requests[r], fetched[r]);
                DenseMatrix h = fetched[r];
                for (auto layer = batch.layers.rbegin(); layer != batch.layers.rend(); ++layer) {
                    h = forward_aggregate(layer->adjacency, h);
                }
                batch_sums[batch.id] = std::accumulate(h.data.begin(), h.data.end(), 0.0);
                report.trained_batch_ids.push_back(batch.id);
                ++report.batches_trained;
                if (options.keep_samples) report.samples.push_back(batch);
            }
            report.propagate_seconds += seconds_since(start);
        }
    }

    for (const auto& [id, sum] : batch_sums) report.output_checksum += sum;
    std::sort(report.trained_batch_ids.begin(), report.trained_batch_ids.end());
    std::sort(report.samples.begin(), report.samples.end(),
              [](const BatchSample& a, const BatchSample& b) { return a.id < b.id; });
    report.probability_products = engine->invocations(ProductRole::probability);
    report.extraction_products = engine->invocations(ProductRole::row_extraction) +
                                 engine->invocations(ProductRole::column_extraction);
    return report;
}

}  // namespace matsample
