#ifndef MATSAMPLE_DIST_HPP
#define MATSAMPLE_DIST_HPP

#include "matsample/sampler.hpp"
#include "matsample/sparse_matrix.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace matsample {

// p processes arranged as a (p/c) x c grid; rank = row * c + col. Each block
// row of a distributed matrix lives on every process of one grid row.
class ProcessGrid {
public:
    ProcessGrid(int processes, int replication);

    int size() const { return p_; }
    int replication() const { return c_; }
    int rows() const { return p_ / c_; }
    // Stages of the 1.5D product, p / c^2.
    int stages() const { return p_ / (c_ * c_); }

    int rank(int row, int col) const { return row * c_ + col; }
    int row_of(int rank) const { return rank / c_; }
    int col_of(int rank) const { return rank % c_; }

    std::vector<int> process_row(int row) const;
    std::vector<int> process_column(int col) const;

    friend bool operator==(const ProcessGrid&, const ProcessGrid&) = default;

private:
    int p_;
    int c_;
};

enum class Phase : std::size_t { gather_cols = 0, row_data, all_reduce, alltoallv };
inline constexpr std::size_t kPhaseCount = 4;
inline constexpr std::array<Phase, kPhaseCount> kAllPhases{
    Phase::gather_cols, Phase::row_data, Phase::all_reduce, Phase::alltoallv};

std::string to_string(Phase phase);

struct Counts {
    std::uint64_t messages = 0;
    std::uint64_t words = 0;

    Counts& operator+=(const Counts& o) {
        messages += o.messages;
        words += o.words;
        return *this;
    }
    friend bool operator==(const Counts&, const Counts&) = default;
};

// Message and word counts per process and phase. Communication happens in
// bulk-synchronous steps; for each step the ledger also keeps the busiest
// process's load, whose running sum is the alpha-beta critical path.
class CommLedger {
public:
    explicit CommLedger(int processes, double alpha = 1.0, double beta = 1.0);

    class Step {
    public:
        Step(CommLedger& ledger, Phase phase);
        Step(const Step&) = delete;
        Step& operator=(const Step&) = delete;
        ~Step() { commit(); }

        // Point-to-point message; self-sends are local copies and cost nothing.
        void send(int source, int dest, std::uint64_t words);
        // Cost charged to one process of a collective, which sends and
        // receives that much.
        void charge(int rank, std::uint64_t messages, std::uint64_t words);
        void commit();

    private:
        CommLedger& ledger_;
        Phase phase_;
        std::vector<Counts> sent_;
        std::vector<Counts> received_;
        bool committed_ = false;
    };

    Step step(Phase phase) { return Step(*this, phase); }

    int processes() const { return static_cast<int>(sent_.size()); }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    const Counts& sent(int rank, Phase phase) const {
        return sent_[static_cast<std::size_t>(rank)][static_cast<std::size_t>(phase)];
    }
    const Counts& received(int rank, Phase phase) const {
        return received_[static_cast<std::size_t>(rank)][static_cast<std::size_t>(phase)];
    }
    const Counts& critical(Phase phase) const {
        return critical_[static_cast<std::size_t>(phase)];
    }
    std::uint64_t steps(Phase phase) const { return steps_[static_cast<std::size_t>(phase)]; }

    Counts total_sent(Phase phase) const;
    Counts total_sent() const;
    // alpha * critical messages + beta * critical words.
    double modeled_time(Phase phase) const;

    // Adds another ledger's counts (same process count) into this one.
    void merge(const CommLedger& other);

    friend bool operator==(const CommLedger&, const CommLedger&) = default;

private:
    double alpha_;
    double beta_;
    std::vector<std::array<Counts, kPhaseCount>> sent_;
    std::vector<std::array<Counts, kPhaseCount>> received_;
    std::array<Counts, kPhaseCount> critical_{};
    std::array<std::uint64_t, kPhaseCount> steps_{};
};

template <typename Payload>
struct Envelope {
    int source = 0;
    int dest = 0;
    Payload payload;
};

// Delivers one step's messages. Each inbox is ordered by sender rank, which
// keeps every run reproducible whatever order messages were posted in.
template <typename Payload, typename WordCount>
std::vector<std::vector<Envelope<Payload>>> exchange(std::vector<Envelope<Payload>> outgoing,
                                                     Phase phase, CommLedger& ledger,
                                                     WordCount&& words_of) {
    std::vector<std::vector<Envelope<Payload>>> inbox(
        static_cast<std::size_t>(ledger.processes()));
    auto step = ledger.step(phase);
    std::stable_sort(outgoing.begin(), outgoing.end(),
                     [](const auto& a, const auto& b) { return a.source < b.source; });
    for (auto& env : outgoing) {
        step.send(env.source, env.dest, static_cast<std::uint64_t>(words_of(env.payload)));
        inbox[static_cast<std::size_t>(env.dest)].push_back(std::move(env));
    }
    step.commit();
    return inbox;
}

// A matrix split into grid.rows() contiguous block rows.
struct BlockRowPartition {
    ProcessGrid grid{1, 1};
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<index_t> row_offsets;  // grid.rows() + 1
    std::vector<SparseMatrix> blocks;  // block i is held by process row i

    SparseMatrix assemble() const;
};

// Offsets splitting n items into `parts` contiguous ranges whose sizes
// differ by at most one.
std::vector<index_t> balanced_offsets(index_t n, int parts);

BlockRowPartition partition_block_rows(const SparseMatrix& m, const ProcessGrid& grid);

// Graph-replicated product: every process row multiplies its Q block by its
// own full copy of A. Nothing is communicated.
BlockRowPartition replicated_spgemm(const BlockRowPartition& q, const SparseMatrix& a,
                                    CommLedger& ledger);

// What one process asked for and received in one stage of the 1.5D product.
struct StageRecord {
    int rank = 0;
    int stage = 0;
    int a_block = 0;
    std::vector<index_t> requested_rows;    // global row ids of A, sorted
    std::vector<index_t> transmitted_rows;  // global row ids actually shipped
};

// Sparsity-aware 1.5D product. Process (i, j) walks stages t < p/c^2 over A
// block row k = j * (p/c^2) + t: it sends the owner P(k, j) the nonzero
// column ids of Q_ik, receives exactly those rows of A_k and accumulates
// Q_ik * A_k into a partial result. Partials are summed across each process
// row with an all-reduce in ascending process-column order.
BlockRowPartition spgemm_15d_sparsity_aware(const BlockRowPartition& q,
                                            const BlockRowPartition& a, CommLedger& ledger,
                                            std::vector<StageRecord>* trace = nullptr);

// Sum of `blocks` (one per group member, ascending rank) replicated to the
// group. Charged as recursive halving/doubling: ceil(log2 g) messages and
// nnz(result) words per member.
SparseMatrix allreduce_sum(std::span<const SparseMatrix> blocks, std::span<const int> group,
                           CommLedger& ledger);

using WordBuffer = std::vector<value_t>;

// send[i][j] goes from group[i] to group[j]; returns recv[j][i]. One message
// per non-empty transfer between distinct processes.
std::vector<std::vector<WordBuffer>> alltoallv(std::vector<std::vector<WordBuffer>> send,
                                               std::span<const int> group, CommLedger& ledger);

struct CostModelParams {
    double p = 1;
    double c = 1;
    double k = 1;
    double b = 1;
    double s = 1;
    double d = 1;  // average nonzeros per row of A
    double alpha = 1;
    double beta = 1;

    void validate() const;
};

struct CostPrediction {
    double rowdata_latency = 0;     // alpha * log2(p / c^2)
    double rowdata_words = 0;       // k b d / c
    double allreduce_latency = 0;   // alpha * log2(c)
    double allreduce_words = 0;     // c k b d / p
    double t_rowdata = 0;
    double t_allreduce = 0;
    double t_prob = 0;              // alpha (p/c^2 + log2 c) + beta (kbd/c + ckbd/p)
};

CostPrediction predict_costs(const CostModelParams& params);

class ReplicatedEngine final : public ProductEngine {
public:
    ReplicatedEngine(ProcessGrid grid, CommLedger& ledger) : grid_(grid), ledger_(ledger) {}

protected:
    SparseMatrix compute(const SparseMatrix& left, const SparseMatrix& right,
                         ProductRole role) override;

private:
    ProcessGrid grid_;
    CommLedger& ledger_;
};

class PartitionedEngine final : public ProductEngine {
public:
    PartitionedEngine(ProcessGrid grid, CommLedger& ledger) : grid_(grid), ledger_(ledger) {}

    // Optional sink for per-stage records of every probability product.
    void set_trace(std::vector<StageRecord>* trace) { trace_ = trace; }

protected:
    SparseMatrix compute(const SparseMatrix& left, const SparseMatrix& right,
                         ProductRole role) override;

private:
    ProcessGrid grid_;
    CommLedger& ledger_;
    std::vector<StageRecord>* trace_ = nullptr;
};

}  // namespace matsample

#endif  // MATSAMPLE_DIST_HPP
