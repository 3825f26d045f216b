#include "matsample/dist.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace matsample {

ProcessGrid::ProcessGrid(int processes, int replication) : p_(processes), c_(replication) {
    require(p_ >= 1, "process count must be positive");
    require(c_ >= 1, "replication factor must be positive");
    require(p_ % c_ == 0, "replication factor must divide the process count");
    require(c_ * c_ <= p_, "replication factor c must satisfy c^2 <= p");
    require(p_ % (c_ * c_) == 0, "c^2 must divide p so the 1.5D stage count is whole");
}

std::vector<int> ProcessGrid::process_row(int row) const {
    std::vector<int> out(static_cast<std::size_t>(c_));
    for (int j = 0; j < c_; ++j) out[j] = rank(row, j);
    return out;
}

std::vector<int> ProcessGrid::process_column(int col) const {
    std::vector<int> out(static_cast<std::size_t>(rows()));
    for (int i = 0; i < rows(); ++i) out[i] = rank(i, col);
    return out;
}

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::gather_cols: return "gather-cols";
        case Phase::row_data: return "row-data";
        case Phase::all_reduce: return "all-reduce";
        case Phase::alltoallv: return "all-to-allv";
    }
    return "unknown";
}

CommLedger::CommLedger(int processes, double alpha, double beta)
    : alpha_(alpha),
      beta_(beta),
      sent_(static_cast<std::size_t>(processes)),
      received_(static_cast<std::size_t>(processes)) {
    require(processes >= 1, "ledger needs at least one process");
    require(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be non-negative");
}

CommLedger::Step::Step(CommLedger& ledger, Phase phase)
    : ledger_(ledger),
      phase_(phase),
      sent_(static_cast<std::size_t>(ledger.processes())),
      received_(static_cast<std::size_t>(ledger.processes())) {}

void CommLedger::Step::send(int source, int dest, std::uint64_t words) {
    require(source >= 0 && source < ledger_.processes() && dest >= 0 &&
                dest < ledger_.processes(),
            "message endpoint out of range");
    if (source == dest) return;
    sent_[source] += Counts{1, words};
    received_[dest] += Counts{1, words};
}

void CommLedger::Step::charge(int rank, std::uint64_t messages, std::uint64_t words) {
    require(rank >= 0 && rank < ledger_.processes(), "rank out of range");
    sent_[rank] += Counts{messages, words};
    received_[rank] += Counts{messages, words};
}

void CommLedger::Step::commit() {
    if (committed_) return;
    committed_ = true;
    const auto ph = static_cast<std::size_t>(phase_);
    Counts busiest;
    for (std::size_t r = 0; r < sent_.size(); ++r) {
        ledger_.sent_[r][ph] += sent_[r];
        ledger_.received_[r][ph] += received_[r];
        busiest.messages =
            std::max({busiest.messages, sent_[r].messages, received_[r].messages});
        busiest.words = std::max({busiest.words, sent_[r].words, received_[r].words});
    }
    ledger_.critical_[ph] += busiest;
    ++ledger_.steps_[ph];
}

Counts CommLedger::total_sent(Phase phase) const {
    Counts out;
    for (const auto& per : sent_) out += per[static_cast<std::size_t>(phase)];
    return out;
}

Counts CommLedger::total_sent() const {
    Counts out;
    for (const Phase ph : kAllPhases) out += total_sent(ph);
    return out;
}

double CommLedger::modeled_time(Phase phase) const {
    const auto& c = critical(phase);
    return alpha_ * static_cast<double>(c.messages) + beta_ * static_cast<double>(c.words);
}

void CommLedger::merge(const CommLedger& other) {
    require(other.processes() == processes(), "cannot merge ledgers of different sizes");
    for (std::size_t r = 0; r < sent_.size(); ++r) {
        for (std::size_t ph = 0; ph < kPhaseCount; ++ph) {
            sent_[r][ph] += other.sent_[r][ph];
            received_[r][ph] += other.received_[r][ph];
        }
    }
    for (std::size_t ph = 0; ph < kPhaseCount; ++ph) {
        critical_[ph] += other.critical_[ph];
        steps_[ph] += other.steps_[ph];
    }
}

SparseMatrix BlockRowPartition::assemble() const { return vstack(blocks, n_cols); }

std::vector<index_t> balanced_offsets(index_t n, int parts) {
    require(parts >= 1, "need at least one part");
    std::vector<index_t> offsets(static_cast<std::size_t>(parts) + 1);
    for (int i = 0; i <= parts; ++i) offsets[i] = n * i / parts;
    return offsets;
}

BlockRowPartition partition_block_rows(const SparseMatrix& m, const ProcessGrid& grid) {
    BlockRowPartition out;
    out.grid = grid;
    out.n_rows = m.n_rows();
    out.n_cols = m.n_cols();
    out.row_offsets = balanced_offsets(m.n_rows(), grid.rows());
    out.blocks.reserve(static_cast<std::size_t>(grid.rows()));
    for (int i = 0; i < grid.rows(); ++i) {
        out.blocks.push_back(m.slice_rows(out.row_offsets[i], out.row_offsets[i + 1]));
    }
    return out;
}

BlockRowPartition replicated_spgemm(const BlockRowPartition& q, const SparseMatrix& a,
                                    CommLedger& ledger) {
    require(q.n_cols == a.n_rows(), "replicated_spgemm dimension mismatch");
    require(ledger.processes() == q.grid.size(), "ledger and grid disagree on process count");
    BlockRowPartition out;
    out.grid = q.grid;
    out.n_rows = q.n_rows;
    out.n_cols = a.n_cols();
    out.row_offsets = q.row_offsets;
    for (const auto& block : q.blocks) out.blocks.push_back(spgemm(block, a));
    // Local products only: an empty step keeps the phase visible in the ledger.
    ledger.step(Phase::row_data).commit();
    return out;
}

namespace {

struct RowShipment {
    std::vector<index_t> rows;  // global row ids of A
    SparseMatrix data;          // those rows, in order
};

SparseMatrix select_rows(const SparseMatrix& m, std::span<const index_t> local_rows) {
    std::vector<index_t> offsets{0};
    std::vector<index_t> cols;
    std::vector<value_t> vals;
    for (const index_t r : local_rows) {
        const auto rc = m.row_cols(r);
        const auto rv = m.row_values(r);
        cols.insert(cols.end(), rc.begin(), rc.end());
        vals.insert(vals.end(), rv.begin(), rv.end());
        offsets.push_back(static_cast<index_t>(cols.size()));
    }
    return SparseMatrix(static_cast<index_t>(local_rows.size()), m.n_cols(), std::move(offsets),
                        std::move(cols), std::move(vals));
}

}  // namespace

BlockRowPartition spgemm_15d_sparsity_aware(const BlockRowPartition& q,
                                            const BlockRowPartition& a, CommLedger& ledger,
                                            std::vector<StageRecord>* trace) {
    require(q.grid == a.grid, "operands must be partitioned on the same grid");
    require(q.n_cols == a.n_rows, "spgemm_15d dimension mismatch");
    const ProcessGrid& grid = q.grid;
    require(ledger.processes() == grid.size(), "ledger and grid disagree on process count");
    const int block_rows = grid.rows();
    const int c = grid.replication();
    const int stages = grid.stages();

    std::vector<SparseMatrix> partial(static_cast<std::size_t>(grid.size()));
    for (int r = 0; r < grid.size(); ++r) {
        partial[r] = SparseMatrix::zeros(q.blocks[grid.row_of(r)].n_rows(), a.n_cols);
    }

    for (int t = 0; t < stages; ++t) {
        auto a_block_of = [&](int rank) { return grid.col_of(rank) * stages + t; };
        // Q_ik restricted to the columns covered by A_k, renumbered from 0.
        std::vector<SparseMatrix> local_q(static_cast<std::size_t>(grid.size()));

        std::vector<Envelope<std::vector<index_t>>> requests;
        for (int r = 0; r < grid.size(); ++r) {
            const int k = a_block_of(r);
            local_q[r] = q.blocks[grid.row_of(r)].slice_columns(a.row_offsets[k],
                                                                a.row_offsets[k + 1]);
            requests.push_back({r, grid.rank(k, grid.col_of(r)), nonzero_columns(local_q[r])});
        }
        auto request_inbox = exchange(std::move(requests), Phase::gather_cols, ledger,
                                      [](const auto& ids) { return ids.size(); });

        std::vector<Envelope<RowShipment>> replies;
        for (int owner = 0; owner < grid.size(); ++owner) {
            const int k = grid.row_of(owner);
            for (auto& req : request_inbox[owner]) {
                if (req.payload.empty()) continue;
                RowShipment ship;
                ship.data = select_rows(a.blocks[k], req.payload);
                ship.rows.reserve(req.payload.size());
                for (const index_t local : req.payload) ship.rows.push_back(local + a.row_offsets[k]);
                replies.push_back({owner, req.source, std::move(ship)});
            }
        }
        auto row_inbox = exchange(std::move(replies), Phase::row_data, ledger,
                                  [](const RowShipment& s) { return s.data.nnz(); });

        for (int r = 0; r < grid.size(); ++r) {
            const int k = a_block_of(r);
            const auto compact = compact_columns(local_q[r]);
            if (trace) {
                StageRecord rec;
                rec.rank = r;
                rec.stage = t;
                rec.a_block = k;
                for (const index_t local : compact.column_map) {
                    rec.requested_rows.push_back(local + a.row_offsets[k]);
                }
                for (const auto& env : row_inbox[r]) {
                    rec.transmitted_rows.insert(rec.transmitted_rows.end(), env.payload.rows.begin(),
                                                env.payload.rows.end());
                }
                trace->push_back(std::move(rec));
            }
            if (row_inbox[r].empty()) continue;
            require(row_inbox[r].size() == 1, "expected a single row shipment per stage");
            const auto& rows = row_inbox[r].front().payload.data;
            partial[r] = add(partial[r], spgemm(compact.matrix, rows));
        }
    }

    BlockRowPartition out;
    out.grid = grid;
    out.n_rows = q.n_rows;
    out.n_cols = a.n_cols;
    out.row_offsets = q.row_offsets;
    out.blocks.resize(static_cast<std::size_t>(block_rows));

    // All process rows reduce concurrently, so they share one ledger step.
    auto step = ledger.step(Phase::all_reduce);
    const auto rounds = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(c))));
    for (int i = 0; i < block_rows; ++i) {
        SparseMatrix sum = partial[grid.rank(i, 0)];
        for (int j = 1; j < c; ++j) sum = add(sum, partial[grid.rank(i, j)]);
        if (c > 1) {
            for (const int member : grid.process_row(i)) {
                step.charge(member, rounds, static_cast<std::uint64_t>(sum.nnz()));
            }
        }
        out.blocks[i] = std::move(sum);
    }
    step.commit();
    return out;
}

SparseMatrix allreduce_sum(std::span<const SparseMatrix> blocks, std::span<const int> group,
                           CommLedger& ledger) {
    require(!blocks.empty() && blocks.size() == group.size(),
            "allreduce_sum needs one block per group member");
    SparseMatrix sum = blocks.front();
    for (std::size_t j = 1; j < blocks.size(); ++j) sum = add(sum, blocks[j]);
    auto step = ledger.step(Phase::all_reduce);
    if (group.size() > 1) {
        const auto rounds =
            static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(group.size()))));
        for (const int member : group) {
            step.charge(member, rounds, static_cast<std::uint64_t>(sum.nnz()));
        }
    }
    return sum;
}

std::vector<std::vector<WordBuffer>> alltoallv(std::vector<std::vector<WordBuffer>> send,
                                               std::span<const int> group, CommLedger& ledger) {
    const std::size_t g = group.size();
    require(send.size() == g, "alltoallv needs one send row per group member");
    std::vector<Envelope<std::pair<std::size_t, WordBuffer>>> outgoing;
    for (std::size_t i = 0; i < g; ++i) {
        require(send[i].size() == g, "alltoallv send rows must cover every destination");
        for (std::size_t j = 0; j < g; ++j) {
            if (send[i][j].empty()) continue;
            outgoing.push_back({group[i], group[j], {i, std::move(send[i][j])}});
        }
    }
    auto inbox = exchange(std::move(outgoing), Phase::alltoallv, ledger,
                          [](const auto& payload) { return payload.second.size(); });
    std::vector<std::vector<WordBuffer>> recv(g, std::vector<WordBuffer>(g));
    for (std::size_t j = 0; j < g; ++j) {
        for (auto& env : inbox[static_cast<std::size_t>(group[j])]) {
            recv[j][env.payload.first] = std::move(env.payload.second);
        }
    }
    return recv;
}

void CostModelParams::validate() const {
    for (const double v : {p, c, k, b, s, d, alpha, beta}) {
        require(v > 0.0, "cost model parameters must be positive");
    }
    require(c * c <= p, "cost model requires c^2 <= p");
}

CostPrediction predict_costs(const CostModelParams& m) {
    m.validate();
    CostPrediction out;
    const double kbd = m.k * m.b * m.d;
    out.rowdata_latency = m.alpha * std::log2(m.p / (m.c * m.c));
    out.rowdata_words = kbd / m.c;
    out.allreduce_latency = m.alpha * std::log2(m.c);
    out.allreduce_words = m.c * kbd / m.p;
    out.t_rowdata = out.rowdata_latency + m.beta * out.rowdata_words;
    out.t_allreduce = out.allreduce_latency + m.beta * out.allreduce_words;
    out.t_prob = m.alpha * (m.p / (m.c * m.c) + std::log2(m.c)) +
                 m.beta * (out.rowdata_words + out.allreduce_words);
    return out;
}

SparseMatrix ReplicatedEngine::compute(const SparseMatrix& left, const SparseMatrix& right,
                                       ProductRole) {
    return replicated_spgemm(partition_block_rows(left, grid_), right, ledger_).assemble();
}

SparseMatrix PartitionedEngine::compute(const SparseMatrix& left, const SparseMatrix& right,
                                        ProductRole role) {
    auto* trace = role == ProductRole::probability ? trace_ : nullptr;
    return spgemm_15d_sparsity_aware(partition_block_rows(left, grid_),
                                     partition_block_rows(right, grid_), ledger_, trace)
        .assemble();
}

}  // namespace matsample
