#include "matsample/dist.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace matsample;
using matsample::testing::random_sparse;

TEST(ProcessGridTest, Layout) {
    const ProcessGrid g(8, 2);
    EXPECT_EQ(g.rows(), 4);
    EXPECT_EQ(g.stages(), 2);
    EXPECT_EQ(g.rank(3, 1), 7);
    EXPECT_EQ(g.row_of(5), 2);
    EXPECT_EQ(g.col_of(5), 1);
    EXPECT_EQ(g.process_row(1), (std::vector<int>{2, 3}));
    EXPECT_EQ(g.process_column(1), (std::vector<int>{1, 3, 5, 7}));
}

TEST(ProcessGridTest, RejectsInvalidShapes) {
    EXPECT_THROW(ProcessGrid(6, 4), ContractViolation);   // c does not divide p
    EXPECT_THROW(ProcessGrid(2, 2), ContractViolation);   // c^2 > p
    EXPECT_THROW(ProcessGrid(0, 1), ContractViolation);
    EXPECT_THROW(ProcessGrid(24, 4), ContractViolation);  // c^2 does not divide p
}

TEST(ProcessGridTest, AcceptsSquareGrids) {
    EXPECT_NO_THROW(ProcessGrid(4, 2));
    EXPECT_NO_THROW(ProcessGrid(16, 4));
    EXPECT_NO_THROW(ProcessGrid(1, 1));
}

TEST(PartitionTest, EvenSplit) {
    std::mt19937_64 rng(1);
    const auto m = random_sparse(8, 5, 0.5, rng);
    const auto part = partition_block_rows(m, ProcessGrid(4, 1));
    ASSERT_EQ(part.blocks.size(), 4u);
    for (const auto& b : part.blocks) EXPECT_EQ(b.n_rows(), 2);
    EXPECT_EQ(part.assemble(), m);
}

TEST(PartitionTest, SingleBlock) {
    std::mt19937_64 rng(2);
    const auto m = random_sparse(7, 5, 0.5, rng);
    const auto part = partition_block_rows(m, ProcessGrid(4, 2));
    // p/c = 2 here; with p = c = 1 there is one block equal to M.
    const auto single = partition_block_rows(m, ProcessGrid(1, 1));
    ASSERT_EQ(single.blocks.size(), 1u);
    EXPECT_EQ(single.blocks[0], m);
    EXPECT_EQ(part.blocks.size(), 2u);
}

TEST(PartitionTest, BalancedAndReconstructs) {
    std::mt19937_64 rng(3);
    for (const int p : {1, 2, 4, 8}) {
        for (index_t rows : {8, 13, 64}) {
            const auto m = random_sparse(rows, 9, 0.3, rng);
            const auto part = partition_block_rows(m, ProcessGrid(p, 1));
            index_t lo = rows, hi = 0;
            for (const auto& b : part.blocks) {
                lo = std::min(lo, b.n_rows());
                hi = std::max(hi, b.n_rows());
            }
            EXPECT_LE(hi - lo, 1);
            EXPECT_EQ(part.assemble(), m);
        }
    }
}

TEST(ReplicatedSpgemmTest, MatchesSerialWithoutCommunication) {
    const auto g = matsample::testing::six_vertex_graph();
    std::mt19937_64 rng(4);
    const auto q = random_sparse(10, 6, 0.4, rng, true);
    for (const int p : {1, 4}) {
        CommLedger ledger(p);
        const auto out = replicated_spgemm(partition_block_rows(q, ProcessGrid(p, 1)),
                                           g.adjacency(), ledger);
        EXPECT_EQ(out.assemble(), spgemm(q, g.adjacency()));
        EXPECT_EQ(ledger.total_sent(), Counts{});
        EXPECT_EQ(ledger.total_sent(Phase::row_data).words, 0u);
    }
}

TEST(Spgemm15dTest, MatchesSerialC1) {
    std::mt19937_64 rng(5);
    const auto a = matsample::testing::random_graph(32, 0.2, rng).adjacency();
    const auto q = random_sparse(16, 32, 0.15, rng, true);
    const ProcessGrid grid(4, 1);
    CommLedger ledger(4);
    const auto out = spgemm_15d_sparsity_aware(partition_block_rows(q, grid),
                                               partition_block_rows(a, grid), ledger);
    EXPECT_EQ(out.assemble(), spgemm(q, a));
    EXPECT_EQ(ledger.total_sent(Phase::all_reduce), Counts{});
}

TEST(Spgemm15dTest, ReplicationLowersRowData) {
    std::mt19937_64 rng(6);
    const auto a = matsample::testing::random_graph(32, 0.2, rng).adjacency();
    const auto q = random_sparse(16, 32, 0.15, rng, true);
    CommLedger l1(4);
    CommLedger l2(4);
    const ProcessGrid g1(4, 1);
    const ProcessGrid g2(4, 2);
    const auto o1 = spgemm_15d_sparsity_aware(partition_block_rows(q, g1),
                                              partition_block_rows(a, g1), l1);
    const auto o2 = spgemm_15d_sparsity_aware(partition_block_rows(q, g2),
                                              partition_block_rows(a, g2), l2);
    EXPECT_EQ(o1.assemble(), o2.assemble());
    EXPECT_LT(l2.total_sent(Phase::row_data).words, l1.total_sent(Phase::row_data).words);
    EXPECT_LT(l2.critical(Phase::row_data).words, l1.critical(Phase::row_data).words);
}

TEST(Spgemm15dTest, ZeroColumnBlockSendsNothing) {
    // Q only references A's first half, so the owners of the second half
    // never ship rows.
    std::mt19937_64 rng(7);
    const auto a = matsample::testing::random_graph(16, 0.4, rng).adjacency();
    std::vector<double> dense(8 * 16, 0.0);
    for (index_t r = 0; r < 8; ++r) dense[r * 16 + r % 8] = 1.0;
    const auto q = SparseMatrix::from_dense(8, 16, dense);
    const ProcessGrid grid(2, 1);
    CommLedger ledger(2);
    std::vector<StageRecord> trace;
    const auto out = spgemm_15d_sparsity_aware(partition_block_rows(q, grid),
                                               partition_block_rows(a, grid), ledger, &trace);
    EXPECT_EQ(out.assemble(), spgemm(q, a));
    for (const auto& rec : trace) {
        if (rec.a_block == 1) EXPECT_TRUE(rec.transmitted_rows.empty());
    }
    EXPECT_EQ(ledger.sent(1, Phase::row_data), Counts{});
}

TEST(Spgemm15dTest, TraceMatchesRequests) {
    std::mt19937_64 rng(8);
    const auto a = matsample::testing::random_graph(40, 0.1, rng).adjacency();
    const auto q = random_sparse(24, 40, 0.1, rng, true);
    const ProcessGrid grid(8, 2);
    CommLedger ledger(8);
    std::vector<StageRecord> trace;
    spgemm_15d_sparsity_aware(partition_block_rows(q, grid), partition_block_rows(a, grid),
                              ledger, &trace);
    EXPECT_EQ(trace.size(), static_cast<std::size_t>(grid.size() * grid.stages()));
    for (const auto& rec : trace) EXPECT_EQ(rec.requested_rows, rec.transmitted_rows);
}

TEST(Spgemm15dTest, MismatchedGridsThrow) {
    const auto m = SparseMatrix::identity(4);
    CommLedger ledger(4);
    EXPECT_THROW(spgemm_15d_sparsity_aware(partition_block_rows(m, ProcessGrid(4, 1)),
                                           partition_block_rows(m, ProcessGrid(4, 2)), ledger),
                 ContractViolation);
}

TEST(AllreduceTest, SingleMemberIsFree) {
    std::mt19937_64 rng(9);
    const auto m = random_sparse(4, 4, 0.5, rng);
    CommLedger ledger(1);
    const std::vector<int> group{0};
    EXPECT_EQ(allreduce_sum(std::span(&m, 1), group, ledger), m);
    EXPECT_EQ(ledger.total_sent(), Counts{});
}

TEST(AllreduceTest, DisjointUnionAndCharges) {
    const auto a = SparseMatrix::from_dense(1, 4, std::vector<double>{1, 0, 0, 0});
    const auto b = SparseMatrix::from_dense(1, 4, std::vector<double>{0, 0, 2, 0});
    const std::vector<SparseMatrix> blocks{a, b};
    const std::vector<int> group{0, 1};
    CommLedger ledger(2);
    const auto sum = allreduce_sum(blocks, group, ledger);
    EXPECT_EQ(sum.to_dense(), (std::vector<double>{1, 0, 2, 0}));
    EXPECT_EQ(ledger.sent(0, Phase::all_reduce), (Counts{1, 2}));
    EXPECT_EQ(ledger.sent(1, Phase::all_reduce), (Counts{1, 2}));
}

TEST(AllreduceTest, EqualsSerialAccumulation) {
    std::mt19937_64 rng(10);
    std::vector<SparseMatrix> blocks;
    for (int i = 0; i < 4; ++i) blocks.push_back(random_sparse(6, 6, 0.3, rng));
    const std::vector<int> group{0, 1, 2, 3};
    CommLedger ledger(4);
    auto oracle = matsample::testing::to_dense(blocks[0]).v;
    for (int i = 1; i < 4; ++i) {
        const auto d = blocks[i].to_dense();
        for (std::size_t e = 0; e < d.size(); ++e) oracle[e] += d[e];
    }
    EXPECT_EQ(allreduce_sum(blocks, group, ledger).to_dense(), oracle);
    EXPECT_EQ(ledger.sent(2, Phase::all_reduce).messages, 2u);
}

TEST(AlltoallvTest, EmptyBuffersCostNothing) {
    const std::vector<int> group{0, 1, 2};
    CommLedger ledger(3);
    std::vector<std::vector<WordBuffer>> send(3, std::vector<WordBuffer>(3));
    const auto recv = alltoallv(send, group, ledger);
    EXPECT_EQ(ledger.total_sent(), Counts{});
    for (const auto& row : recv) {
        for (const auto& buf : row) EXPECT_TRUE(buf.empty());
    }
}

TEST(AlltoallvTest, RingPermutation) {
    const std::vector<int> group{0, 1, 2, 3};
    CommLedger ledger(4);
    std::vector<std::vector<WordBuffer>> send(4, std::vector<WordBuffer>(4));
    for (int i = 0; i < 4; ++i) send[i][(i + 1) % 4] = {static_cast<double>(i)};
    const auto recv = alltoallv(send, group, ledger);
    EXPECT_EQ(ledger.total_sent(Phase::alltoallv), (Counts{4, 4}));
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(recv[j][(j + 3) % 4], WordBuffer{static_cast<double>((j + 3) % 4)});
    }
}

TEST(AlltoallvTest, DeliversEverythingOnce) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(0, 5);
    const std::vector<int> group{1, 3, 4, 6};
    CommLedger ledger(8);
    std::vector<std::vector<WordBuffer>> send(4, std::vector<WordBuffer>(4));
    std::multiset<double> sent;
    double next = 0.0;
    std::uint64_t expected_messages = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            const int n = len(rng);
            for (int w = 0; w < n; ++w) {
                send[i][j].push_back(next);
                sent.insert(next++);
            }
            if (n > 0 && i != j) ++expected_messages;
        }
    }
    const auto copy = send;
    const auto recv = alltoallv(send, group, ledger);
    std::multiset<double> got;
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_EQ(recv[j][i], copy[i][j]);
            got.insert(recv[j][i].begin(), recv[j][i].end());
        }
    }
    EXPECT_EQ(got, sent);
    EXPECT_EQ(ledger.total_sent(Phase::alltoallv).messages, expected_messages);
}

TEST(CommLedgerTest, CriticalPathTakesBusiestProcess) {
    CommLedger ledger(3, 2.0, 0.5);
    {
        auto step = ledger.step(Phase::row_data);
        step.send(0, 1, 10);
        step.send(0, 2, 4);
        step.send(2, 2, 100);  // self-send: free
    }
    EXPECT_EQ(ledger.sent(0, Phase::row_data), (Counts{2, 14}));
    EXPECT_EQ(ledger.received(1, Phase::row_data), (Counts{1, 10}));
    EXPECT_EQ(ledger.sent(2, Phase::row_data), Counts{});
    EXPECT_EQ(ledger.critical(Phase::row_data), (Counts{2, 14}));
    EXPECT_EQ(ledger.steps(Phase::row_data), 1u);
    EXPECT_DOUBLE_EQ(ledger.modeled_time(Phase::row_data), 2.0 * 2 + 0.5 * 14);
}

TEST(CostModelTest, DirectEvaluation) {
    CostModelParams params;
    params.p = 4;
    params.c = 1;
    params.k = 1;
    params.b = 2;
    params.d = 3;
    const auto pred = predict_costs(params);
    EXPECT_DOUBLE_EQ(pred.t_prob, 11.5);
    EXPECT_DOUBLE_EQ(pred.rowdata_words, 6.0);
    EXPECT_DOUBLE_EQ(pred.allreduce_words, 1.5);
    EXPECT_DOUBLE_EQ(pred.t_rowdata, 8.0);
    EXPECT_DOUBLE_EQ(pred.t_allreduce, 1.5);
}

TEST(CostModelTest, BalancePointAtSqrtP) {
    CostModelParams params;
    params.p = 16;
    params.c = 4;
    params.k = 8;
    params.b = 64;
    params.d = 10;
    const auto pred = predict_costs(params);
    EXPECT_DOUBLE_EQ(pred.rowdata_words, pred.allreduce_words);
    EXPECT_DOUBLE_EQ(pred.rowdata_words, 8.0 * 64 * 10 / 4);
}

TEST(CostModelTest, DoublingCHalvesRowData) {
    CostModelParams params;
    params.p = 64;
    params.k = 4;
    params.b = 32;
    params.d = 12;
    params.c = 2;
    const double at2 = predict_costs(params).rowdata_words;
    params.c = 4;
    EXPECT_DOUBLE_EQ(predict_costs(params).rowdata_words, at2 / 2);
}

TEST(CostModelTest, RejectsInvalidParameters) {
    CostModelParams params;
    params.p = 4;
    params.c = 4;
    EXPECT_THROW(predict_costs(params), ContractViolation);
    params.c = 1;
    params.b = 0;
    EXPECT_THROW(predict_costs(params), ContractViolation);
}

TEST(EngineTest, PartitionedEngineMatchesSerial) {
    std::mt19937_64 rng(12);
    const auto a = matsample::testing::random_graph(30, 0.2, rng).adjacency();
    const auto q = random_sparse(12, 30, 0.2, rng, true);
    CommLedger ledger(8);
    PartitionedEngine engine(ProcessGrid(8, 2), ledger);
    EXPECT_EQ(engine.multiply(q, a, ProductRole::probability), spgemm(q, a));
    EXPECT_EQ(engine.invocations(ProductRole::probability), 1u);
    EXPECT_GT(ledger.total_sent(Phase::row_data).words, 0u);
}
