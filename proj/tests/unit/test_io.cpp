#include "matsample/io.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace matsample;
namespace fs = std::filesystem;

namespace {

std::string six_vertex_text(bool shuffled) {
    auto edges = matsample::testing::six_vertex_edge_list();
    if (shuffled) {
        std::mt19937_64 rng(4);
        std::shuffle(edges.begin(), edges.end(), rng);
    }
    std::ostringstream out;
    out << "# n=6\n";
    for (const auto& [u, v] : edges) out << u << ' ' << v << '\n';
    return out.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "matsample-tests";
    fs::create_directories(dir);
    const auto path = dir / name;
    fs::remove(path);
    return path;
}

RunConfig small_config(const fs::path& graph) {
    RunConfig cfg;
    cfg.graph_path = graph;
    cfg.direction = Direction::symmetrize;
    cfg.layers = 2;
    cfg.fanouts = {3, 2};
    cfg.batch_size = 4;
    cfg.bulk_count = 3;
    cfg.processes = 4;
    cfg.replication = 2;
    cfg.mode = DistMode::partitioned;
    cfg.feature_dim = 3;
    cfg.seed = 12;
    return cfg;
}

std::vector<nlohmann::json> run_and_collect(const RunConfig& cfg, index_t epochs) {
    const Graph g = load_graph(cfg.graph_path, cfg.format, cfg.direction);
    const ProcessGrid grid(cfg.processes, cfg.replication);
    const FeaturePartition features(synthesize_features(g.n(), cfg.feature_dim, cfg.seed), grid);
    std::vector<index_t> train(static_cast<std::size_t>(g.n()));
    std::iota(train.begin(), train.end(), index_t{0});
    std::vector<nlohmann::json> out;
    for (index_t e = 0; e < epochs; ++e) {
        PipelineOptions opts;
        opts.grid = grid;
        opts.mode = cfg.mode;
        opts.epoch = static_cast<std::uint64_t>(e);
        const auto report = run_epoch(g, features, cfg.sampler_config(), train, opts);
        emit_stats(report, cfg, static_cast<double>(g.edge_count()) / static_cast<double>(g.n()),
                   cfg.stats_path);
    }
    std::ifstream in(cfg.stats_path);
    std::string line;
    while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
    return out;
}

fs::path write_sample_graph() {
    const auto path = scratch("sample.edges");
    std::mt19937_64 rng(41);
    const auto g = matsample::testing::random_sparse_graph(60, 4, rng);
    std::ofstream out(path);
    out << "# n=60\n";
    for (index_t u = 0; u < g.n(); ++u) {
        for (const index_t v : g.neighbors(u)) {
            if (u < v) out << u << ' ' << v << '\n';
        }
    }
    return path;
}

}  // namespace

TEST(EdgeListTest, SixVertexDegrees) {
    std::istringstream in(six_vertex_text(false));
    const auto g = parse_edge_list(in, Direction::symmetrize);
    EXPECT_EQ(g.n(), 6);
    EXPECT_EQ(g.degrees(), (std::vector<index_t>{2, 2, 2, 2, 3, 3}));
    // Neighbor counts of each vertex within batch {1, 5}.
    std::vector<index_t> e(6, 0);
    for (const index_t b : {1, 5}) {
        for (const index_t v : g.neighbors(b)) ++e[static_cast<std::size_t>(v)];
    }
    EXPECT_EQ(e, (std::vector<index_t>{1, 0, 1, 1, 2, 0}));
}

TEST(EdgeListTest, HeaderOnlyGivesEdgelessGraph) {
    std::istringstream in("# n=5\n");
    const auto g = parse_edge_list(in, Direction::as_is);
    EXPECT_EQ(g.n(), 5);
    EXPECT_EQ(g.edge_count(), 0);
}

TEST(EdgeListTest, DuplicatesCollapseAndDirectionRespected) {
    std::istringstream directed("0 1\n0 1\n2 0\n");
    const auto g = parse_edge_list(directed, Direction::as_is);
    EXPECT_EQ(g.n(), 3);
    EXPECT_EQ(g.edge_count(), 2);
    EXPECT_TRUE(g.has_edge(0, 1));
    EXPECT_FALSE(g.has_edge(1, 0));
}

TEST(EdgeListTest, PermutationInvariant) {
    std::istringstream a(six_vertex_text(false));
    std::istringstream b(six_vertex_text(true));
    EXPECT_EQ(parse_edge_list(a, Direction::symmetrize).adjacency(),
              parse_edge_list(b, Direction::symmetrize).adjacency());
}

TEST(EdgeListTest, ErrorsCarryLineNumbers) {
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"0 1\n1 x\n", 2},
        {"# n=3\n0 1\n\n2 3\n", 4},
        {"0 1 2\n", 1},
        {"0 -1\n", 1},
        {"0 99999999999999999999999\n", 1},
    };
    for (const auto& [text, line] : cases) {
        std::istringstream in(text);
        try {
            parse_edge_list(in, Direction::as_is);
            ADD_FAILURE() << "no error for: " << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << e.what();
        }
    }
}

TEST(MatrixMarketTest, RoundTrip) {
    std::mt19937_64 rng(42);
    const auto g = matsample::testing::random_graph(30, 0.2, rng);
    std::stringstream buf;
    write_matrix_market(g, buf);
    EXPECT_EQ(parse_matrix_market(buf, Direction::as_is).adjacency(), g.adjacency());
}

TEST(MatrixMarketTest, SymmetricRealInput) {
    std::istringstream in(
        "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 2\n2 1 0.5\n3 3 1.0\n");
    const auto g = parse_matrix_market(in, Direction::as_is);
    EXPECT_TRUE(g.has_edge(0, 1));
    EXPECT_TRUE(g.has_edge(1, 0));
    EXPECT_TRUE(g.has_edge(2, 2));
    EXPECT_EQ(g.edge_count(), 3);
}

TEST(MatrixMarketTest, Errors) {
    const std::vector<std::pair<std::string, std::size_t>> cases{
        {"%%MatrixMarket matrix array real general\n", 1},
        {"%%MatrixMarket matrix coordinate pattern general\n3 3 1\n4 1\n", 3},
        {"%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 1\n", 3},
        {"%%MatrixMarket matrix coordinate pattern general\n3 4 0\n", 2},
    };
    for (const auto& [text, line] : cases) {
        std::istringstream in(text);
        try {
            parse_matrix_market(in, Direction::as_is);
            ADD_FAILURE() << "no error for: " << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << e.what();
        }
    }
}

TEST(LoadGraphTest, FileRoundTripThroughConvert) {
    const auto edges = scratch("fig1.edges");
    const auto mtx = scratch("fig1.mtx");
    std::ofstream(edges) << six_vertex_text(false);
    const auto g = load_graph(edges, GraphFormat::edge_list, Direction::symmetrize);
    write_matrix_market(g, mtx);
    EXPECT_EQ(load_graph(mtx, GraphFormat::matrix_market, Direction::as_is).adjacency(),
              g.adjacency());
    EXPECT_THROW(load_graph(scratch("missing.edges"), GraphFormat::edge_list, Direction::as_is),
                 std::runtime_error);
}

TEST(VertexSubsetTest, SortsAndValidates) {
    const auto path = scratch("train.txt");
    std::ofstream(path) << "5 1\n# comment\n3 1\n";
    EXPECT_EQ(load_vertex_subset(path, 6), (std::vector<index_t>{1, 3, 5}));
    EXPECT_THROW(load_vertex_subset(path, 5), ParseError);
}

TEST(FeaturesTest, Deterministic) {
    EXPECT_EQ(synthesize_features(10, 4, 1), synthesize_features(10, 4, 1));
    EXPECT_NE(synthesize_features(10, 4, 1)(3, 2), synthesize_features(10, 4, 2)(3, 2));
    const auto small = synthesize_features(2, 1, 0);
    EXPECT_EQ(small.rows, 2);
    EXPECT_EQ(small.cols, 1);
    for (const double x : synthesize_features(50, 5, 9).data) {
        EXPECT_GE(x, -1.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(RunConfigTest, Validation) {
    RunConfig cfg;
    cfg.fanouts = {2};
    EXPECT_NO_THROW(cfg.validate());
    cfg.replication = 2;
    cfg.processes = 6;
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = RunConfig{};
    cfg.layers = 2;
    cfg.fanouts = {2};
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = RunConfig{};
    cfg.sampler = SamplerKind::ladies;
    cfg.layers = 3;
    cfg.samples = 8;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.sampler_config().fanouts, (std::vector<index_t>{8, 8, 8}));
}

TEST(StatsTest, SchemaAndTotals) {
    auto cfg = small_config(write_sample_graph());
    cfg.stats_path = scratch("stats.jsonl");
    const auto records = run_and_collect(cfg, 2);

    const auto epochs = std::count_if(records.begin(), records.end(),
                                      [](const auto& r) { return r["record"] == "epoch"; });
    EXPECT_EQ(epochs, 2);
    const std::size_t per_epoch = 1 + kPhaseCount * static_cast<std::size_t>(cfg.processes);
    ASSERT_EQ(records.size(), 2 * per_epoch);

    for (const auto& r : records) EXPECT_EQ(r.at("schema"), kStatsSchemaVersion);
    for (std::size_t e = 0; e < 2; ++e) {
        const auto& head = records[e * per_epoch];
        ASSERT_EQ(head.at("record"), "epoch");
        for (const char* key : {"epoch", "sampler", "mode", "p", "c", "k", "b", "layers",
                                "fanouts", "seed", "batches_trained", "sampling_rounds",
                                "probability_products", "extraction_products",
                                "output_checksum", "sample_seconds", "fetch_seconds",
                                "propagate_seconds", "measured_totals", "measured_critical",
                                "predicted"}) {
            EXPECT_TRUE(head.contains(key)) << key;
        }
        for (const char* key : {"rowdata_words", "allreduce_words", "t_rowdata", "t_allreduce",
                                "t_prob"}) {
            EXPECT_TRUE(head["predicted"].contains(key)) << key;
        }
        EXPECT_EQ(head["batches_trained"], 15);  // ceil(60 / 4)

        // Per-process records add up to the epoch totals.
        for (const Phase ph : kAllPhases) {
            std::uint64_t words = 0, messages = 0, received = 0;
            for (std::size_t i = 1; i < per_epoch; ++i) {
                const auto& r = records[e * per_epoch + i];
                ASSERT_EQ(r.at("record"), "comm");
                if (r["phase"] != to_string(ph)) continue;
                words += r["words_sent"].get<std::uint64_t>();
                messages += r["messages_sent"].get<std::uint64_t>();
                received += r["words_received"].get<std::uint64_t>();
            }
            EXPECT_EQ(head["measured_totals"][to_string(ph)]["words"].get<std::uint64_t>(), words);
            EXPECT_EQ(head["measured_totals"][to_string(ph)]["messages"].get<std::uint64_t>(),
                      messages);
            EXPECT_EQ(received, words);
        }
        EXPECT_GT(head["measured_totals"]["row-data"]["words"].get<std::uint64_t>(), 0u);
    }
}

TEST(StatsTest, IdenticalRunsDifferOnlyInDurations) {
    auto cfg = small_config(write_sample_graph());
    cfg.stats_path = scratch("stats-a.jsonl");
    auto a = run_and_collect(cfg, 2);
    cfg.stats_path = scratch("stats-b.jsonl");
    auto b = run_and_collect(cfg, 2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (auto* rec : {&a[i], &b[i]}) {
            for (const char* key : {"sample_seconds", "fetch_seconds", "propagate_seconds"}) {
                rec->erase(key);
            }
        }
        EXPECT_EQ(a[i].dump(), b[i].dump());
    }
}
