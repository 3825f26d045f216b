// matsample: bulk matrix-based GNN minibatch sampling on a simulated grid.
//
//   matsample run      sample and train (aggregation only) for some epochs
//   matsample predict  evaluate the alpha-beta cost model
//   matsample convert  rewrite a graph as MatrixMarket

#include "matsample/dist.hpp"
#include "matsample/io.hpp"
#include "matsample/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <numeric>

using namespace matsample;

namespace {

int run_command(const RunConfig& config) {
    config.validate();
    const Graph graph = load_graph(config.graph_path, config.format, config.direction);
    std::vector<index_t> train;
    if (config.train_path.empty()) {
        train.resize(static_cast<std::size_t>(graph.n()));
        std::iota(train.begin(), train.end(), index_t{0});
    } else {
        train = load_vertex_subset(config.train_path, graph.n());
    }
    const ProcessGrid grid(config.processes, config.replication);
    const FeaturePartition features(synthesize_features(graph.n(), config.feature_dim, config.seed),
                                    grid);
    const double avg_degree =
        graph.n() > 0 ? static_cast<double>(graph.edge_count()) / static_cast<double>(graph.n()) : 0.0;

    for (index_t e = 0; e < config.epochs; ++e) {
        PipelineOptions options;
        options.grid = grid;
        options.mode = config.mode;
        options.epoch = static_cast<std::uint64_t>(e);
        const EpochReport report = run_epoch(graph, features, config.sampler_config(), train, options);
        if (!config.stats_path.empty()) emit_stats(report, config, avg_degree, config.stats_path);
        std::cout << "epoch " << e << ": " << report.batches_trained << " batches, "
                  << report.sampling_rounds << " sampling rounds, sample "
                  << report.sample_seconds << "s, fetch " << report.fetch_seconds
                  << "s, propagate " << report.propagate_seconds << "s, words "
                  << report.ledger.total_sent().words << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-based bulk minibatch sampling for GNN training"};
    app.require_subcommand(1);

    RunConfig config;
    std::string format = "edge-list";
    std::string direction = "as-is";
    std::string sampler = "graphsage";
    std::string mode = "replicated";

    auto* run = app.add_subcommand("run", "Sample and aggregate every minibatch for some epochs");
    run->add_option("--graph", config.graph_path, "Graph file")->required()->check(CLI::ExistingFile);
    run->add_option("--format", format, "edge-list or matrix-market")->capture_default_str();
    run->add_option("--direction", direction, "as-is or symmetrize")->capture_default_str();
    run->add_option("--sampler", sampler, "graphsage or ladies")->capture_default_str();
    run->add_option("--layers", config.layers, "GNN layers (L)")->capture_default_str();
    run->add_option("--batch-size", config.batch_size, "Minibatch size (b)")->capture_default_str();
    run->add_option("--fanouts", config.fanouts, "GraphSAGE fanout per layer, e.g. 15,10,5")
        ->delimiter(',');
    run->add_option("--samples", config.samples, "LADIES samples per layer (s)");
    run->add_option("--bulk", config.bulk_count, "Minibatches sampled per bulk round (k)")
        ->capture_default_str();
    run->add_option("--processes,-p", config.processes, "Simulated process count")
        ->capture_default_str();
    run->add_option("--replication,-c", config.replication, "Replication factor")
        ->capture_default_str();
    run->add_option("--mode", mode, "replicated or partitioned")->capture_default_str();
    run->add_option("--feature-dim", config.feature_dim, "Synthesized feature length (f)")
        ->capture_default_str();
    run->add_option("--epochs", config.epochs, "Epochs to run")->capture_default_str();
    run->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    run->add_option("--stats", config.stats_path, "Append JSON-lines statistics here");
    run->add_option("--train-vertices", config.train_path, "File of training vertex ids")
        ->check(CLI::ExistingFile);

    CostModelParams params;
    auto* predict = app.add_subcommand("predict", "Evaluate the 1.5D communication cost model");
    predict->add_option("-p", params.p, "Processes")->required();
    predict->add_option("-c", params.c, "Replication factor")->capture_default_str();
    predict->add_option("-k", params.k, "Bulk minibatch count")->required();
    predict->add_option("-b", params.b, "Batch size")->required();
    predict->add_option("-d", params.d, "Average degree")->required();
    predict->add_option("-s", params.s, "Sample count")->capture_default_str();
    predict->add_option("--alpha", params.alpha, "Latency per message")->capture_default_str();
    predict->add_option("--beta", params.beta, "Cost per word")->capture_default_str();

    std::filesystem::path convert_out;
    auto* convert = app.add_subcommand("convert", "Rewrite a graph as MatrixMarket");
    convert->add_option("--graph", config.graph_path, "Input graph")->required()->check(CLI::ExistingFile);
    convert->add_option("--format", format, "edge-list or matrix-market")->capture_default_str();
    convert->add_option("--direction", direction, "as-is or symmetrize")->capture_default_str();
    convert->add_option("--out", convert_out, "Output .mtx path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        config.format = parse_graph_format(format);
        config.direction = parse_direction(direction);
        if (*run) {
            config.sampler = parse_sampler_kind(sampler);
            config.mode = parse_dist_mode(mode);
            return run_command(config);
        }
        if (*predict) {
            const auto pred = predict_costs(params);
            nlohmann::json out = {{"t_rowdata", pred.t_rowdata},
                                  {"t_allreduce", pred.t_allreduce},
                                  {"t_prob", pred.t_prob},
                                  {"rowdata_words", pred.rowdata_words},
                                  {"allreduce_words", pred.allreduce_words}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (*convert) {
            const Graph graph = load_graph(config.graph_path, config.format, config.direction);
            write_matrix_market(graph, convert_out);
            std::cout << "wrote " << graph.n() << " vertices, " << graph.edge_count()
                      << " edges to " << convert_out.string() << '\n';
            return 0;
        }
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
