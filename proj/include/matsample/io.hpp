#ifndef MATSAMPLE_IO_HPP
#define MATSAMPLE_IO_HPP

#include "matsample/graph.hpp"
#include "matsample/pipeline.hpp"
#include "matsample/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace matsample {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class GraphFormat { edge_list, matrix_market };
enum class Direction { as_is, symmetrize };

GraphFormat parse_graph_format(const std::string& name);
Direction parse_direction(const std::string& name);

// Edge list: "src dst" per line, 0-based; "# n=<count>" fixes the vertex
// count, other '#' or '%' lines are comments. Without a header n is one past
// the largest id.
Graph parse_edge_list(std::istream& in, Direction direction, const std::string& source = "<edge-list>");

// MatrixMarket coordinate (pattern, real or integer; general or symmetric).
// Indices are 1-based in the file. Values are ignored: the graph is 0/1.
Graph parse_matrix_market(std::istream& in, Direction direction,
                          const std::string& source = "<matrix-market>");

Graph load_graph(const std::filesystem::path& path, GraphFormat format, Direction direction);

void write_matrix_market(const Graph& graph, std::ostream& out);
void write_matrix_market(const Graph& graph, const std::filesystem::path& path);

// Whitespace-separated vertex ids.
std::vector<index_t> load_vertex_subset(const std::filesystem::path& path, index_t n);

// Deterministic n x f matrix with entries uniform in [-1, 1).
DenseMatrix synthesize_features(index_t n, index_t f, std::uint64_t seed);

struct RunConfig {
    std::filesystem::path graph_path;
    GraphFormat format = GraphFormat::edge_list;
    Direction direction = Direction::as_is;
    SamplerKind sampler = SamplerKind::graphsage;
    index_t layers = 1;
    index_t batch_size = 1;
    std::vector<index_t> fanouts;  // GraphSAGE, one per layer
    index_t samples = 0;           // LADIES per-layer sample count
    index_t bulk_count = 1;
    int processes = 1;
    int replication = 1;
    DistMode mode = DistMode::replicated;
    index_t feature_dim = 16;
    index_t epochs = 1;
    std::uint64_t seed = 0;
    std::filesystem::path stats_path;
    std::filesystem::path train_path;  // empty: every vertex trains

    void validate() const;
    SamplerConfig sampler_config() const;
};

inline constexpr int kStatsSchemaVersion = 1;

// Stats records for one epoch: a single "epoch" record followed by one
// "comm" record per (phase, process).
std::vector<nlohmann::json> stats_records(const EpochReport& report, const RunConfig& config,
                                          double average_degree);

// Appends the records as JSON lines.
void emit_stats(const EpochReport& report, const RunConfig& config, double average_degree,
                const std::filesystem::path& path);

}  // namespace matsample

#endif  // MATSAMPLE_IO_HPP
