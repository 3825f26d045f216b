#include "matsample/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

namespace matsample {

GraphFormat parse_graph_format(const std::string& name) {
    if (name == "edge-list" || name == "edgelist") return GraphFormat::edge_list;
    if (name == "matrix-market" || name == "mtx") return GraphFormat::matrix_market;
    throw ContractViolation("unknown graph format: " + name);
}

Direction parse_direction(const std::string& name) {
    if (name == "as-is") return Direction::as_is;
    if (name == "symmetrize") return Direction::symmetrize;
    throw ContractViolation("unknown direction: " + name);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto start = s.find_first_not_of(" \t\r", pos);
        if (start == std::string_view::npos) break;
        const auto end = s.find_first_of(" \t\r", start);
        out.push_back(s.substr(start, end == std::string_view::npos ? s.size() - start : end - start));
        pos = end == std::string_view::npos ? s.size() : end;
    }
    return out;
}

index_t parse_id(std::string_view token, const std::string& source, std::size_t line) {
    index_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc::result_out_of_range) {
        throw ParseError(source, line, "vertex id overflow: " + std::string(token));
    }
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "expected an integer, got '" + std::string(token) + "'");
    }
    return value;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

}  // namespace

Graph parse_edge_list(std::istream& in, Direction direction, const std::string& source) {
    std::vector<Edge> edges;
    index_t declared_n = -1;
    index_t max_id = -1;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#' || line.front() == '%') {
            const auto body = trim(line.substr(1));
            if (body.rfind("n=", 0) == 0) {
                declared_n = parse_id(trim(body.substr(2)), source, line_no);
                if (declared_n < 0) throw ParseError(source, line_no, "vertex count must be non-negative");
            }
            continue;
        }
        const auto parts = tokens(line);
        if (parts.size() != 2) {
            throw ParseError(source, line_no, "expected 'src dst', got '" + std::string(line) + "'");
        }
        const index_t u = parse_id(parts[0], source, line_no);
        const index_t v = parse_id(parts[1], source, line_no);
        if (u < 0 || v < 0) throw ParseError(source, line_no, "vertex ids must be non-negative");
        if (declared_n >= 0 && (u >= declared_n || v >= declared_n)) {
            throw ParseError(source, line_no,
                             "vertex id exceeds declared n=" + std::to_string(declared_n));
        }
        if (std::max(u, v) == std::numeric_limits<index_t>::max()) {
            throw ParseError(source, line_no, "vertex id overflow");
        }
        max_id = std::max({max_id, u, v});
        edges.emplace_back(u, v);
    }
    const index_t n = declared_n >= 0 ? declared_n : max_id + 1;
    return Graph::from_edges(n, edges, direction == Direction::symmetrize);
}

Graph parse_matrix_market(std::istream& in, Direction direction, const std::string& source) {
    std::string raw;
    std::size_t line_no = 0;
    if (!std::getline(in, raw)) throw ParseError(source, 1, "empty MatrixMarket file");
    ++line_no;
    const auto banner = tokens(trim(raw));
    if (banner.size() != 5 || lower(banner[0]) != "%%matrixmarket" || lower(banner[1]) != "matrix") {
        throw ParseError(source, line_no, "missing %%MatrixMarket matrix banner");
    }
    if (lower(banner[2]) != "coordinate") {
        throw ParseError(source, line_no, "only coordinate MatrixMarket files are supported");
    }
    const std::string field = lower(banner[3]);
    if (field != "pattern" && field != "real" && field != "integer") {
        throw ParseError(source, line_no, "unsupported MatrixMarket field '" + field + "'");
    }
    const std::string symmetry = lower(banner[4]);
    if (symmetry != "general" && symmetry != "symmetric") {
        throw ParseError(source, line_no, "unsupported MatrixMarket symmetry '" + symmetry + "'");
    }
    const std::size_t expected_tokens = field == "pattern" ? 2 : 3;

    index_t n = -1;
    index_t declared_entries = -1;
    index_t entries = 0;
    std::vector<Edge> edges;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '%') continue;
        const auto parts = tokens(line);
        if (n < 0) {
            if (parts.size() != 3) throw ParseError(source, line_no, "expected 'rows cols entries'");
            const index_t rows = parse_id(parts[0], source, line_no);
            const index_t cols = parse_id(parts[1], source, line_no);
            declared_entries = parse_id(parts[2], source, line_no);
            if (rows != cols) throw ParseError(source, line_no, "adjacency matrix must be square");
            if (rows < 0 || declared_entries < 0) {
                throw ParseError(source, line_no, "size line must be non-negative");
            }
            n = rows;
            edges.reserve(static_cast<std::size_t>(declared_entries));
            continue;
        }
        if (parts.size() != expected_tokens) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(expected_tokens) + " fields per entry");
        }
        const index_t u = parse_id(parts[0], source, line_no);
        const index_t v = parse_id(parts[1], source, line_no);
        if (u < 1 || u > n || v < 1 || v > n) {
            throw ParseError(source, line_no, "entry index out of range 1.." + std::to_string(n));
        }
        ++entries;
        edges.emplace_back(u - 1, v - 1);
        if (symmetry == "symmetric" && u != v) edges.emplace_back(v - 1, u - 1);
    }
    if (n < 0) throw ParseError(source, line_no, "missing size line");
    if (entries != declared_entries) {
        throw ParseError(source, line_no,
                         "declared " + std::to_string(declared_entries) + " entries, found " +
                             std::to_string(entries));
    }
    return Graph::from_edges(n, edges, direction == Direction::symmetrize);
}

Graph load_graph(const std::filesystem::path& path, GraphFormat format, Direction direction) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file " + path.string());
    return format == GraphFormat::edge_list ? parse_edge_list(in, direction, path.string())
                                            : parse_matrix_market(in, direction, path.string());
}

void write_matrix_market(const Graph& graph, std::ostream& out) {
    const auto& a = graph.adjacency();
    out << "%%MatrixMarket matrix coordinate pattern general\n";
    out << a.n_rows() << ' ' << a.n_cols() << ' ' << a.nnz() << '\n';
    for (index_t r = 0; r < a.n_rows(); ++r) {
        for (const index_t c : a.row_cols(r)) out << (r + 1) << ' ' << (c + 1) << '\n';
    }
}

void write_matrix_market(const Graph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_matrix_market(graph, out);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<index_t> load_vertex_subset(const std::filesystem::path& path, index_t n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vertex subset " + path.string());
    std::vector<index_t> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        for (const auto tok : tokens(line)) {
            const index_t v = parse_id(tok, path.string(), line_no);
            if (v < 0 || v >= n) throw ParseError(path.string(), line_no, "vertex id out of range");
            out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

DenseMatrix synthesize_features(index_t n, index_t f, std::uint64_t seed) {
    require(n > 0 && f > 0, "feature matrix dimensions must be positive");
    DenseMatrix h(n, f);
    for (index_t v = 0; v < n; ++v) {
        RowRng rng(seed, 0, ~std::uint64_t{0} - 1, static_cast<std::uint64_t>(v), 0);
        for (auto& x : h.row(v)) x = 2.0 * rng.uniform() - 1.0;
    }
    return h;
}

void RunConfig::validate() const {
    require(layers >= 1, "layers must be positive");
    require(batch_size >= 1, "batch size must be positive");
    require(bulk_count >= 1, "bulk count must be positive");
    require(processes >= 1 && replication >= 1, "process counts must be positive");
    require(processes % replication == 0, "replication factor must divide the process count");
    require(feature_dim >= 1, "feature dimension must be positive");
    require(epochs >= 1, "epochs must be positive");
    if (sampler == SamplerKind::graphsage) {
        require(static_cast<index_t>(fanouts.size()) == layers,
                "GraphSAGE needs one fanout per layer");
        for (const index_t s : fanouts) require(s >= 1, "fanouts must be positive");
    } else {
        require(samples >= 1 || static_cast<index_t>(fanouts.size()) == layers,
                "LADIES needs a positive sample count");
    }
    ProcessGrid(processes, replication);
}

SamplerConfig RunConfig::sampler_config() const {
    SamplerConfig cfg;
    cfg.kind = sampler;
    cfg.layers = layers;
    cfg.batch_size = batch_size;
    cfg.bulk_count = bulk_count;
    cfg.seed = seed;
    if (sampler == SamplerKind::ladies && samples >= 1) {
        cfg.fanouts.assign(static_cast<std::size_t>(layers), samples);
    } else {
        cfg.fanouts = fanouts;
    }
    return cfg;
}

namespace {

nlohmann::json counts_json(const Counts& c) {
    return {{"messages", c.messages}, {"words", c.words}};
}

}  // namespace

std::vector<nlohmann::json> stats_records(const EpochReport& report, const RunConfig& config,
                                          double average_degree) {
    const SamplerConfig sampler = config.sampler_config();
    std::vector<nlohmann::json> out;

    nlohmann::json epoch = {
        {"record", "epoch"},
        {"schema", kStatsSchemaVersion},
        {"epoch", report.epoch},
        {"sampler", to_string(config.sampler)},
        {"mode", to_string(config.mode)},
        {"p", config.processes},
        {"c", config.replication},
        {"k", config.bulk_count},
        {"b", config.batch_size},
        {"layers", config.layers},
        {"fanouts", sampler.fanouts},
        {"seed", config.seed},
        {"batches_trained", report.batches_trained},
        {"sampling_rounds", report.sampling_rounds},
        {"probability_products", report.probability_products},
        {"extraction_products", report.extraction_products},
        {"output_checksum", report.output_checksum},
        {"sample_seconds", report.sample_seconds},
        {"fetch_seconds", report.fetch_seconds},
        {"propagate_seconds", report.propagate_seconds},
    };
    nlohmann::json totals = nlohmann::json::object();
    nlohmann::json critical = nlohmann::json::object();
    for (const Phase ph : kAllPhases) {
        totals[to_string(ph)] = counts_json(report.ledger.total_sent(ph));
        auto crit = counts_json(report.ledger.critical(ph));
        crit["steps"] = report.ledger.steps(ph);
        crit["modeled_time"] = report.ledger.modeled_time(ph);
        critical[to_string(ph)] = std::move(crit);
    }
    epoch["measured_totals"] = std::move(totals);
    epoch["measured_critical"] = std::move(critical);

    CostModelParams params;
    params.p = config.processes;
    params.c = config.replication;
    params.k = static_cast<double>(config.bulk_count);
    params.b = static_cast<double>(config.batch_size);
    params.s = static_cast<double>(sampler.fanouts.front());
    params.d = average_degree > 0 ? average_degree : 1.0;
    params.alpha = report.ledger.alpha();
    params.beta = report.ledger.beta();
    const CostPrediction pred = predict_costs(params);
    epoch["predicted"] = {
        {"d", params.d},
        {"rowdata_latency", pred.rowdata_latency},
        {"rowdata_words", pred.rowdata_words},
        {"allreduce_latency", pred.allreduce_latency},
        {"allreduce_words", pred.allreduce_words},
        {"t_rowdata", pred.t_rowdata},
        {"t_allreduce", pred.t_allreduce},
        {"t_prob", pred.t_prob},
    };
    out.push_back(std::move(epoch));

    for (const Phase ph : kAllPhases) {
        for (int r = 0; r < report.ledger.processes(); ++r) {
            const auto& sent = report.ledger.sent(r, ph);
            const auto& recv = report.ledger.received(r, ph);
            out.push_back({{"record", "comm"},
                           {"schema", kStatsSchemaVersion},
                           {"epoch", report.epoch},
                           {"phase", to_string(ph)},
                           {"process", r},
                           {"messages_sent", sent.messages},
                           {"words_sent", sent.words},
                           {"messages_received", recv.messages},
                           {"words_received", recv.words}});
        }
    }
    return out;
}

void emit_stats(const EpochReport& report, const RunConfig& config, double average_degree,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open stats file " + path.string());
    for (const auto& record : stats_records(report, config, average_degree)) {
        out << record.dump() << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("failed writing stats file " + path.string());
}

}  // namespace matsample
