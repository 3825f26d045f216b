#include "matsample/dist.hpp"
#include "matsample/io.hpp"
#include "matsample/pipeline.hpp"
#include "matsample/sampler.hpp"
#include "matsample/sparse_matrix.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <numeric>

namespace py = pybind11;
using namespace matsample;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
    return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> dense_array(const DenseMatrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

DenseMatrix dense_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ContractViolation("expected a 2-D array");
    DenseMatrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::dict layer_dict(const BatchLayer& layer) {
    py::dict d;
    d["adjacency"] = layer.adjacency;
    d["row_vertices"] = to_array(layer.row_vertices);
    d["column_vertices"] = to_array(layer.column_vertices);
    return d;
}

py::dict ledger_dict(const CommLedger& ledger) {
    py::dict out;
    for (const Phase ph : kAllPhases) {
        py::dict phase;
        const auto total = ledger.total_sent(ph);
        const auto crit = ledger.critical(ph);
        phase["messages"] = total.messages;
        phase["words"] = total.words;
        phase["critical_messages"] = crit.messages;
        phase["critical_words"] = crit.words;
        phase["steps"] = ledger.steps(ph);
        py::list per_process;
        for (int r = 0; r < ledger.processes(); ++r) {
            per_process.append(py::make_tuple(ledger.sent(r, ph).words, ledger.received(r, ph).words));
        }
        phase["words_sent_received"] = per_process;
        out[py::str(to_string(ph))] = phase;
    }
    return out;
}

SamplerConfig make_config(const std::string& kind, const std::vector<index_t>& fanouts,
                          index_t batch_size, index_t bulk_count, std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.kind = parse_sampler_kind(kind);
    cfg.layers = static_cast<index_t>(fanouts.size());
    cfg.fanouts = fanouts;
    cfg.batch_size = batch_size;
    cfg.bulk_count = bulk_count;
    cfg.seed = seed;
    return cfg;
}

std::unique_ptr<ProductEngine> engine_for(const std::string& mode, int p, int c, CommLedger& ledger) {
    if (mode == "serial") return std::make_unique<SerialEngine>();
    const ProcessGrid grid(p, c);
    if (parse_dist_mode(mode) == DistMode::partitioned) {
        return std::make_unique<PartitionedEngine>(grid, ledger);
    }
    return std::make_unique<ReplicatedEngine>(grid, ledger);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse matrix kernels, bulk GNN samplers and a simulated 1.5D SpGEMM";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_RuntimeError);

    py::class_<SparseMatrix>(m, "SparseMatrix")
        .def(py::init([](index_t rows, index_t cols, std::vector<index_t> offsets,
                         std::vector<index_t> indices, std::vector<double> values) {
                 return SparseMatrix(rows, cols, std::move(offsets), std::move(indices),
                                     std::move(values));
             }),
             py::arg("n_rows"), py::arg("n_cols"), py::arg("row_offsets"), py::arg("col_indices"),
             py::arg("values"))
        .def_static("from_dense",
                    [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
                        const DenseMatrix d = dense_from(a);
                        return SparseMatrix::from_dense(d.rows, d.cols, d.data);
                    })
        .def_static("identity", &SparseMatrix::identity)
        .def_static("zeros", &SparseMatrix::zeros)
        .def_property_readonly("shape", [](const SparseMatrix& s) {
            return py::make_tuple(s.n_rows(), s.n_cols());
        })
        .def_property_readonly("nnz", &SparseMatrix::nnz)
        .def_property_readonly("row_offsets", [](const SparseMatrix& s) { return to_array(s.row_offsets()); })
        .def_property_readonly("col_indices", [](const SparseMatrix& s) { return to_array(s.col_indices()); })
        .def_property_readonly("values", [](const SparseMatrix& s) { return to_array(s.values()); })
        .def("at", &SparseMatrix::at)
        .def("to_dense", [](const SparseMatrix& s) {
            py::array_t<double> out({s.n_rows(), s.n_cols()});
            const auto d = s.to_dense();
            std::copy(d.begin(), d.end(), out.mutable_data());
            return out;
        })
        .def("__eq__", [](const SparseMatrix& a, const SparseMatrix& b) { return a == b; })
        .def("__repr__", [](const SparseMatrix& s) {
            return "<SparseMatrix " + std::to_string(s.n_rows()) + "x" + std::to_string(s.n_cols()) +
                   ", nnz=" + std::to_string(s.nnz()) + ">";
        });

    m.def("spgemm", &spgemm, py::arg("left"), py::arg("right"));
    m.def("add", &add);
    m.def("norm_rows_sage", &norm_rows_sage);
    m.def("norm_rows_ladies", &norm_rows_ladies);
    m.def("vstack", [](const std::vector<SparseMatrix>& blocks, index_t n_cols) {
        return vstack(blocks, n_cols);
    }, py::arg("blocks"), py::arg("n_cols"));
    m.def("block_diag", [](const std::vector<SparseMatrix>& blocks) { return block_diag(blocks); });
    m.def("compact_columns", [](const SparseMatrix& s) {
        auto c = compact_columns(s);
        return py::make_tuple(std::move(c.matrix), to_array(c.column_map));
    });
    m.def("expand_row_extraction", &expand_row_extraction);
    m.def("build_column_extraction",
          [](const std::vector<index_t>& cols, index_t n, index_t width) {
              return build_column_extraction(cols, n, width);
          },
          py::arg("sampled_cols"), py::arg("n"), py::arg("width") = -1);

    py::class_<Graph>(m, "Graph")
        .def(py::init<SparseMatrix>())
        .def_static("from_edges",
                    [](index_t n, const std::vector<Edge>& edges, bool symmetrize) {
                        return Graph::from_edges(n, edges, symmetrize);
                    },
                    py::arg("n"), py::arg("edges"), py::arg("symmetrize") = true)
        .def_property_readonly("n", &Graph::n)
        .def_property_readonly("edge_count", &Graph::edge_count)
        .def_property_readonly("adjacency", &Graph::adjacency)
        .def("degree", &Graph::degree)
        .def("degrees", [](const Graph& g) { return to_array(g.degrees()); })
        .def("neighbors", [](const Graph& g, index_t v) {
            const auto s = g.neighbors(v);
            return to_array(std::vector<index_t>(s.begin(), s.end()));
        })
        .def("has_edge", &Graph::has_edge);

    m.def("load_graph",
          [](const std::filesystem::path& path, const std::string& format, const std::string& direction) {
              return load_graph(path, parse_graph_format(format), parse_direction(direction));
          },
          py::arg("path"), py::arg("format") = "edge-list", py::arg("direction") = "as-is");
    m.def("write_matrix_market",
          [](const Graph& g, const std::filesystem::path& path) { write_matrix_market(g, path); });
    m.def("synthesize_features", [](index_t n, index_t f, std::uint64_t seed) {
        return dense_array(synthesize_features(n, f, seed));
    }, py::arg("n"), py::arg("f"), py::arg("seed"));

    m.def("sage_seed_matrix", [](const std::vector<std::vector<index_t>>& batches, index_t n) {
        return sage_seed_matrix(batches, n);
    });
    m.def("ladies_seed_matrix", [](const std::vector<std::vector<index_t>>& batches, index_t n) {
        return ladies_seed_matrix(batches, n);
    });
    m.def("its_sample_row",
          [](const std::vector<double>& probabilities, index_t count, std::uint64_t seed,
             std::uint64_t epoch, std::uint64_t layer, std::uint64_t batch, std::uint64_t row) {
              RowRng rng(seed, epoch, layer, batch, row);
              return to_array(its_sample_row(probabilities, count, rng));
          },
          py::arg("probabilities"), py::arg("count"), py::arg("seed") = 0, py::arg("epoch") = 0,
          py::arg("layer") = 0, py::arg("batch") = 0, py::arg("row") = 0);

    m.def("sample",
          [](const Graph& g, const std::vector<std::vector<index_t>>& batches,
             const std::string& sampler, const std::vector<index_t>& fanouts, std::uint64_t seed,
             std::uint64_t epoch, const std::string& mode, int p, int c) {
              std::vector<Minibatch> mbs;
              for (std::size_t i = 0; i < batches.size(); ++i) {
                  mbs.push_back({static_cast<index_t>(i), batches[i]});
              }
              const index_t b = batches.empty() ? 1 : static_cast<index_t>(batches.front().size());
              const auto cfg = make_config(sampler, fanouts, std::max<index_t>(b, 1),
                                           static_cast<index_t>(std::max<std::size_t>(mbs.size(), 1)), seed);
              CommLedger ledger(p);
              auto engine = engine_for(mode, p, c, ledger);
              const SampledEpoch sampled = sample_epoch_bulk(g, cfg, mbs, epoch, *engine);
              py::list per_batch;
              for (std::size_t i = 0; i < sampled.batch_count(); ++i) {
                  py::list layers;
                  for (const auto& layer : sampled.batch(i).layers) layers.append(layer_dict(layer));
                  per_batch.append(layers);
              }
              py::list frontiers;
              for (const auto& layer : sampled.layers) frontiers.append(layer.frontier);
              py::dict out;
              out["batches"] = per_batch;
              out["frontiers"] = frontiers;
              out["probability_products"] = engine->invocations(ProductRole::probability);
              out["ledger"] = ledger_dict(ledger);
              return out;
          },
          py::arg("graph"), py::arg("batches"), py::arg("sampler") = "graphsage",
          py::arg("fanouts") = std::vector<index_t>{2}, py::arg("seed") = 0, py::arg("epoch") = 0,
          py::arg("mode") = "serial", py::arg("p") = 1, py::arg("c") = 1);

    m.def("spgemm_distributed",
          [](const SparseMatrix& q, const SparseMatrix& a, int p, int c, const std::string& mode) {
              const ProcessGrid grid(p, c);
              CommLedger ledger(p);
              const auto qp = partition_block_rows(q, grid);
              const SparseMatrix out =
                  parse_dist_mode(mode) == DistMode::partitioned
                      ? spgemm_15d_sparsity_aware(qp, partition_block_rows(a, grid), ledger).assemble()
                      : replicated_spgemm(qp, a, ledger).assemble();
              return py::make_tuple(out, ledger_dict(ledger));
          },
          py::arg("q"), py::arg("a"), py::arg("p"), py::arg("c") = 1, py::arg("mode") = "partitioned");

    m.def("predict_costs",
          [](double p, double c, double k, double b, double d, double s, double alpha, double beta) {
              CostModelParams params;
              params.p = p;
              params.c = c;
              params.k = k;
              params.b = b;
              params.d = d;
              params.s = s;
              params.alpha = alpha;
              params.beta = beta;
              const auto r = predict_costs(params);
              py::dict out;
              out["rowdata_latency"] = r.rowdata_latency;
              out["rowdata_words"] = r.rowdata_words;
              out["allreduce_latency"] = r.allreduce_latency;
              out["allreduce_words"] = r.allreduce_words;
              out["t_rowdata"] = r.t_rowdata;
              out["t_allreduce"] = r.t_allreduce;
              out["t_prob"] = r.t_prob;
              return out;
          },
          py::arg("p"), py::arg("c") = 1.0, py::arg("k") = 1.0, py::arg("b") = 1.0,
          py::arg("d") = 1.0, py::arg("s") = 1.0, py::arg("alpha") = 1.0, py::arg("beta") = 1.0);

    m.def("run_epoch",
          [](const Graph& g, const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
             const std::string& sampler, const std::vector<index_t>& fanouts, index_t batch_size,
             index_t bulk_count, std::uint64_t seed, std::uint64_t epoch, int p, int c,
             const std::string& mode, std::optional<std::vector<index_t>> train) {
              PipelineOptions opts;
              opts.grid = ProcessGrid(p, c);
              opts.mode = parse_dist_mode(mode);
              opts.epoch = epoch;
              std::vector<index_t> vertices;
              if (train) {
                  vertices = *train;
              } else {
                  vertices.resize(static_cast<std::size_t>(g.n()));
                  std::iota(vertices.begin(), vertices.end(), index_t{0});
              }
              const FeaturePartition part(dense_from(features), opts.grid);
              const auto report = run_epoch(g, part, make_config(sampler, fanouts, batch_size, bulk_count, seed),
                                            vertices, opts);
              py::dict out;
              out["batches_trained"] = report.batches_trained;
              out["sampling_rounds"] = report.sampling_rounds;
              out["probability_products"] = report.probability_products;
              out["extraction_products"] = report.extraction_products;
              out["output_checksum"] = report.output_checksum;
              out["sample_seconds"] = report.sample_seconds;
              out["fetch_seconds"] = report.fetch_seconds;
              out["propagate_seconds"] = report.propagate_seconds;
              out["ledger"] = ledger_dict(report.ledger);
              return out;
          },
          py::arg("graph"), py::arg("features"), py::arg("sampler") = "graphsage",
          py::arg("fanouts") = std::vector<index_t>{2}, py::arg("batch_size") = 1,
          py::arg("bulk_count") = 1, py::arg("seed") = 0, py::arg("epoch") = 0, py::arg("p") = 1,
          py::arg("c") = 1, py::arg("mode") = "replicated", py::arg("train") = py::none());
}
