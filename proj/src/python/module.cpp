#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggnn/build.hpp"
#include "ggnn/eval.hpp"
#include "ggnn/index_io.hpp"
#include "ggnn/search.hpp"
#include "ggnn/shard.hpp"
#include "ggnn/vecs_io.hpp"

namespace py = pybind11;
using namespace ggnn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IdArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const FloatArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d float array of shape (n, d)");
    const auto n = static_cast<std::size_t>(a.shape(0));
    const auto d = static_cast<std::size_t>(a.shape(1));
    return Dataset(n, d, std::vector<float>(a.data(), a.data() + n * d));
}

py::array_t<float> to_array(const Dataset& d) {
    py::array_t<float> out({d.size(), d.dim()});
    std::copy(d.elements().begin(), d.elements().end(), out.mutable_data());
    return out;
}

BuildConfig make_build_config(std::uint32_t k, std::uint32_t k_nn, std::optional<std::uint32_t> k_sym, std::uint32_t s,
                              std::uint32_t g, std::uint32_t refinements, double tau_build, std::uint64_t seed,
                              unsigned threads) {
    BuildConfig c;
    c.k = k;
    c.k_nn = k_nn;
    c.k_sym = k_sym ? *k_sym : (k >= k_nn ? k - k_nn : 0);
    c.s = s;
    c.g = g;
    c.refinements = refinements;
    c.tau_build = tau_build;
    c.seed = seed;
    c.threads = threads;
    return c;
}

QueryConfig make_query_config(std::size_t k, double tau, std::size_t max_iterations) {
    QueryConfig q;
    q.k_out = k;
    q.tau = tau;
    q.max_iterations = max_iterations;
    q.cache.prioq_size = std::max(q.cache.prioq_size, 2 * k);
    return q;
}

// (ids, squared distances), each (m, k); missing entries are -1 / inf.
py::tuple results_to_arrays(const std::vector<QueryResult>& results, std::size_t k) {
    py::array_t<std::int64_t> ids({results.size(), k});
    py::array_t<float> dists({results.size(), k});
    auto I = ids.mutable_unchecked<2>();
    auto D = dists.mutable_unchecked<2>();
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const bool have = j < results[i].hits.size();
            I(i, j) = have ? static_cast<std::int64_t>(results[i].hits[j].id) : -1;
            D(i, j) = have ? results[i].hits[j].dist : kInfDist;
        }
    }
    return py::make_tuple(ids, dists);
}

GroundTruth gt_from_array(const IdArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d id array");
    GroundTruth gt;
    gt.k = static_cast<std::size_t>(a.shape(1));
    auto A = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        gt.rows.emplace_back();
        for (py::ssize_t j = 0; j < a.shape(1); ++j) gt.rows.back().push_back({static_cast<NodeId>(A(i, j)), 0.0f});
    }
    return gt;
}

std::vector<std::vector<NodeId>> ids_from_array(const IdArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d id array");
    std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(a.shape(0)));
    auto A = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        for (py::ssize_t j = 0; j < a.shape(1); ++j) {
            if (A(i, j) >= 0) out[i].push_back(static_cast<NodeId>(A(i, j)));
        }
    }
    return out;
}

class PyIndex {
public:
    PyIndex(Dataset data, Hierarchy h) : data_(std::move(data)), h_(std::move(h)) {}

    static PyIndex build_from(const FloatArray& a, const BuildConfig& cfg) {
        Dataset data = to_dataset(a);
        Hierarchy h;
        {
            py::gil_scoped_release release;
            h = build(data, cfg).first;
        }
        return PyIndex(std::move(data), std::move(h));
    }

    py::tuple search(const FloatArray& q, std::size_t k, double tau, std::size_t max_iterations, unsigned threads) const {
        const Dataset queries = to_dataset(q);
        check_compatible(data_, queries);
        const QueryConfig cfg = make_query_config(k, tau, max_iterations);
        std::vector<QueryResult> results;
        {
            py::gil_scoped_release release;
            results = query_batch(h_, data_, queries, cfg, threads);
        }
        return results_to_arrays(results, k);
    }

    const Dataset& data() const { return data_; }
    const Hierarchy& hierarchy() const { return h_; }

private:
    Dataset data_;
    Hierarchy h_;
};

class PyShardedIndex {
public:
    explicit PyShardedIndex(ShardedIndex si, std::size_t n, std::size_t dim) : si_(std::move(si)), n_(n), dim_(dim) {}

    py::tuple search(const FloatArray& q, std::size_t k, double tau, std::size_t max_iterations, unsigned threads) const {
        const Dataset queries = to_dataset(q);
        if (queries.dim() != dim_) throw ConfigError("query dimension does not match the index");
        const QueryConfig cfg = make_query_config(k, tau, max_iterations);
        std::vector<QueryResult> results;
        {
            py::gil_scoped_release release;
            results = query_sharded_batch(si_, queries, cfg, threads);
        }
        return results_to_arrays(results, k);
    }

    const ShardedIndex& get() const { return si_; }
    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }

private:
    ShardedIndex si_;
    std::size_t n_;
    std::size_t dim_;
};

}  // namespace

PYBIND11_MODULE(_ggnn, m) {
    m.doc() = "Hierarchical kNN-graph index for approximate nearest neighbor search";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<PyIndex>(m, "Index")
        .def_static(
            "build",
            [](const FloatArray& data, std::uint32_t k, std::uint32_t k_nn, std::optional<std::uint32_t> k_sym,
               std::uint32_t s, std::uint32_t g, std::uint32_t refinements, double tau_build, std::uint64_t seed,
               unsigned threads) {
                return PyIndex::build_from(data, make_build_config(k, k_nn, k_sym, s, g, refinements, tau_build, seed, threads));
            },
            py::arg("data"), py::arg("k") = 24, py::arg("k_nn") = 12, py::arg("k_sym") = py::none(), py::arg("s") = 32,
            py::arg("g") = 4, py::arg("refinements") = 2, py::arg("tau_build") = 0.5, py::arg("seed") = 7,
            py::arg("threads") = 1,
            "Build an index over an (n, d) float32 array.")
        .def_static(
            "load",
            [](const std::filesystem::path& path, const FloatArray& data) {
                Dataset d = to_dataset(data);
                Hierarchy h = load_index(path);
                if (h.bottom().node_count() != d.size() || h.dim != d.dim()) {
                    throw ConfigError("data shape does not match the saved index");
                }
                return PyIndex(std::move(d), std::move(h));
            },
            py::arg("path"), py::arg("data"), "Load a saved index; `data` must be the array it was built on.")
        .def(
            "search", &PyIndex::search, py::arg("queries"), py::arg("k") = 10, py::arg("tau") = 0.6,
            py::arg("max_iterations") = 4096, py::arg("threads") = 0,
            "Returns (ids, squared distances), both of shape (m, k), ascending by distance.")
        .def("save", [](const PyIndex& self, const std::filesystem::path& path) { save_index(self.hierarchy(), path); },
             py::arg("path"))
        .def("to_bytes",
             [](const PyIndex& self) {
                 const auto bytes = serialize_index(self.hierarchy());
                 return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
             })
        .def("neighbors", [](const PyIndex& self, NodeId id) {
                 if (id >= self.data().size()) throw py::index_error("node id out of range");
                 return self.hierarchy().bottom().neighbors(id);
             },
             py::arg("id"), "Bottom-layer neighbors of a dataset point: direct links, then inverse links.")
        .def("consensus", [](const PyIndex& self, std::size_t k, unsigned threads) {
                 const auto oracle = knn_graph_oracle(self.data(), k, threads);
                 return consensus_at_k(self.hierarchy().bottom(), oracle, k);
             },
             py::arg("k") = 10, py::arg("threads") = 0, "C@k of the bottom layer against the exact kNN graph.")
        .def_property_readonly("size", [](const PyIndex& self) { return self.data().size(); })
        .def_property_readonly("dim", [](const PyIndex& self) { return self.data().dim(); })
        .def_property_readonly("layer_sizes", [](const PyIndex& self) {
            std::vector<std::size_t> sizes;
            for (const auto& l : self.hierarchy().layers) sizes.push_back(l.node_count());
            return sizes;
        })
        .def_property_readonly("mean_sym_usage",
                               [](const PyIndex& self) { return mean_sym_usage(self.hierarchy().bottom()); })
        .def("__len__", [](const PyIndex& self) { return self.data().size(); });

    py::class_<PyShardedIndex>(m, "ShardedIndex")
        .def_static(
            "build",
            [](const FloatArray& data, std::size_t shard_size, std::uint32_t k, std::uint32_t k_nn,
               std::optional<std::uint32_t> k_sym, std::uint32_t s, std::uint32_t g, std::uint32_t refinements,
               double tau_build, std::uint64_t seed, unsigned threads) {
                const Dataset d = to_dataset(data);
                const auto cfg = make_build_config(k, k_nn, k_sym, s, g, refinements, tau_build, seed, threads);
                py::gil_scoped_release release;
                return PyShardedIndex(build_sharded(d, shard_size, cfg), d.size(), d.dim());
            },
            py::arg("data"), py::arg("shard_size"), py::arg("k") = 24, py::arg("k_nn") = 12,
            py::arg("k_sym") = py::none(), py::arg("s") = 32, py::arg("g") = 4, py::arg("refinements") = 2,
            py::arg("tau_build") = 0.5, py::arg("seed") = 7, py::arg("threads") = 1)
        .def_static(
            "load",
            [](const std::filesystem::path& dir, const FloatArray& data) {
                const Dataset d = to_dataset(data);
                return PyShardedIndex(load_sharded(dir, d), d.size(), d.dim());
            },
            py::arg("path"), py::arg("data"))
        .def("search", &PyShardedIndex::search, py::arg("queries"), py::arg("k") = 10, py::arg("tau") = 0.6,
             py::arg("max_iterations") = 4096, py::arg("threads") = 0)
        .def("save", [](const PyShardedIndex& self, const std::filesystem::path& dir) { save_sharded(self.get(), dir); },
             py::arg("path"))
        .def_property_readonly("shard_count", [](const PyShardedIndex& self) { return self.get().shards.size(); })
        .def_property_readonly("size", &PyShardedIndex::size)
        .def_property_readonly("dim", &PyShardedIndex::dim);

    m.def(
        "brute_force",
        [](const FloatArray& data, const FloatArray& queries, std::size_t k, unsigned threads) {
            const Dataset d = to_dataset(data);
            const Dataset q = to_dataset(queries);
            GroundTruth gt;
            {
                py::gil_scoped_release release;
                gt = brute_force_oracle(d, q, k, threads);
            }
            std::vector<QueryResult> as_results(gt.rows.size());
            for (std::size_t i = 0; i < gt.rows.size(); ++i) as_results[i].hits = gt.rows[i];
            return results_to_arrays(as_results, k);
        },
        py::arg("data"), py::arg("queries"), py::arg("k"), py::arg("threads") = 0,
        "Exact top-k by exhaustive scan: (ids, squared distances).");

    m.def(
        "recall_at",
        [](const IdArray& results, const IdArray& gt, std::size_t k) {
            return recall_at(ids_from_array(results), gt_from_array(gt), k);
        },
        py::arg("results"), py::arg("ground_truth"), py::arg("k"),
        "Fraction of queries whose true nearest neighbor is among the first k results.");

    m.def(
        "k_recall_at_k",
        [](const IdArray& results, const IdArray& gt, std::size_t k) {
            return k_recall_at_k(ids_from_array(results), gt_from_array(gt), k);
        },
        py::arg("results"), py::arg("ground_truth"), py::arg("k"));

    m.def(
        "load_vectors",
        [](const std::filesystem::path& path, const std::string& format) {
            return to_array(load_vectors(path, parse_vecs_format(format)));
        },
        py::arg("path"), py::arg("format") = "fvecs");

    m.def(
        "write_vectors",
        [](const std::filesystem::path& path, const FloatArray& data, const std::string& format) {
            write_vectors(path, to_dataset(data), parse_vecs_format(format));
        },
        py::arg("path"), py::arg("data"), py::arg("format") = "fvecs");

    m.def(
        "load_ids",
        [](const std::filesystem::path& path) {
            const auto t = load_ids(path);
            py::array_t<std::int64_t> out({t.rows, t.cols});
            std::copy(t.ids.begin(), t.ids.end(), out.mutable_data());
            return out;
        },
        py::arg("path"));
}
