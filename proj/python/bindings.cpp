#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "pragsim/classify.hpp"
#include "pragsim/error.hpp"
#include "pragsim/io.hpp"
#include "pragsim/parallel.hpp"
#include "pragsim/retrieval.hpp"
#include "pragsim/simcore.hpp"
#include "pragsim/synth.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace pragsim;

namespace {

// Reports cross the boundary as JSON text; the Python package decodes them.
SimilarityConfig make_config(const EmbeddingDataset& ds, int layer, std::optional<std::vector<std::size_t>> mask,
                             bool mean_center) {
  FeatureMask m = mask ? FeatureMask::of(*mask) : FeatureMask::all();
  SimilarityConfig cfg;
  if (mean_center) {
    cfg = centered_config(ds, layer, std::move(m));
  } else {
    cfg.layer_index = layer;
    cfg.mask = std::move(m);
  }
  cfg.validate(ds);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pragsim native core";

  m.attr("Error") = py::reinterpret_steal<py::object>(PyErr_NewException("pragsim._core.Error", PyExc_ValueError, nullptr));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("pragsim._core").attr("Error");
      py::object exc = type(py::str(e.what()));
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<EmbeddingDataset>(m, "Dataset")
      .def_static("load", &load_dataset, "dir"_a)
      .def("save", [](const EmbeddingDataset& ds, const std::filesystem::path& dir) { save_dataset(ds, dir); }, "dir"_a)
      .def("__len__", &EmbeddingDataset::size)
      .def("__eq__", [](const EmbeddingDataset& a, const EmbeddingDataset& b) { return a == b; })
      .def_property_readonly("name", &EmbeddingDataset::name)
      .def_property_readonly("layer_count", &EmbeddingDataset::layer_count)
      .def_property_readonly("ids", [](const EmbeddingDataset& ds) {
        std::vector<std::string> ids;
        for (const auto& u : ds.utterances()) ids.push_back(u.utterance_id);
        return ids;
      })
      .def_property_readonly("speakers", &EmbeddingDataset::speakers)
      .def("speaker_label", &EmbeddingDataset::speaker_label, "speaker_id"_a)
      .def("duration", [](const EmbeddingDataset& ds, const std::string& id) { return ds.utterance(id).duration_s; })
      .def("embedding", [](const EmbeddingDataset& ds, int layer, const std::string& id) {
        auto row = ds.embedding(layer, id);
        return py::array_t<float>(static_cast<py::ssize_t>(row.size()), row.data());
      }, "layer"_a, "id"_a)
      .def("summary_json", [](const EmbeddingDataset& ds) { return io::dataset_summary(ds).dump(); });

  m.def("synthesize", [](const std::string& spec_json) {
    return gen_synthetic(io::synth_spec_from_json(nlohmann::json::parse(spec_json)));
  }, "spec_json"_a);

  m.def("similarity", [](const EmbeddingDataset& ds, const std::string& a, const std::string& b, int layer,
                         std::optional<std::vector<std::size_t>> mask, bool mean_center) {
    return similarity(ds, make_config(ds, layer, std::move(mask), mean_center), a, b);
  }, "dataset"_a, "a"_a, "b"_a, "layer"_a, "mask"_a = py::none(), "mean_center"_a = false);

  m.def("top_k_json", [](const EmbeddingDataset& ds, const std::string& query, std::size_t k, int layer,
                         bool exclude_same_speaker) {
    RetrievalConstraints rc;
    rc.exclude_same_speaker = exclude_same_speaker;
    return io::to_json(top_k_similar(ds, make_config(ds, layer, std::nullopt, false), query, k, rc)).dump();
  }, "dataset"_a, "query"_a, "k"_a, "layer"_a, "exclude_same_speaker"_a = false);

  m.def("stimuli_json", [](const EmbeddingDataset& ds, const std::string& query, int layer) {
    return io::to_json(percentile_candidates(ds, make_config(ds, layer, std::nullopt, false), query)).dump();
  }, "dataset"_a, "query"_a, "layer"_a);

  m.def("loso_json", [](const EmbeddingDataset& ds, std::size_t k, std::vector<int> layers) {
    KnnConfig cfg;
    cfg.k = k;
    cfg.layers = std::move(layers);
    return io::to_json(loso_evaluate(ds, cfg)).dump();
  }, "dataset"_a, "k"_a = 7, "layers"_a = std::vector<int>{});

  m.def("length_baseline_json", [](const EmbeddingDataset& ds, const std::string& td, const std::string& target,
                                   double ratio) {
    return io::to_json(length_baseline(ds, td, target, ratio)).dump();
  }, "dataset"_a, "td_label"_a = "TD", "target_label"_a = "SLI", "ratio"_a = 0.70);

  m.def("set_threads", &set_thread_count, "threads"_a);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, "args"_a);
}
