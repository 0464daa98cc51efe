#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "emotionpush/corpus.hpp"
#include "emotionpush/embedding.hpp"
#include "emotionpush/ensemble.hpp"
#include "emotionpush/error.hpp"
#include "emotionpush/eval.hpp"
#include "emotionpush/mann_whitney.hpp"
#include "emotionpush/service.hpp"

namespace py = pybind11;
namespace ep = emotionpush;

namespace {

// JSON crosses the boundary as text and is decoded by the stdlib module.
py::object to_py(const nlohmann::ordered_json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }
py::object to_py(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

nlohmann::json from_py(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

ep::ensemble::TaxonomyConfig taxonomy_or_default(const std::optional<std::filesystem::path>& path) {
  return path ? ep::ensemble::load_taxonomy_config(*path) : ep::ensemble::default_taxonomy_config();
}

struct Model {
  std::shared_ptr<const ep::service::LoadedModel> loaded;

  static Model load(const std::filesystem::path& dir, const std::filesystem::path& embeddings) {
    auto ensemble = ep::ensemble::load_ensemble(dir);
    auto table = ep::embedding::load_word2vec(embeddings);
    return {std::make_shared<const ep::service::LoadedModel>(
        ep::service::LoadedModel{std::move(ensemble), std::move(table)})};
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "emotionpush core bindings";

  auto base = py::register_exception<ep::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ep::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ep::ChecksumError>(m, "ChecksumError", base.ptr());
  py::register_exception<ep::VersionError>(m, "VersionError", base.ptr());
  py::register_exception<ep::service::ModelUnavailable>(m, "ModelUnavailable", base.ptr());
  // also catchable as ValueError / KeyError
  static PyObject* invalid = PyErr_NewException("emotionpush._core.InvalidArgument",
                                                py::make_tuple(base, py::handle(PyExc_ValueError)).ptr(), nullptr);
  static PyObject* not_found = PyErr_NewException("emotionpush._core.NotFound",
                                                  py::make_tuple(base, py::handle(PyExc_KeyError)).ptr(), nullptr);
  m.attr("InvalidArgument") = py::handle(invalid);
  m.attr("NotFound") = py::handle(not_found);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ep::InvalidArgument& e) {
      PyErr_SetString(invalid, e.what());
    } catch (const ep::NotFound& e) {
      PyErr_SetString(not_found, e.what());
    }
  });

  // embeddings
  py::class_<ep::embedding::EmbeddingTable>(m, "EmbeddingTable")
      .def_property_readonly("dim", &ep::embedding::EmbeddingTable::dim)
      .def("__len__", &ep::embedding::EmbeddingTable::vocab_size)
      .def("__contains__", &ep::embedding::EmbeddingTable::contains)
      .def("fingerprint", &ep::embedding::EmbeddingTable::fingerprint)
      .def("vector",
           [](const ep::embedding::EmbeddingTable& t, const std::string& token) {
             const auto v = t.find(token);
             if (!v) throw ep::NotFound("token '" + token + "' not in vocabulary");
             return std::vector<float>(v->begin(), v->end());
           })
      .def("save", [](const ep::embedding::EmbeddingTable& t, const std::filesystem::path& p) {
        ep::embedding::save_word2vec(t, p);
      });
  m.def("load_word2vec", &ep::embedding::load_word2vec, py::arg("path"));
  m.def("tokenize", &ep::embedding::tokenize, py::arg("text"));
  m.def(
      "embed",
      [](const ep::embedding::EmbeddingTable& t, const std::string& text) {
        const auto f = ep::embedding::embed_text(t, text);
        return py::make_tuple(f.values, f.token_count);
      },
      py::arg("table"), py::arg("text"), "Mean token vector and the number of in-vocabulary tokens.");

  // corpus
  m.def(
      "synth",
      [](const py::dict& config, const std::filesystem::path& corpus_out, const std::filesystem::path& embeddings_out,
         const std::optional<std::filesystem::path>& taxonomy_out) {
        const auto cfg = ep::corpus::synth_config_from_json(from_py(config));
        const auto out = ep::corpus::synth_corpus(cfg);
        ep::corpus::save_corpus(out.corpus, corpus_out);
        ep::embedding::save_word2vec(out.table, embeddings_out);
        if (taxonomy_out) {
          std::ofstream(*taxonomy_out) << ep::ensemble::to_json(out.taxonomy).dump(2) << "\n";
        }
        return out.corpus.size();
      },
      py::arg("config"), py::arg("corpus_out"), py::arg("embeddings_out"), py::arg("taxonomy_out") = py::none(),
      "Writes a synthetic corpus and its embeddings; returns the document count.");
  m.def(
      "load_corpus",
      [](const std::filesystem::path& path, const std::optional<std::filesystem::path>& taxonomy) {
        const auto c = ep::corpus::load_corpus(path, taxonomy_or_default(taxonomy).taxonomy);
        py::list docs;
        for (const auto& d : c.documents) docs.append(py::make_tuple(d.id, d.text, d.fine_label));
        return docs;
      },
      py::arg("path"), py::arg("taxonomy") = py::none(), "List of (id, text, label) tuples.");

  // statistics
  m.def("auc", [](const std::vector<double>& scores, const std::vector<int>& labels) {
    return ep::eval::auc(scores, labels);
  }, py::arg("scores"), py::arg("labels"));
  m.def(
      "mann_whitney",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = ep::service::mann_whitney(a, b);
        py::dict d;
        d["u"] = r.u;
        d["p"] = r.p;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"));
  m.def("default_taxonomy", [] { return to_py(ep::ensemble::to_json(ep::ensemble::default_taxonomy_config())); });

  // training and evaluation
  m.def(
      "train",
      [](const std::filesystem::path& corpus_path, const std::filesystem::path& embeddings,
         const std::filesystem::path& out, const std::string& mode, std::size_t n_pos, std::size_t n_neg,
         std::size_t heldout, std::uint64_t seed, const std::optional<py::dict>& grid,
         const std::optional<std::filesystem::path>& taxonomy) {
        const auto config = taxonomy_or_default(taxonomy);
        ep::eval::ProtocolConfig protocol;
        protocol.mode = ep::ensemble::parse_mode(mode);
        protocol.sampling = ep::eval::SamplingPlan{n_pos, n_neg, heldout, seed};
        protocol.base.seed = seed;
        if (grid) protocol.grid = ep::eval::grid_spec_from_json(from_py(*grid));
        py::gil_scoped_release release;
        const auto corpus = ep::corpus::load_corpus(corpus_path, config.taxonomy);
        const auto table = ep::embedding::load_word2vec(embeddings);
        const auto model = ep::eval::tune_and_train(corpus, table, config, protocol);
        ep::ensemble::save_ensemble(model, out);
        return model.labels;
      },
      py::arg("corpus"), py::arg("embeddings"), py::arg("out"), py::arg("mode") = "fine40", py::arg("n_pos") = 800,
      py::arg("n_neg") = 800, py::arg("heldout") = 200, py::arg("seed") = 0, py::arg("grid") = py::none(),
      py::arg("taxonomy") = py::none(), "Tunes, trains and saves an ensemble; returns its labels.");
  m.def(
      "evaluate",
      [](const std::filesystem::path& model_dir, const std::filesystem::path& corpus_path,
         const std::filesystem::path& embeddings) {
        nlohmann::ordered_json doc;
        {
          py::gil_scoped_release release;
          const auto model = ep::ensemble::load_ensemble(model_dir);
          const auto corpus = ep::corpus::load_corpus(corpus_path, model.config.taxonomy);
          const auto table = ep::embedding::load_word2vec(embeddings);
          doc = ep::eval::evaluate_heldout(model, corpus, table).to_json();
        }
        return to_py(doc);
      },
      py::arg("model"), py::arg("corpus"), py::arg("embeddings"), "Held-out AUC report as a dict.");

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("model_dir"), py::arg("embeddings"))
      .def_property_readonly("labels", [](const Model& mo) { return mo.loaded->ensemble.labels; })
      .def_property_readonly("mode",
                             [](const Model& mo) { return std::string(ep::ensemble::to_string(mo.loaded->ensemble.mode)); })
      .def("classify", [](const Model& mo, const std::string& text) {
        return to_py(ep::ensemble::to_json(ep::ensemble::classify(mo.loaded->ensemble, mo.loaded->table, text)));
      }, py::arg("text"));

  // message service
  py::class_<ep::service::MessageService>(m, "MessageService")
      .def(py::init([](const std::optional<Model>& model, const std::optional<std::filesystem::path>& log) {
             return std::make_unique<ep::service::MessageService>(model ? model->loaded : nullptr, log);
           }),
           py::arg("model") = py::none(), py::arg("log") = py::none())
      .def_property_readonly("has_model", &ep::service::MessageService::has_model)
      .def("post_message",
           [](ep::service::MessageService& s, const std::string& sender, const std::string& receiver,
              const std::string& text) {
             const auto r = s.post_message(sender, receiver, text);
             py::dict d;
             d["message_id"] = r.message_id;
             d["emotion"] = r.emotion;
             d["color"] = r.color;
             return d;
           },
           py::arg("sender"), py::arg("receiver"), py::arg("text"))
      .def("mark_read", &ep::service::MessageService::mark_read, py::arg("id"))
      .def("respond",
           [](ep::service::MessageService& s, const std::string& id, const std::string& text) {
             return s.respond(id, text).message_id;
           },
           py::arg("id"), py::arg("text"))
      .def("message",
           [](const ep::service::MessageService& s, const std::string& id) -> py::object {
             const auto msg = s.message(id);
             return msg ? to_py(msg->to_json()) : py::object(py::none());
           },
           py::arg("id"))
      .def("pending_events",
           [](const ep::service::MessageService& s, const std::string& user, std::uint64_t after) {
             py::list out;
             for (const auto& ev : s.pending_events(user, after)) out.append(to_py(ev.to_json()));
             return out;
           },
           py::arg("user"), py::arg("after") = 0)
      .def("set_phase",
           [](ep::service::MessageService& s, bool color_feedback, const std::string& label) {
             s.set_phase(ep::service::PhaseConfig{color_feedback, label});
           },
           py::arg("color_feedback"), py::arg("phase_label"))
      .def("phase",
           [](const ep::service::MessageService& s) {
             const auto p = s.phase();
             return py::make_tuple(p.color_feedback, p.phase_label);
           })
      .def("latency_report", [](const ep::service::MessageService& s) { return to_py(s.latency_report().to_json()); });
}
