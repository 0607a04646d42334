#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ragscrape/chunker.hpp"
#include "ragscrape/embedder.hpp"
#include "ragscrape/ensemble.hpp"
#include "ragscrape/error.hpp"
#include "ragscrape/ingest.hpp"
#include "ragscrape/pipeline.hpp"
#include "ragscrape/vector_store.hpp"

namespace py = pybind11;
using namespace ragscrape;

namespace {

// nlohmann -> Python via the json module; keeps the wire format in one place.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Chunk chunk_from_py(const py::dict& d) {
  Chunk c;
  if (d.contains("source_url")) c.source_url = d["source_url"].cast<std::string>();
  if (d.contains("ordinal")) c.ordinal = d["ordinal"].cast<std::size_t>();
  if (d.contains("start")) c.span.start = d["start"].cast<std::size_t>();
  if (d.contains("end")) c.span.end = d["end"].cast<std::size_t>();
  if (d.contains("text")) c.text = d["text"].cast<std::string>();
  return c;
}

PipelineConfig prepare(const std::filesystem::path& config_path, bool offline) {
  auto config = load_config(config_path);
  if (offline) enforce_offline(config);
  return config;
}

}  // namespace

PYBIND11_MODULE(_ragscrape, m) {
  m.doc() = "Native core of ragscrape";

  static py::handle error_type = py::exception<Error>(m, "RagscrapeError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type(e.what());
      exc.attr("code") = error_code_name(e.code());
      exc.attr("status") = e.status();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "split_recursive",
      [](const std::string& text, std::optional<std::vector<std::string>> delimiters, std::size_t max_chunk_size,
         const std::string& source_url) {
        SplitConfig cfg = default_split_config();
        if (delimiters) cfg.delimiters = *delimiters;
        cfg.max_chunk_size = max_chunk_size;
        py::list out;
        for (const auto& c : split_recursive(text, cfg, source_url)) out.append(to_py(chunk_to_json(c)));
        return out;
      },
      py::arg("text"), py::arg("delimiters") = py::none(), py::arg("max_chunk_size") = 1000,
      py::arg("source_url") = "");

  m.def("extract_text", [](const std::string& html) { return extract_text(html); }, py::arg("html"));
  m.def("fnv1a64", [](const py::bytes& b) { return fnv1a64(std::string(b)); }, py::arg("data"));
  m.def(
      "embed_text",
      [](const std::string& text, std::size_t dims) {
        EmbedderSpec spec;
        spec.dims = dims;
        return embed_text(text, spec).values;
      },
      py::arg("text"), py::arg("dims") = 256);
  m.def("normalize_value", [](const std::string& raw) { return normalize_value(raw).norm; }, py::arg("raw"));

  // votes: (judge_model, chosen_model); candidates: (model_id, value or None).
  m.def(
      "tally",
      [](const std::vector<std::pair<std::string, std::string>>& votes,
         const std::vector<std::pair<std::string, std::optional<std::string>>>& candidates,
         const std::vector<std::string>& priority) {
        std::vector<VoteRecord> vs;
        for (const auto& [judge, chosen] : votes) vs.push_back({judge, chosen, {}, false});
        std::vector<CandidateExtraction> cs;
        for (const auto& [model, value] : candidates) {
          CandidateExtraction c;
          c.model_id = model;
          c.value = value;
          c.valid = value.has_value();
          cs.push_back(c);
        }
        const auto r = tally_votes(vs, cs, priority);
        py::dict out;
        out["value"] = r.final_value;
        out["decided_by"] = std::string(decided_by_name(r.decided_by));
        return out;
      },
      py::arg("votes"), py::arg("candidates"), py::arg("priority"));

  py::class_<VectorStore>(m, "VectorStore")
      .def(py::init<>())
      .def(
          "add",
          [](VectorStore& s, const py::dict& chunk, std::vector<float> embedding) {
            return s.add(chunk_from_py(chunk), EmbeddingVector{std::move(embedding)});
          },
          py::arg("chunk"), py::arg("embedding"))
      .def(
          "search",
          [](const VectorStore& s, std::vector<float> query, std::size_t k) {
            py::list out;
            for (const auto& h : s.search(EmbeddingVector{std::move(query)}, k)) out.append(to_py(search_hit_to_json(h)));
            return out;
          },
          py::arg("query"), py::arg("k"))
      .def("save", &VectorStore::save, py::arg("path"))
      .def_static("load", &VectorStore::load, py::arg("path"))
      .def("__len__", &VectorStore::size)
      .def_property_readonly("dims", &VectorStore::dims);

  m.def(
      "index",
      [](const std::filesystem::path& config_path, std::size_t jobs, bool offline) {
        const auto config = prepare(config_path, offline);
        py::gil_scoped_release release;
        const auto stats = cmd_index(config, jobs);
        py::gil_scoped_acquire acquire;
        return to_py(stats.to_json());
      },
      py::arg("config_path"), py::arg("jobs") = 1, py::arg("offline") = false);

  m.def(
      "query",
      [](const std::filesystem::path& index_path, const std::string& text, std::size_t k,
         std::optional<std::string> url) {
        py::list out;
        for (const auto& h : cmd_query(index_path, text, k, url)) out.append(to_py(search_hit_to_json(h)));
        return out;
      },
      py::arg("index_path"), py::arg("text"), py::arg("k") = 5, py::arg("url") = py::none());

  m.def(
      "extract",
      [](const std::filesystem::path& config_path, bool reindex, std::size_t jobs, bool offline) {
        const auto config = prepare(config_path, offline);
        ExtractOptions options;
        options.reindex = reindex;
        options.jobs = jobs;
        ExtractRun run;
        {
          py::gil_scoped_release release;
          run = cmd_extract(config, options);
        }
        py::list out;
        for (const auto& r : run.records) out.append(to_py(r.to_json()));
        return out;
      },
      py::arg("config_path"), py::arg("reindex") = false, py::arg("jobs") = 1, py::arg("offline") = false);

  m.def(
      "evaluate",
      [](const std::filesystem::path& config_path, const std::filesystem::path& truth_path, bool reindex,
         std::size_t jobs, bool offline) {
        const auto config = prepare(config_path, offline);
        const auto truth = load_ground_truth(truth_path);
        ExtractOptions options;
        options.reindex = reindex;
        options.jobs = jobs;
        nlohmann::json report;
        {
          py::gil_scoped_release release;
          report = cmd_eval(config, truth, options).to_json();
        }
        return to_py(report);
      },
      py::arg("config_path"), py::arg("ground_truth"), py::arg("reindex") = false, py::arg("jobs") = 1,
      py::arg("offline") = false);
}
