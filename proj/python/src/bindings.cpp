// Python bindings. Structured results cross the boundary as plain dicts and
// lists with the same field names as the HTTP API.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "r0scope/analytics.hpp"
#include "r0scope/endpoint.hpp"
#include "r0scope/error.hpp"
#include "r0scope/extraction.hpp"
#include "r0scope/gazetteer.hpp"
#include "r0scope/ingest.hpp"
#include "r0scope/json_io.hpp"
#include "r0scope/normalize.hpp"
#include "r0scope/pipeline.hpp"
#include "r0scope/service.hpp"
#include "r0scope/store.hpp"
#include "r0scope/text.hpp"

namespace py = pybind11;
using namespace r0scope;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<ResearchQuestion> question_arg(const std::optional<std::string>& rq) {
  if (!rq) return std::nullopt;
  auto q = parse_research_question(*rq);
  if (!q) throw Error(ErrorCode::InvalidParameter, "rq must be one of rq1..rq4");
  return q;
}

// Owns a store handle; every query reads a fresh snapshot.
class PyStore {
 public:
  explicit PyStore(const std::string& path) : store_(std::make_unique<Store>(Store::open(path))) {}
  Store& get() { return *store_; }

  py::object stats() const { return to_py(stats_snapshot(store_->snapshot())); }
  py::object rq1(std::optional<double> lo, std::optional<double> hi) const {
    return to_py(rq1_max_r0(store_->snapshot(), lo, hi));
  }
  py::object rq2(const std::string& disease) const {
    return to_py(rq2_studies_by_location(store_->snapshot(), canonical_disease(disease)));
  }
  py::object rq3(const std::string& disease) const {
    return to_py(rq3_r0_range_by_location(store_->snapshot(), canonical_disease(disease)));
  }
  py::object rq4(const std::vector<std::string>& diseases) const {
    std::vector<std::string> keys;
    for (const auto& d : diseases) keys.push_back(canonical_disease(d));
    return to_py(rq4_map_points(store_->snapshot(), keys));
  }
  py::object drill(const std::string& disease, std::optional<std::string> country,
                   std::optional<std::string> rq) const {
    return to_py(drilldown(store_->snapshot(), {canonical_disease(disease), std::move(country), question_arg(rq)}));
  }
  py::object papers(std::size_t page, std::size_t size, std::optional<std::string> q) const {
    auto result = store_->list_papers(page, size, q);
    return to_py(json{{"total", result.total}, {"rows", result.rows}});
  }
  py::object summaries() const { return to_py(store_->snapshot().summaries); }
  std::optional<std::string> watermark() const {
    auto wm = store_->watermark();
    if (!wm) return std::nullopt;
    return format_timestamp(*wm);
  }
  std::string state_hash() const { return store_->state_hash(); }
  std::set<std::string, std::less<>> known_pmids() const { return store_->known_pmids(); }

  py::object load(const py::list& papers, const py::list& summaries) {
    UpsertBatch batch;
    for (const auto& p : papers) batch.papers.push_back(from_py(p).get<PaperRecord>());
    for (const auto& s : summaries) batch.summaries.push_back(from_py(s).get<StructuredSummary>());
    return to_py(store_->upsert(batch));
  }

  py::tuple api_get(const std::string& path, const std::map<std::string, std::string>& params) const {
    ApiServer api(*store_, ApiConfig{});
    QueryParams qp(params.begin(), params.end());
    auto r = api.handle(path, qp);
    return py::make_tuple(r.status, to_py(r.body));
  }

 private:
  std::unique_ptr<Store> store_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured R0 estimates: parsing, storage and analytics";

  // Library errors surface as r0scope.Error with .code set to the error name.
  static PyObject* error_type = PyErr_NewException("r0scope._core.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::handle(error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("parse_r0", [](const std::string& text) {
    auto r = parse_r0(text);
    return py::make_tuple(r.min, r.max);
  }, py::arg("text"), "R0 text to (r0_min, r0_max).");
  m.def("format_r0", [](double lo, double hi) { return format_r0({lo, hi}); }, py::arg("r0_min"), py::arg("r0_max"));
  m.def("parse_ci", [](const std::string& text) -> py::object {
    auto ci = parse_ci(text);
    return ci ? to_py(*ci) : py::none();
  }, py::arg("text"), "CI text to a dict, or None when the text marks an absent interval.");
  m.def("canonical_disease", [](const std::string& text) { return canonical_disease(text); }, py::arg("text"));
  m.def("build_search_query", [](std::optional<std::string> from, std::optional<std::string> to) {
    if (from.has_value() != to.has_value()) throw Error(ErrorCode::InvalidParameter, "give both date bounds or neither");
    std::optional<DateWindow> window;
    if (from) window = DateWindow{*from, *to};
    return build_search_query(window);
  }, py::arg("date_from") = py::none(), py::arg("date_to") = py::none());
  m.def("build_prompt", [](const std::string& title, const std::string& abstract) {
    PaperRecord p;
    p.title = title;
    p.abstract = abstract;
    return build_prompt(p);
  }, py::arg("title"), py::arg("abstract"));
  m.def("parse_response", [](const std::string& pmid, const std::string& text) {
    return to_py(parse_response(pmid, text));
  }, py::arg("pmid"), py::arg("text"));
  m.def("pubmed_url", [](const std::string& pmid) { return pubmed_url(pmid); }, py::arg("pmid"));
  m.def("parse_pubmed_csv", [](const std::string& path) {
    auto result = parse_pubmed_csv(read_file(path));
    return to_py(json{{"records", result.records}, {"errors", result.errors}});
  }, py::arg("path"), "Parse a PubMed CSV export into {records, errors}.");

  py::class_<Gazetteer>(m, "Gazetteer")
      .def_static("load", &Gazetteer::load_file, py::arg("path"))
      .def("resolve", [](const Gazetteer& g, const std::string& text) -> py::object {
        auto loc = resolve_location(text, g);
        return loc ? to_py(*loc) : py::none();
      }, py::arg("text"))
      .def("__len__", &Gazetteer::size);

  py::class_<PyStore>(m, "Store")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("stats", &PyStore::stats)
      .def("rq1", &PyStore::rq1, py::arg("r0_min") = py::none(), py::arg("r0_max") = py::none())
      .def("rq2", &PyStore::rq2, py::arg("disease"))
      .def("rq3", &PyStore::rq3, py::arg("disease"))
      .def("rq4", &PyStore::rq4, py::arg("diseases"))
      .def("drilldown", &PyStore::drill, py::arg("disease"), py::arg("country") = py::none(),
           py::arg("rq") = py::none())
      .def("papers", &PyStore::papers, py::arg("page") = 1, py::arg("size") = 50, py::arg("q") = py::none())
      .def("summaries", &PyStore::summaries)
      .def("watermark", &PyStore::watermark)
      .def("state_hash", &PyStore::state_hash)
      .def("known_pmids", &PyStore::known_pmids)
      .def("load", &PyStore::load, py::arg("papers"), py::arg("summaries") = py::list())
      .def("api_get", &PyStore::api_get, py::arg("path"), py::arg("params") = std::map<std::string, std::string>{},
           "Dispatch a GET to the JSON API without a socket; returns (status, body).");

  m.def("run_pipeline_once", [](PyStore& store, const std::string& drop_dir, const Gazetteer& gazetteer,
                                const std::string& extractor, std::optional<std::string> endpoint,
                                std::size_t max_batch) {
    SchedulerConfig cfg;
    cfg.max_batch = max_batch;
    auto kind = parse_extractor_kind(extractor);
    if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown extractor " + extractor);
    CsvDropSource source(drop_dir);
    std::unique_ptr<Extractor> ex;
    if (*kind == ExtractorKind::RuleBased) {
      ex = std::make_unique<RuleBasedExtractor>(&gazetteer);
    } else {
      auto ec = EndpointConfig::from_env();
      if (endpoint) ec.url = *endpoint;
      if (ec.url.empty()) throw Error(ErrorCode::InvalidConfig, "endpoint extractor needs an endpoint URL");
      ex = std::make_unique<EndpointExtractor>(ec);
    }
    PipelineRunReport report;
    {
      py::gil_scoped_release release;
      PipelineContext ctx{store.get(), source, *ex, gazetteer};
      report = run_pipeline_once(cfg, ctx);
    }
    return to_py(report);
  }, py::arg("store"), py::arg("drop_dir"), py::arg("gazetteer"), py::arg("extractor") = "rule-based",
     py::arg("endpoint") = py::none(), py::arg("max_batch") = 500,
     "One pipeline pass over the CSV files in drop_dir; returns the run report.");
}
