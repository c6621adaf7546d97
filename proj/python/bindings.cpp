#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "dspl/cli.hpp"
#include "dspl/inference.hpp"
#include "dspl/oracle.hpp"
#include "dspl/trainer.hpp"

namespace py = pybind11;
using namespace dspl;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

Term pick_query(const Model& m, const std::string& query) {
  if (query.empty()) {
    if (m.ast.queries.empty()) fail(ErrorCode::ValidationError, "program has no query");
    return m.ast.queries.front();
  }
  for (const auto& q : m.ast.queries) {
    if (to_string(q) == query) return q;
  }
  return parse_term(query);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the dspl engine";

  static py::exception<Error> error(m, "DsplError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      exc.attr("line") = e.pos().line;
      exc.attr("column") = e.pos().column;
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<ParameterStore>(m, "ParameterStore")
      .def("to_json", [](const ParameterStore& s) { return dump(s.to_json()); })
      .def_static("from_json", [](const std::string& text) { return ParameterStore::from_json(nlohmann::json::parse(text)); })
      .def("save", &ParameterStore::save)
      .def_static("load", &ParameterStore::load)
      .def("names", [](const ParameterStore& s) {
        std::vector<std::string> out;
        for (const auto& [name, t] : s.tensors()) out.push_back(name);
        return out;
      })
      .def("values", [](const ParameterStore& s, const std::string& name) { return s.get(name).values; })
      .def("set_values", [](ParameterStore& s, const std::string& name, const std::vector<double>& v) {
        auto& t = s.get_mut(name);
        if (v.size() != t.values.size()) fail(ErrorCode::ShapeMismatch, "'" + name + "' has a different size");
        t.values = v;
      });

  py::class_<Model>(m, "Model")
      .def_static("from_source", &Model::from_source, py::arg("source"), py::arg("base_dir") = "")
      .def_static("load", &Model::load)
      .def_property_readonly("queries", [](const Model& md) {
        std::vector<std::string> out;
        for (const auto& q : md.ast.queries) out.push_back(to_string(q));
        return out;
      })
      .def("init_parameters", [](const Model& md, std::uint64_t seed) { return init_parameters(md.ast, seed); },
           py::arg("seed") = 0)
      .def("pretty", [](const Model& md) { return pretty_print(md.ast); });

  m.def(
      "query",
      [](const Model& md, const std::string& query, const ParameterStore* store, std::size_t n_samples,
         std::uint64_t seed, const std::string& mode, double beta) {
        InferenceConfig cfg;
        cfg.n_samples = n_samples;
        cfg.seed = seed;
        cfg.mode = mode_from_name(mode);
        cfg.beta = beta;
        const ParameterStore own = store ? ParameterStore{} : init_parameters(md.ast, 0);
        const CompiledQuery q = compile_query(md, pick_query(md, query));
        py::gil_scoped_release release;
        return dump(result_to_json(infer(md, q, store ? *store : own, cfg)));
      },
      py::arg("model"), py::arg("query") = "", py::arg("params") = nullptr, py::arg("n_samples") = 10000,
      py::arg("seed") = 0, py::arg("mode") = "hard", py::arg("beta") = 50.0);

  m.def(
      "gradients",
      [](const Model& md, const std::string& query, const ParameterStore& store, std::size_t n_samples,
         std::uint64_t seed, const std::string& mode, double beta) {
        InferenceConfig cfg;
        cfg.n_samples = n_samples;
        cfg.seed = seed;
        cfg.mode = mode_from_name(mode);
        cfg.beta = beta;
        const CompiledQuery q = compile_query(md, pick_query(md, query));
        const GradResult g = grad_query(md, q, store, cfg);
        return std::make_pair(g.result.estimate, g.gradients);
      },
      py::arg("model"), py::arg("query"), py::arg("params"), py::arg("n_samples") = 1000, py::arg("seed") = 0,
      py::arg("mode") = "soft", py::arg("beta") = 50.0);

  m.def(
      "train",
      [](const Model& md, const std::vector<std::string>& examples, ParameterStore& store, std::size_t epochs,
         double lr, const std::string& optimizer, std::size_t batch, std::size_t n_samples, std::uint64_t seed,
         const std::string& loss, const std::string& mode, const std::string& schedule) {
        std::vector<TrainingExample> data;
        for (const auto& e : examples) data.push_back(parse_example(nlohmann::json::parse(e)));
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.optimizer.lr = lr;
        cfg.optimizer.kind = optimizer_from_name(optimizer);
        cfg.batch = batch;
        cfg.n_samples = n_samples;
        cfg.seed = seed;
        cfg.loss = loss_from_name(loss);
        cfg.mode = mode_from_name(mode);
        cfg.schedule = parse_schedule(schedule);
        const TrainReport r = train(md, data, cfg, store);
        return dump(report_to_json(r, cfg, md, store));
      },
      py::arg("model"), py::arg("examples"), py::arg("params"), py::arg("epochs") = 1, py::arg("lr") = 1e-3,
      py::arg("optimizer") = "adamax", py::arg("batch") = 10, py::arg("n_samples") = 1000, py::arg("seed") = 0,
      py::arg("loss") = "bce", py::arg("mode") = "st", py::arg("schedule") = "constant:50");

  m.def(
      "reference_probability",
      [](const Model& md, const std::string& query, const ParameterStore* store) {
        const ParameterStore own = store ? ParameterStore{} : init_parameters(md.ast, 0);
        oracle::Options opt;
        opt.store = store ? store : &own;
        opt.data = &md.data;
        const oracle::Result r = oracle::probability(md.ast, pick_query(md, query), opt);
        return std::make_tuple(r.value, r.error, r.exact);
      },
      py::arg("model"), py::arg("query") = "", py::arg("params") = nullptr);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "dspl");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::make_tuple(code, out.str(), err.str());
  });
}
