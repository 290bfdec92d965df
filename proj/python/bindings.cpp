#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "affdim/attractor.hpp"
#include "affdim/criteria.hpp"
#include "affdim/ergodic.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace affdim;

namespace {

using Rows = std::vector<std::vector<double>>;

MatrixTuple make_tuple(const std::vector<Rows>& matrices) {
  std::vector<Matrix> maps;
  for (const Rows& rows : matrices) maps.push_back(Matrix::from_rows(rows));
  return MatrixTuple(std::move(maps));
}

MeasureSpec make_measure(const std::optional<std::vector<double>>& p, const std::optional<Rows>& transition,
                         std::size_t m) {
  if (!p) return MeasureSpec::uniform(m);
  if (transition) return MeasureSpec::markov(*p, Matrix::from_rows(*transition));
  return MeasureSpec::bernoulli(*p);
}

PressureConfig make_config(const std::optional<std::vector<std::size_t>>& schedule, double tolerance,
                           std::optional<std::size_t> depth) {
  PressureConfig cfg;
  if (schedule) cfg.schedule = *schedule;
  cfg.tolerance = tolerance;
  cfg.depth = depth;
  return cfg;
}

py::dict estimate_dict(const DimensionEstimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["bracket"] = py::make_tuple(e.lo, e.hi);
  d["n"] = e.n;
  d["iterations"] = e.iterations;
  d["heuristic_halfwidth"] = e.heuristic_halfwidth;
  d["flagged"] = e.flagged;
  d["clamped"] = e.clamped;
  return d;
}

PointCloud cloud_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& points) {
  if (points.ndim() != 2) throw py::value_error("points must be a 2-d array");
  PointCloud cloud;
  cloud.dim = static_cast<std::size_t>(points.shape(1));
  cloud.coords.assign(points.data(), points.data() + points.size());
  return cloud;
}

}  // namespace

PYBIND11_MODULE(_affdim, m) {
  m.doc() = "Dimensions of self-affine sets, measures and their projections";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_input) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  m.def("singular_values", [](const Rows& a) { return singular_values(Matrix::from_rows(a)); }, py::arg("matrix"));
  m.def("svf", [](const Rows& a, double s) { return svf(Matrix::from_rows(a), s); }, py::arg("matrix"), py::arg("s"));
  m.def("moran_root", [](const std::vector<double>& r) { return moran_root(r); }, py::arg("ratios"));

  m.def(
      "affinity_dim",
      [](const std::vector<Rows>& matrices, std::optional<std::vector<std::size_t>> schedule, double tolerance) {
        return estimate_dict(affinity_dim(make_tuple(matrices), make_config(schedule, tolerance, std::nullopt)));
      },
      py::arg("matrices"), py::arg("schedule") = py::none(), py::arg("tolerance") = 1e-4);

  m.def(
      "proj_affinity_dim",
      [](const std::vector<Rows>& matrices, const Rows& basis, std::optional<std::vector<std::size_t>> schedule,
         double tolerance, std::optional<std::size_t> depth) {
        const MatrixTuple t = make_tuple(matrices);
        return estimate_dict(proj_affinity_dim(t, Subspace::span(basis), make_config(schedule, tolerance, depth)));
      },
      py::arg("matrices"), py::arg("basis"), py::arg("schedule") = py::none(), py::arg("tolerance") = 1e-4,
      py::arg("depth") = py::none());

  m.def(
      "entropy",
      [](const std::vector<double>& p, std::optional<Rows> transition) {
        return entropy(make_measure(p, transition, p.size()));
      },
      py::arg("p"), py::arg("transition") = py::none());

  m.def(
      "lyapunov",
      [](const std::vector<Rows>& matrices, std::optional<std::vector<double>> p, std::optional<Rows> transition,
         std::size_t n, std::size_t trials, std::uint64_t seed) {
        const MatrixTuple t = make_tuple(matrices);
        const MeasureSpec mu = make_measure(p, transition, t.m());
        MonteCarloOptions mc;
        mc.n = n;
        mc.trials = trials;
        mc.seed = seed;
        const LyapunovSpectrum s = lyapunov_spectrum(t, mu, mc);
        py::dict d;
        d["exponents"] = s.exponents;
        d["stderr"] = s.stderr_;
        d["mode"] = to_string(s.mode);
        d["lyapunov_dim"] = lyapunov_dim(mu, s);
        return d;
      },
      py::arg("matrices"), py::arg("p") = py::none(), py::arg("transition") = py::none(), py::arg("n") = 2000,
      py::arg("trials") = 100, py::arg("seed") = 1);

  m.def(
      "s_extremes",
      [](const std::vector<Rows>& matrices, const Rows& basis, std::optional<std::vector<double>> p,
         std::optional<Rows> transition, std::size_t samples, std::size_t length, std::uint64_t seed) {
        const MatrixTuple t = make_tuple(matrices);
        SExtremesOptions opts;
        opts.samples = samples;
        opts.length = length;
        opts.seed = seed;
        const SProfile profile = s_extremes(make_measure(p, transition, t.m()), t, Subspace::span(basis), opts);
        py::list clusters;
        for (const SCluster& c : profile.clusters) clusters.append(py::make_tuple(c.center, c.count));
        py::dict d;
        d["s_lower"] = profile.s_lower;
        d["s_upper"] = profile.s_upper;
        d["clusters"] = clusters;
        return d;
      },
      py::arg("matrices"), py::arg("basis"), py::arg("p") = py::none(), py::arg("transition") = py::none(),
      py::arg("samples") = 200, py::arg("length") = 2000, py::arg("seed") = 1);

  m.def(
      "pivot_vector",
      [](const Rows& w_basis, const Rows& basis) {
        std::vector<Vector> columns(basis.begin(), basis.end());
        return pivot_vector(Subspace::span(w_basis), Matrix::from_columns(columns)).positions;
      },
      py::arg("w_basis"), py::arg("basis"));

  m.def(
      "algebra_irreducible",
      [](const std::vector<Rows>& matrices, std::size_t q) { return algebra_irreducible(make_tuple(matrices), q); },
      py::arg("matrices"), py::arg("q"));

  m.def(
      "chaos_game",
      [](const std::vector<Rows>& matrices, const Rows& translations, std::optional<std::vector<double>> p,
         std::optional<Rows> transition, std::size_t points, std::uint64_t seed) {
        const MatrixTuple t = make_tuple(matrices);
        const IFSInstance ifs(t, std::vector<Vector>(translations.begin(), translations.end()));
        ChaosOptions opts;
        opts.points = points;
        opts.seed = seed;
        PointCloud cloud;
        {
          py::gil_scoped_release release;
          cloud = chaos_game(ifs, make_measure(p, transition, t.m()), opts);
        }
        py::array_t<double> out({cloud.size(), cloud.dim});
        std::copy(cloud.coords.begin(), cloud.coords.end(), out.mutable_data());
        return out;
      },
      py::arg("matrices"), py::arg("translations"), py::arg("p") = py::none(), py::arg("transition") = py::none(),
      py::arg("points") = 100000, py::arg("seed") = 1);

  m.def(
      "box_count_dim",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points, std::vector<double> scales) {
        const BoxCountResult r = box_count_dim(cloud_from_array(points), std::move(scales));
        py::dict d;
        d["estimate"] = r.estimate;
        d["r_squared"] = r.r_squared;
        py::list counts;
        for (const ScaleCount& sc : r.counts) counts.append(py::make_tuple(sc.scale, sc.count));
        d["counts"] = counts;
        d["warning"] = r.warning;
        return d;
      },
      py::arg("points"), py::arg("scales") = std::vector<double>{});

  m.def(
      "_run_json",
      [](const std::string& command, const std::string& config, std::optional<std::uint64_t> seed,
         std::optional<std::size_t> q) {
        const cli::JobConfig job = command == "example-8-1" ? cli::example_8_1_config()
                                                            : cli::parse_job_config(nlohmann::json::parse(config));
        cli::RunOptions options;
        options.seed = seed;
        options.q = q;
        std::vector<cli::CsvTable> tables;
        return cli::run_command(command, job, options, tables).dump();
      },
      py::arg("command"), py::arg("config") = "{}", py::arg("seed") = py::none(), py::arg("q") = py::none());
}
