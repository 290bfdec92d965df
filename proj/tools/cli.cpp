#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"

#include "affdim/criteria.hpp"

namespace affdim::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& message) {
  fail(ErrorCode::invalid_input, path + ": " + message);
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

std::size_t count_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) bad(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

Vector vector_at(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  Vector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

Matrix square_matrix_at(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array");
  if (j[0].is_number()) {
    const Vector flat = vector_at(j, path);
    const auto d = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
    if (d * d != flat.size()) bad(path, "flat row-major array length " + std::to_string(flat.size()) + " is not a square");
    Matrix a(d, d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) a(r, c) = flat[r * d + c];
    return a;
  }
  std::vector<Vector> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    rows.push_back(vector_at(j[r], path + "[" + std::to_string(r) + "]"));
    if (rows.back().size() != j.size())
      bad(path + "[" + std::to_string(r) + "]", "row has " + std::to_string(rows.back().size()) + " entries, expected " +
                                                    std::to_string(j.size()));
  }
  return Matrix::from_rows(rows);
}

Matrix stochastic_matrix_at(const json& j, const std::string& path, std::size_t m) {
  if (!j.is_array() || j.size() != m) bad(path, "expected " + std::to_string(m) + " rows");
  return square_matrix_at(j, path);
}

MatrixTuple parse_tuple(const json& j) {
  if (!j.is_array()) bad("matrices", "expected an array of matrices");
  if (j.size() < 2) bad("matrices", "need at least two matrices");
  std::vector<Matrix> maps;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "matrices[" + std::to_string(i) + "]";
    Matrix a = square_matrix_at(j[i], path);
    if (!maps.empty() && a.rows() != maps.front().rows())
      bad(path, "is " + std::to_string(a.rows()) + "x" + std::to_string(a.rows()) + " but matrices[0] is " +
                    std::to_string(maps.front().rows()) + "x" + std::to_string(maps.front().rows()));
    if (a.rows() > kMaxDimension) bad(path, "dimension exceeds " + std::to_string(kMaxDimension));
    const double n = spectral_norm(a);
    if (!(n < 1.0)) bad(path, "not contracting (spectral norm " + std::to_string(n) + ")");
    if (determinant(a) == 0.0) bad(path, "not invertible");
    maps.push_back(std::move(a));
  }
  try {
    return MatrixTuple(std::move(maps));
  } catch (const Error& e) {
    bad("matrices", e.what());
  }
}

MeasureSpec parse_measure(const json& j, std::size_t m) {
  if (!j.is_object()) bad("measure", "expected an object");
  const std::string type = j.value("type", std::string("bernoulli"));
  if (!j.contains("p")) bad("measure.p", "missing");
  const Vector p = vector_at(j.at("p"), "measure.p");
  if (p.size() != m) bad("measure.p", "has " + std::to_string(p.size()) + " entries, expected " + std::to_string(m));
  try {
    if (type == "bernoulli") return MeasureSpec::bernoulli(p);
    if (type == "markov") {
      if (!j.contains("P")) bad("measure.P", "missing");
      return MeasureSpec::markov(p, stochastic_matrix_at(j.at("P"), "measure.P", m));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::invalid_input) throw;
    const std::string what = e.what();
    if (what.rfind("measure", 0) == 0) throw;
    bad("measure", what);
  }
  bad("measure.type", "unknown measure type '" + type + "' (expected bernoulli or markov)");
}

Subspace parse_subspace(const json& j, std::size_t d) {
  const json& basis = j.is_object() ? j.value("basis", json()) : j;
  if (!basis.is_array() || basis.empty()) bad("subspace.basis", "expected a non-empty array of vectors");
  std::vector<Vector> columns;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::string path = "subspace.basis[" + std::to_string(i) + "]";
    columns.push_back(vector_at(basis[i], path));
    if (columns.back().size() != d) bad(path, "has length " + std::to_string(columns.back().size()) + ", expected " + std::to_string(d));
  }
  Subspace w = Subspace::span(columns);
  if (w.dim() != columns.size()) bad("subspace.basis", "vectors are linearly dependent");
  return w;
}

std::vector<std::size_t> schedule_from_max(std::size_t max_n) {
  std::vector<std::size_t> out;
  for (std::size_t n : {max_n / 4, max_n / 2, max_n})
    if (n > 0 && (out.empty() || out.back() != n)) out.push_back(n);
  return out;
}

PressureConfig pressure_config(const JobConfig& config, const RunOptions& options) {
  PressureConfig cfg;
  cfg.schedule = options.max_n ? schedule_from_max(*options.max_n) : config.schedule;
  cfg.depth = options.depth ? options.depth : config.depth;
  cfg.tolerance = options.tolerance.value_or(config.tolerance);
  cfg.threads = options.threads;
  if (options.budget) cfg.budget = *options.budget;
  return cfg;
}

const MatrixTuple& need_tuple(const JobConfig& config) {
  if (!config.tuple) bad("matrices", "required by this command");
  return *config.tuple;
}

const Subspace& need_subspace(const JobConfig& config) {
  if (!config.subspace) bad("subspace", "required by this command");
  return *config.subspace;
}

MeasureSpec measure_or_uniform(const JobConfig& config) {
  return config.measure ? *config.measure : MeasureSpec::uniform(need_tuple(config).m());
}

std::uint64_t seed_of(const JobConfig& config, const RunOptions& options) { return options.seed.value_or(config.seed); }

json vector_json(const Vector& v) { return json(std::vector<double>(v.begin(), v.end())); }

json dimension_json(const DimensionEstimate& e, const PressureConfig& cfg, std::size_t m) {
  json out;
  out["value"] = e.value;
  out["bracket"] = {e.lo, e.hi};
  out["iterations"] = e.iterations;
  out["n"] = e.n;
  out["pressure_at_value"] = e.pressure_at_value;
  out["heuristic_halfwidth"] = e.heuristic_halfwidth;
  out["flagged"] = e.flagged;
  out["clamped"] = e.clamped;
  json params;
  params["schedule"] = cfg.schedule.empty() ? default_schedule(m) : cfg.schedule;
  params["tolerance"] = cfg.tolerance;
  params["depth"] = cfg.depth ? json(*cfg.depth) : json(nullptr);
  params["budget"] = cfg.budget;
  out["parameters"] = params;
  return out;
}

void note_flags(const DimensionEstimate& e, const std::string& what, json& warnings) {
  if (e.flagged)
    warnings.push_back(what + ": finite-n rates disagree by more than the bracket (heuristic half-width " +
                       std::to_string(e.heuristic_halfwidth) + ")");
  if (e.clamped) warnings.push_back(what + ": value clamped to the subspace dimension");
}

json spectrum_json(const LyapunovSpectrum& s) {
  json out;
  out["exponents"] = vector_json(s.exponents);
  out["stderr"] = vector_json(s.stderr_);
  out["mode"] = to_string(s.mode);
  out["n"] = s.n;
  out["trials"] = s.trials;
  return out;
}

json clusters_json(const std::vector<SCluster>& clusters) {
  json out = json::array();
  for (const SCluster& c : clusters) out.push_back({{"center", c.center}, {"range", {c.lo, c.hi}}, {"count", c.count}});
  return out;
}

json report_json(const CriterionReport& r) {
  json out;
  out["criterion"] = r.criterion;
  out["verdict"] = to_string(r.verdict);
  out["summary"] = r.summary;
  json evidence = json::object();
  for (const EvidenceItem& item : r.evidence) {
    json entry;
    if (!item.values.empty()) entry["values"] = item.values;
    if (!item.text.empty()) entry["text"] = item.text;
    evidence[item.name] = entry;
  }
  out["evidence"] = evidence;
  json tol = json::object();
  for (const auto& [name, value] : r.tolerances) tol[name] = value;
  out["tolerances"] = tol;
  return out;
}

json box_json(const BoxCountResult& b) {
  json out;
  out["estimate"] = b.estimate;
  out["r_squared"] = b.r_squared;
  out["intercept"] = b.intercept;
  json counts = json::array();
  for (const ScaleCount& sc : b.counts) counts.push_back({{"scale", sc.scale}, {"count", sc.count}});
  out["counts"] = counts;
  if (!b.warning.empty()) out["warning"] = b.warning;
  return out;
}

std::string csv_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

std::size_t ceil_index(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-12)); }

SExtremesOptions extremes_options(const JobConfig& config, const RunOptions& options) {
  SExtremesOptions opts;
  opts.samples = config.samples;
  opts.length = config.path_length;
  opts.seed = seed_of(config, options);
  opts.threads = options.threads;
  return opts;
}

json s_profile_json(const SProfile& profile, const SExtremesOptions& opts) {
  json out;
  out["s_lower"] = profile.s_lower;
  out["s_upper"] = profile.s_upper;
  out["clusters"] = clusters_json(profile.clusters);
  out["cluster_tolerance"] = profile.cluster_tolerance;
  out["histogram"] = profile.histogram;
  out["k"] = profile.k;
  double max_osc = 0.0;
  for (const SSample& s : profile.samples) max_osc = std::max(max_osc, s.oscillation);
  out["max_oscillation"] = max_osc;
  out["parameters"] = {{"samples", opts.samples}, {"path_length", opts.length}, {"seed", opts.seed}};
  return out;
}

// --- subcommands ------------------------------------------------------------

json cmd_affinity_dim(const JobConfig& config, const RunOptions& options, json& warnings) {
  const MatrixTuple& t = need_tuple(config);
  const PressureConfig cfg = pressure_config(config, options);
  const DimensionEstimate e = affinity_dim(t, cfg);
  note_flags(e, "affinity_dim", warnings);
  json out = dimension_json(e, cfg, t.m());
  out["min_with_d"] = std::min(e.value, static_cast<double>(t.d()));
  return out;
}

json cmd_proj_affinity_dim(const JobConfig& config, const RunOptions& options, json& warnings) {
  const MatrixTuple& t = need_tuple(config);
  const Subspace& w = need_subspace(config);
  const PressureConfig cfg = pressure_config(config, options);
  const DimensionEstimate e = proj_affinity_dim(t, w, cfg);
  note_flags(e, "proj_affinity_dim", warnings);
  json out = dimension_json(e, cfg, t.m());
  out["k"] = w.dim();
  return out;
}

json cmd_pressure_curve(const JobConfig& config, const RunOptions& options, std::vector<CsvTable>& tables) {
  const MatrixTuple& t = need_tuple(config);
  const Subspace w = config.subspace ? *config.subspace : Subspace::full(t.d());
  const PressureConfig cfg = pressure_config(config, options);
  const double hi = config.s_hi.value_or(static_cast<double>(w.dim()));
  const std::size_t steps = std::max<std::size_t>(2, config.s_steps);
  json rows = json::array();
  std::ostringstream csv;
  csv << "s,value,upper_bound,n\n" << std::setprecision(17);
  for (std::size_t i = 0; i < steps; ++i) {
    const double s = config.s_lo + (hi - config.s_lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    const PressureEstimate p = pressure_estimate(t, w, s, cfg);
    json seq = json::array();
    for (const RatePoint& rp : p.sequence) seq.push_back({rp.n, rp.rate});
    rows.push_back({{"s", s},
                    {"value", p.value},
                    {"upper_bound", p.upper_bound},
                    {"sequence", seq},
                    {"method", p.method},
                    {"heuristic", p.heuristic},
                    {"clamped_to_bound", p.clamped_to_bound}});
    csv << s << "," << p.value << "," << p.upper_bound << "," << (p.sequence.empty() ? 0 : p.sequence.back().n) << "\n";
  }
  tables.push_back({"pressure", csv.str()});
  json out;
  out["curve"] = rows;
  out["parameters"] = {{"schedule", cfg.schedule.empty() ? default_schedule(t.m()) : cfg.schedule},
                       {"depth", cfg.depth ? json(*cfg.depth) : json(nullptr)},
                       {"s_range", {config.s_lo, hi}},
                       {"steps", steps}};
  return out;
}

MonteCarloOptions mc_options(const JobConfig& config, const RunOptions& options) {
  MonteCarloOptions mc;
  mc.n = config.mc_length;
  mc.trials = options.trials.value_or(config.trials);
  mc.seed = seed_of(config, options);
  mc.threads = options.threads;
  if (options.budget) mc.budget = *options.budget;
  return mc;
}

json cmd_lyapunov(const JobConfig& config, const RunOptions& options) {
  const MatrixTuple& t = need_tuple(config);
  const MeasureSpec mu = measure_or_uniform(config);
  const MonteCarloOptions mc = mc_options(config, options);
  const LyapunovSpectrum spectrum = lyapunov_spectrum(t, mu, mc);
  json out = spectrum_json(spectrum);
  out["entropy"] = entropy(mu);
  out["lyapunov_dim"] = lyapunov_dim(mu, spectrum);
  out["parameters"] = {{"n", mc.n}, {"trials", mc.trials}, {"seed", mc.seed}, {"qr_stride", mc.stride}};
  return out;
}

json cmd_s_spectrum(const JobConfig& config, const RunOptions& options, std::vector<CsvTable>& tables,
                    json& warnings) {
  const MatrixTuple& t = need_tuple(config);
  const Subspace& w = need_subspace(config);
  const MeasureSpec mu = measure_or_uniform(config);
  const SExtremesOptions opts = extremes_options(config, options);
  const SProfile profile = s_extremes(mu, t, w, opts);
  json out = s_profile_json(profile, opts);
  if (w.dim() < t.d()) {
    const LyapunovSpectrum spectrum = lyapunov_spectrum(t, mu, mc_options(config, options));
    const double ly = lyapunov_dim(mu, spectrum);
    const std::size_t ell_prime = std::max<std::size_t>(1, ceil_index(std::min(static_cast<double>(w.dim()), ly)));
    const ValueBounds bounds = distinct_value_bounds(t.d(), w.dim(), ell_prime, ell_prime);
    out["lyapunov_dim"] = ly;
    out["measure_bound"] = bounds.measure_bound;
    if (profile.clusters.size() > bounds.measure_bound)
      warnings.push_back("cluster count exceeds the finitely-many-values bound");
  }
  std::ostringstream samples;
  samples << "index,estimate,oscillation\n" << std::setprecision(17);
  for (const SSample& s : profile.samples) samples << s.index << "," << s.estimate << "," << s.oscillation << "\n";
  tables.push_back({"samples", samples.str()});
  const double top = static_cast<double>(std::max<std::size_t>(1, profile.k));
  tables.push_back({"histogram", csv_of([&](std::ostream& os) { write_histogram_csv(os, profile.histogram, 0.0, top); })});
  return out;
}

json cmd_criteria(const JobConfig& config, const RunOptions& options) {
  const MatrixTuple& t = need_tuple(config);
  const PressureConfig cfg = pressure_config(config, options);
  json out;
  json reports = json::array();
  json irreducible = json::object();
  for (std::size_t q = 1; q < t.d(); ++q) irreducible[std::to_string(q)] = algebra_irreducible(t, q);
  out["wedge_irreducible"] = irreducible;
  const bool antidiagonal = t.d() == 2 && std::all_of(t.matrices().begin(), t.matrices().end(), [](const Matrix& a) {
    return a(0, 0) == 0.0 && a(1, 1) == 0.0;
  });
  if (antidiagonal) reports.push_back(report_json(antidiagonal_nonexact_criterion(t)));
  if (config.subspace) {
    const Subspace& w = *config.subspace;
    if (t.d() == 2 && w.dim() == 1) {
      reports.push_back(report_json(planar_set_drop_criterion(t, w)));
      const MeasureSpec mu = measure_or_uniform(config);
      const PlanarMeasureReport pm = planar_measure_drop_criterion(t, w, mu);
      reports.push_back(report_json(pm.part1));
      reports.push_back(report_json(pm.part2));
    }
    if (t.d() == 3) reports.push_back(report_json(d3_necessary_conditions(t, w)));
    if (w.dim() == 1) {
      const LineProjection lp = line_projection_dim(t, w, cfg);
      json line = dimension_json(lp.estimate, cfg, t.m());
      line["orbit_dim"] = lp.orbit_dim;
      out["line_projection_dim"] = line;
    }
  }
  if (config.measure) {
    const SupermultiplicativeReport sm = check_supermultiplicative(*config.measure, 2);
    out["supermultiplicative"] = {{"constant", sm.constant}, {"pairs_tested", sm.pairs_tested},
                                  {"zero_pairs", sm.zero_pair_count}, {"max_len", 2}};
  }
  out["reports"] = reports;
  return out;
}

json cmd_irreducible(const JobConfig& config, const RunOptions& options) {
  const MatrixTuple& t = need_tuple(config);
  if (!options.q) bad("--q", "required by irreducible");
  if (*options.q < 1 || *options.q > t.d()) bad("--q", "must lie in [1, d]");
  const IrreducibilityDetail detail = algebra_irreducible_detail(t, *options.q);
  return {{"q", *options.q},
          {"irreducible", detail.irreducible},
          {"wedge_dim", detail.wedge_dim},
          {"algebra_dim", detail.algebra_dim},
          {"commutant_dim", detail.commutant_dim},
          {"rounds", detail.rounds}};
}

json cmd_box_experiment(const JobConfig& config, const RunOptions& options, std::vector<CsvTable>& tables,
                        json& warnings) {
  const MatrixTuple& t = need_tuple(config);
  const Subspace& w = need_subspace(config);
  const MeasureSpec mu = measure_or_uniform(config);
  ExperimentOptions opts;
  opts.trials = options.trials.value_or(config.experiment_trials);
  opts.points = config.points;
  opts.seed = seed_of(config, options);
  opts.translation_radius = config.translation_radius;
  opts.scales = config.scales;
  opts.threads = options.threads;
  opts.pressure = pressure_config(config, options);
  const ExperimentResult result = projected_dim_experiment(t, w, mu, opts);
  if (!result.warning.empty()) warnings.push_back(result.warning);
  json trials = json::array();
  std::ostringstream csv;
  csv << "trial,estimate,r_squared\n" << std::setprecision(17);
  for (const ExperimentTrial& tr : result.trials) {
    json translations = json::array();
    for (const Vector& a : tr.translations) translations.push_back(vector_json(a));
    trials.push_back({{"trial", tr.trial}, {"translations", translations}, {"box", box_json(tr.box)}});
    csv << tr.trial << "," << tr.box.estimate << "," << tr.box.r_squared << "\n";
  }
  tables.push_back({"trials", csv.str()});
  json out;
  out["predicted"] = dimension_json(result.predicted, opts.pressure, t.m());
  out["trials"] = trials;
  out["mean"] = result.mean;
  out["spread"] = result.spread;
  out["hypotheses_met"] = result.hypotheses_met;
  out["parameters"] = {{"trials", opts.trials},
                       {"points", opts.points},
                       {"seed", opts.seed},
                       {"translation_radius", opts.translation_radius}};
  return out;
}

json cmd_local_dim(const JobConfig& config, const RunOptions& options, std::vector<CsvTable>& tables,
                   json& warnings) {
  const MatrixTuple& t = need_tuple(config);
  if (!config.translations) bad("translations", "required by local-dim");
  const MeasureSpec mu = measure_or_uniform(config);
  const IFSInstance ifs(t, *config.translations);
  ChaosOptions chaos;
  chaos.points = config.points;
  chaos.seed = seed_of(config, options);
  chaos.threads = options.threads;
  chaos.address_length = config.address_length;
  PointCloud cloud = chaos_game(ifs, mu, chaos);
  if (config.subspace) cloud = project(cloud, *config.subspace);
  LocalDimOptions opts;
  opts.centers = config.centers;
  opts.radii = config.radii;
  opts.seed = chaos.seed;
  opts.threads = options.threads;
  const LocalDimResult result = local_dim_estimate(cloud, opts);
  if (result.skipped > 0)
    warnings.push_back(std::to_string(result.skipped) + " centers skipped (empty ball at the finest radius)");
  json out;
  out["slopes"] = result.slopes;
  out["skipped"] = result.skipped;
  out["radii"] = result.radii;
  out["histogram"] = result.histogram;
  out["histogram_range"] = {0.0, static_cast<double>(cloud.dim)};
  const std::vector<SCluster> modes = cluster_values(result.slopes, 5e-2);
  out["modes"] = clusters_json(modes);
  out["parameters"] = {{"points", chaos.points},
                       {"burn_in", auto_burn_in(ifs)},
                       {"bounding_radius", ifs.bounding_radius()},
                       {"centers", opts.centers},
                       {"seed", chaos.seed}};
  tables.push_back({"histogram", csv_of([&](std::ostream& os) {
                      write_histogram_csv(os, result.histogram, 0.0, static_cast<double>(cloud.dim));
                    })});
  if (config.export_points) tables.push_back({"points", csv_of([&](std::ostream& os) { write_point_cloud_csv(os, cloud); })});
  return out;
}

json cmd_example_8_1(const JobConfig& config, const RunOptions& options, std::vector<CsvTable>& tables) {
  const MatrixTuple& t = *config.tuple;
  const MeasureSpec& mu = *config.measure;
  const Subspace& w = *config.subspace;
  const SExtremesOptions opts = extremes_options(config, options);
  const SProfile profile = s_extremes(mu, t, w, opts);
  json out = s_profile_json(profile, opts);
  out["s_bar"] = profile.s_upper;
  out["closed_form"] = {{"s_bar", std::log(2.0) / (2.0 * std::log(2.5))}, {"s_lower", std::log(2.0) / (2.0 * std::log(5.0))}};
  out["entropy"] = entropy(mu);
  const LyapunovSpectrum exact = *lyapunov_exact(t, mu);
  const LyapunovSpectrum mc = lyapunov_mc(t, mu, mc_options(config, options));
  out["lyapunov_exact"] = spectrum_json(exact);
  out["lyapunov_mc"] = spectrum_json(mc);
  out["lyapunov_dim"] = lyapunov_dim(mu, exact);
  out["antidiagonal_criterion"] = report_json(antidiagonal_nonexact_criterion(t));
  std::ostringstream samples;
  samples << "index,estimate,oscillation\n" << std::setprecision(17);
  for (const SSample& s : profile.samples) samples << s.index << "," << s.estimate << "," << s.oscillation << "\n";
  tables.push_back({"samples", samples.str()});
  return out;
}

json matrix_json(const Matrix& a) {
  json rows = json::array();
  for (const Vector& r : a.to_rows()) rows.push_back(vector_json(r));
  return rows;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

JobConfig parse_job_config(const json& config) {
  if (!config.is_object()) bad("config", "expected a JSON object");
  JobConfig job;
  job.raw = config;
  if (config.contains("matrices")) job.tuple = parse_tuple(config.at("matrices"));
  const std::size_t m = job.tuple ? job.tuple->m() : 0;
  const std::size_t d = job.tuple ? job.tuple->d() : 0;
  if (config.contains("translations")) {
    if (!job.tuple) bad("translations", "given without matrices");
    const json& tr = config.at("translations");
    if (!tr.is_array() || tr.size() != m) bad("translations", "expected " + std::to_string(m) + " vectors");
    std::vector<Vector> vs;
    for (std::size_t i = 0; i < m; ++i) {
      const std::string path = "translations[" + std::to_string(i) + "]";
      vs.push_back(vector_at(tr[i], path));
      if (vs.back().size() != d) bad(path, "has length " + std::to_string(vs.back().size()) + ", expected " + std::to_string(d));
    }
    job.translations = std::move(vs);
  }
  if (config.contains("measure")) {
    if (!job.tuple) bad("measure", "given without matrices");
    job.measure = parse_measure(config.at("measure"), m);
  }
  if (config.contains("subspace")) {
    if (!job.tuple) bad("subspace", "given without matrices");
    job.subspace = parse_subspace(config.at("subspace"), d);
  }
  if (config.contains("estimator")) {
    const json& e = config.at("estimator");
    if (!e.is_object()) bad("estimator", "expected an object");
    for (const auto& [key, value] : e.items()) {
      const std::string path = "estimator." + key;
      if (key == "schedule") {
        if (!value.is_array() || value.empty()) bad(path, "expected a non-empty array of word lengths");
        for (std::size_t i = 0; i < value.size(); ++i) {
          const std::size_t n = count_at(value[i], path + "[" + std::to_string(i) + "]");
          if (n == 0) bad(path + "[" + std::to_string(i) + "]", "word length must be positive");
          job.schedule.push_back(n);
        }
      } else if (key == "depth") {
        job.depth = count_at(value, path);
      } else if (key == "tolerance") {
        job.tolerance = number_at(value, path);
        if (!(job.tolerance > 0.0)) bad(path, "must be positive");
      } else if (key == "trials") {
        job.trials = count_at(value, path);
      } else if (key == "mc_length") {
        job.mc_length = count_at(value, path);
      } else if (key == "samples") {
        job.samples = count_at(value, path);
      } else if (key == "path_length") {
        job.path_length = count_at(value, path);
      } else if (key == "seed") {
        if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
          bad(path, "expected a non-negative integer");
        job.seed = value.get<std::uint64_t>();
      } else if (key == "points") {
        job.points = count_at(value, path);
      } else if (key == "experiment_trials") {
        job.experiment_trials = count_at(value, path);
      } else if (key == "translation_radius") {
        job.translation_radius = number_at(value, path);
        if (!(job.translation_radius > 0.0)) bad(path, "must be positive");
      } else if (key == "scales" || key == "radii") {
        Vector v = vector_at(value, path);
        for (double x : v)
          if (!(x > 0.0)) bad(path, "entries must be positive");
        (key == "scales" ? job.scales : job.radii).assign(v.begin(), v.end());
      } else if (key == "centers") {
        job.centers = count_at(value, path);
      } else if (key == "address_length") {
        job.address_length = count_at(value, path);
      } else if (key == "export_points") {
        if (!value.is_boolean()) bad(path, "expected a boolean");
        job.export_points = value.get<bool>();
      } else if (key == "s_range") {
        const Vector v = vector_at(value, path);
        if (v.size() != 2 || !(v[0] < v[1])) bad(path, "expected [lo, hi] with lo < hi");
        job.s_lo = v[0];
        job.s_hi = v[1];
      } else if (key == "s_steps") {
        job.s_steps = count_at(value, path);
      } else {
        bad(path, "unknown estimator parameter");
      }
    }
  }
  return job;
}

JobConfig example_8_1_config() {
  const json config = {
      {"matrices", {{{0.0, 0.4}, {0.2, 0.0}}, {{0.0, 0.4}, {0.2, 0.0}}, {{0.0, 0.2}, {0.4, 0.0}}}},
      {"measure", {{"type", "markov"}, {"p", {0.25, 0.25, 0.5}}, {"P", {{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.0}}}}},
      {"subspace", {{"basis", {{1.0, 0.0}}}}},
      {"estimator", {{"samples", 200}, {"path_length", 2000}, {"seed", 1}}}};
  return parse_job_config(config);
}

json run_command(const std::string& command, const JobConfig& config, const RunOptions& options,
                 std::vector<CsvTable>& tables) {
  json warnings = json::array();
  json result;
  if (command == "affinity-dim") {
    result = cmd_affinity_dim(config, options, warnings);
  } else if (command == "proj-affinity-dim") {
    result = cmd_proj_affinity_dim(config, options, warnings);
  } else if (command == "pressure-curve") {
    result = cmd_pressure_curve(config, options, tables);
  } else if (command == "lyapunov") {
    result = cmd_lyapunov(config, options);
  } else if (command == "s-spectrum") {
    result = cmd_s_spectrum(config, options, tables, warnings);
  } else if (command == "criteria") {
    result = cmd_criteria(config, options);
  } else if (command == "irreducible") {
    result = cmd_irreducible(config, options);
  } else if (command == "box-experiment") {
    result = cmd_box_experiment(config, options, tables, warnings);
  } else if (command == "local-dim") {
    result = cmd_local_dim(config, options, tables, warnings);
  } else if (command == "example-8-1") {
    result = cmd_example_8_1(config, options, tables);
  } else {
    fail(ErrorCode::invalid_input, "command: unknown subcommand '" + command + "'");
  }

  json inputs = config.raw;
  if (config.tuple) {
    json mats = json::array();
    for (const Matrix& a : config.tuple->matrices()) mats.push_back(matrix_json(a));
    inputs["matrices"] = mats;
  }
  if (config.subspace) inputs["subspace_orthonormal_basis"] = matrix_json(config.subspace->basis().transpose());
  json flags = json::object();
  flags["seed"] = seed_of(config, options);
  flags["threads"] = options.threads;
  if (options.tolerance) flags["tolerance"] = *options.tolerance;
  if (options.max_n) flags["max_n"] = *options.max_n;
  if (options.depth) flags["depth"] = *options.depth;
  if (options.trials) flags["trials"] = *options.trials;
  if (options.q) flags["q"] = *options.q;
  if (options.budget) flags["budget"] = *options.budget;

  json doc;
  doc["schema"] = kSchemaVersion;
  doc["command"] = command;
  doc["inputs"] = inputs;
  doc["flags"] = flags;
  doc["result"] = result;
  doc["warnings"] = warnings;
  return doc;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dimensions of self-affine sets, measures and their projections"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<double> tolerance;
  std::optional<std::size_t> max_n, depth, trials, q;
  bool no_timestamp = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"affinity-dim", "affinity dimension of the tuple"},
      {"proj-affinity-dim", "projected affinity dimension onto the configured subspace"},
      {"pressure-curve", "pressure P(T, W, s) on a grid of s"},
      {"lyapunov", "Lyapunov exponents, entropy and Lyapunov dimension"},
      {"s-spectrum", "profile of the projected local-dimension functional S over sampled paths"},
      {"criteria", "structural dimension-drop and exactness criteria"},
      {"irreducible", "irreducibility of the q-th exterior power"},
      {"box-experiment", "chaos-game and box-counting check of the projected dimension"},
      {"local-dim", "per-center local dimension slopes of a sampled measure"},
      {"example-8-1", "built-in Markov antidiagonal example with two S values"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (name != "example-8-1") sub->add_option("--config", config_path, "JSON job configuration")->required();
    sub->add_option("--out", out_path, "write the JSON result here instead of stdout");
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--threads", threads, "worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tolerance", tolerance, "bisection tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-n", max_n, "largest word length; schedule becomes n/4, n/2, n");
    sub->add_option("--depth", depth, "psi search depth");
    sub->add_option("--trials", trials, "Monte Carlo or experiment trials");
    if (name == "irreducible") sub->add_option("--q", q, "exterior power")->required();
    sub->add_flag("--no-timestamp", no_timestamp, "omit time-dependent fields for byte-identical output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunOptions options;
  options.seed = seed;
  options.threads = threads;
  options.tolerance = tolerance;
  options.max_n = max_n;
  options.depth = depth;
  options.trials = trials;
  options.q = q;

  try {
    if (const char* env = std::getenv("AFFDIM_BUDGET")) {
      char* end = nullptr;
      const unsigned long long budget = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0' || budget == 0) bad("AFFDIM_BUDGET", "expected a positive integer");
      options.budget = budget;
    }
    JobConfig config;
    if (command == "example-8-1") {
      config = example_8_1_config();
    } else {
      std::ifstream in(config_path);
      if (!in) bad("--config", "cannot read '" + config_path + "'");
      json raw;
      try {
        raw = json::parse(in);
      } catch (const json::parse_error& e) {
        bad("config", std::string("malformed JSON: ") + e.what());
      }
      config = parse_job_config(raw);
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<CsvTable> tables;
    json doc = run_command(command, config, options, tables);
    if (!no_timestamp) {
      doc["timestamp"] = utc_timestamp();
      doc["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    if (out_path.empty()) {
      out << doc.dump(2) << "\n";
    } else {
      std::ofstream file(out_path);
      if (!file) bad("--out", "cannot write '" + out_path + "'");
      file << doc.dump(2) << "\n";
      const std::filesystem::path base(out_path);
      const std::filesystem::path stem = base.parent_path() / base.stem();
      for (const CsvTable& table : tables) {
        std::ofstream csv(stem.string() + "." + table.name + ".csv");
        csv << table.content;
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::invalid_input:
        return 1;
      case ErrorCode::resource_limit:
        return 2;
      default:
        return 3;
    }
  }
}

}  // namespace affdim::cli
