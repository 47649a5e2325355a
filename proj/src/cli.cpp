#include "selfsim/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "selfsim/bounds.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/estimator.hpp"
#include "selfsim/exceedance.hpp"
#include "selfsim/identities.hpp"
#include "selfsim/process.hpp"

#ifndef SELFSIM_VERSION
#define SELFSIM_VERSION "0.0.0"
#endif

namespace selfsim::cli {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---- strict config parsing ------------------------------------------------

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object())
    throw ParameterError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string list;
      for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw ParameterError(fmt::format("config: unknown key '{}{}' (allowed: {})",
                                       where.empty() ? "" : where + ".", key, list));
    }
  }
}

[[noreturn]] void type_error(const std::string& path, std::string_view expected,
                             const json& v) {
  throw ParameterError(
      fmt::format("config: '{}' must be {} (got {})", path, expected, v.dump()));
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) type_error(path, "a number", v);
  return v.get<double>();
}

std::uint64_t as_unsigned(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  type_error(path, "a nonnegative integer", v);
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) type_error(path, "an integer", v);
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) type_error(path, "a string", v);
  return v.get<std::string>();
}

std::vector<double> as_doubles(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) type_error(path, "a number or nonempty array of numbers", v);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_double(v[i], fmt::format("{}[{}]", path, i)));
  return out;
}

RunConfig from_json(const json& j) {
  check_keys(j, {"command", "process", "R", "T", "T_list", "u_list", "grid", "mc",
                 "exceedance", "H_ref", "output", "threads"},
             "");
  RunConfig c;
  if (!j.contains("command")) throw ParameterError("config: 'command' is required");
  c.command = as_string(j["command"], "command");
  if (j.contains("process")) {
    const json& p = j["process"];
    check_keys(p, {"family", "alpha", "K", "k"}, "process");
    if (p.contains("family")) c.process.family = as_string(p["family"], "process.family");
    if (p.contains("alpha")) c.process.alpha = as_double(p["alpha"], "process.alpha");
    if (p.contains("K")) c.process.K = as_double(p["K"], "process.K");
    if (p.contains("k")) c.process.k = as_int(p["k"], "process.k");
  }
  if (j.contains("R")) c.R = as_doubles(j["R"], "R");
  if (j.contains("T") && !j["T"].is_null()) c.T = as_double(j["T"], "T");
  if (j.contains("T_list")) c.T_list = as_doubles(j["T_list"], "T_list");
  if (j.contains("u_list")) c.u_list = as_doubles(j["u_list"], "u_list");
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, {"n", "density", "scheme"}, "grid");
    if (g.contains("n") && !g["n"].is_null()) c.grid.n = as_unsigned(g["n"], "grid.n");
    if (g.contains("density")) c.grid.density = as_double(g["density"], "grid.density");
    if (g.contains("scheme")) c.grid.scheme = as_string(g["scheme"], "grid.scheme");
  }
  if (j.contains("mc")) {
    const json& m = j["mc"];
    check_keys(m, {"n_paths", "seed", "levels", "strategy", "method"}, "mc");
    if (m.contains("n_paths")) c.mc.n_paths = as_unsigned(m["n_paths"], "mc.n_paths");
    if (m.contains("seed")) c.mc.seed = as_unsigned(m["seed"], "mc.seed");
    if (m.contains("levels")) c.mc.levels = as_int(m["levels"], "mc.levels");
    if (m.contains("strategy") && !m["strategy"].is_null())
      c.mc.strategy = as_string(m["strategy"], "mc.strategy");
    if (m.contains("method")) c.mc.method = as_string(m["method"], "mc.method");
  }
  if (j.contains("exceedance")) {
    const json& e = j["exceedance"];
    check_keys(e, {"a", "b", "beta", "n_paths", "pilot_paths", "max_paths", "reference_paths"},
               "exceedance");
    auto& x = c.exceedance;
    if (e.contains("a")) x.a = as_double(e["a"], "exceedance.a");
    if (e.contains("b")) x.b = as_double(e["b"], "exceedance.b");
    if (e.contains("beta")) x.beta = as_double(e["beta"], "exceedance.beta");
    if (e.contains("n_paths")) x.n_paths = as_unsigned(e["n_paths"], "exceedance.n_paths");
    if (e.contains("pilot_paths"))
      x.pilot_paths = as_unsigned(e["pilot_paths"], "exceedance.pilot_paths");
    if (e.contains("max_paths")) x.max_paths = as_unsigned(e["max_paths"], "exceedance.max_paths");
    if (e.contains("reference_paths"))
      x.reference_paths = as_unsigned(e["reference_paths"], "exceedance.reference_paths");
  }
  if (j.contains("H_ref") && !j["H_ref"].is_null()) c.H_ref = as_double(j["H_ref"], "H_ref");
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, {"format", "path"}, "output");
    if (o.contains("format")) c.output.format = as_string(o["format"], "output.format");
    if (o.contains("path")) c.output.path = as_string(o["path"], "output.path");
  }
  if (j.contains("threads")) c.threads = as_int(j["threads"], "threads");
  return c;
}

// ---- validation -------------------------------------------------------------

ProcessSpec make_spec(const ProcessConfig& p) {
  return ProcessSpec(parse_family(p.family), p.alpha, p.K, p.k);
}

double default_T(const std::string& command) { return command == "exceedance" ? 5.0 : 10.0; }

Strategy strategy_for(const RunConfig& c) {
  if (c.mc.strategy) return parse_strategy(*c.mc.strategy);
  return c.command == "pickands-curve" ? Strategy::kChangeOfMeasure : Strategy::kPlain;
}

SamplerMethod parse_method(std::string_view name) {
  for (auto m : {SamplerMethod::kAuto, SamplerMethod::kCholesky, SamplerMethod::kCirculant,
                 SamplerMethod::kRankOne, SamplerMethod::kIntegration})
    if (method_name(m) == name) return m;
  throw ParameterError(fmt::format("unknown sampler method '{}'", name));
}

void validate(const RunConfig& c) {
  static const std::vector<std::string> commands{"info",   "estimate",   "pickands-curve",
                                                 "bounds", "exceedance", "verify"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    throw ParameterError(fmt::format("unknown command '{}'", c.command));
  make_spec(c.process);
  parse_scheme(c.grid.scheme);
  parse_method(c.mc.method);
  strategy_for(c);
  if (c.output.format != "csv" && c.output.format != "json")
    throw ParameterError("output.format must be 'csv' or 'json'");
  if (!(c.grid.density > 0.0)) throw ParameterError("grid.density must be > 0");
  if (c.grid.n && *c.grid.n < 2) throw ParameterError("grid.n must be >= 2");
  if (c.mc.n_paths < 1) throw ParameterError("mc.n_paths must be >= 1");
  if (c.mc.levels < 1 || c.mc.levels > 8) throw ParameterError("mc.levels must lie in 1..8");
  if (c.threads < 0) throw ParameterError("threads must be >= 0");
  const double T = c.T.value_or(default_T(c.command));
  if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("T must be positive and finite");
  for (double R : c.R)
    if (!(R >= 0.0) || !std::isfinite(R)) throw ParameterError("R values must be >= 0");
  if (c.command == "bounds")
    for (double R : c.R)
      if (!(R > 0.0)) throw ParameterError("bounds need R > 0");
  for (std::size_t i = 0; i < c.T_list.size(); ++i)
    if (!(c.T_list[i] > 0.0) || (i > 0 && !(c.T_list[i] > c.T_list[i - 1])))
      throw ParameterError("T_list must be positive and strictly increasing");
  for (std::size_t i = 0; i < c.u_list.size(); ++i)
    if (!(c.u_list[i] > 0.0) || (i > 0 && !(c.u_list[i] > c.u_list[i - 1])))
      throw ParameterError("u_list must be positive and strictly increasing");
  if (c.command == "exceedance") {
    ExceedanceSpec e{make_spec(c.process), c.exceedance.a, c.exceedance.b, c.exceedance.beta};
    e.validate();
    if (c.exceedance.reference_paths < 1)
      throw ParameterError("exceedance.reference_paths must be >= 1");
  }
}

// ---- output -----------------------------------------------------------------

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<ojson> row) {
    if (row.size() != columns_.size())
      throw std::logic_error("table row does not match the column count");
    rows_.push_back(std::move(row));
  }
  void add_trailer(ojson trailer) { trailer_ = std::move(trailer); }

  void write(std::ostream& out, const std::string& format, const ojson& header) const {
    if (format == "json") {
      out << header.dump() << '\n';
      for (const auto& row : rows_) {
        ojson obj = ojson::object();
        for (std::size_t i = 0; i < columns_.size(); ++i) obj[columns_[i]] = row[i];
        out << obj.dump() << '\n';
      }
      if (!trailer_.is_null()) out << trailer_.dump() << '\n';
      return;
    }
    out << "# selfsim " << header["version"].get<std::string>() << '\n';
    out << "# config " << header["config"].dump() << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
    out << '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
      out << '\n';
    }
    if (!trailer_.is_null()) out << "# " << trailer_.dump() << '\n';
  }

 private:
  static std::string cell(const ojson& v) {
    if (v.is_null()) return "";
    if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    return v.dump();
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<ojson>> rows_;
  ojson trailer_;
};

std::string params_string(const ProcessSpec& s) {
  switch (s.family()) {
    case Family::kBifractional:
      return fmt::format("alpha={};K={}", s.alpha_param(), s.K());
    case Family::kIntegratedFbm:
      return fmt::format("alpha={};k={}", s.alpha_param(), s.k());
    default:
      return fmt::format("alpha={}", s.alpha_param());
  }
}

ojson resolved_json(const RunConfig& c) {
  ojson j;
  j["command"] = c.command;
  j["process"] = {{"family", std::string(family_name(parse_family(c.process.family)))},
                  {"alpha", c.process.alpha},
                  {"K", c.process.K},
                  {"k", c.process.k}};
  j["R"] = c.R;
  j["T"] = c.T.value_or(default_T(c.command));
  j["T_list"] = c.T_list;
  j["u_list"] = c.u_list;
  j["grid"] = {{"n", c.grid.n ? ojson(*c.grid.n) : ojson(nullptr)},
               {"density", c.grid.density},
               {"scheme", std::string(scheme_name(parse_scheme(c.grid.scheme)))}};
  j["mc"] = {{"n_paths", c.mc.n_paths},
             {"seed", c.mc.seed},
             {"levels", c.mc.levels},
             {"strategy", std::string(strategy_name(strategy_for(c)))},
             {"method", c.mc.method}};
  j["exceedance"] = {{"a", c.exceedance.a},
                     {"b", c.exceedance.b},
                     {"beta", c.exceedance.beta},
                     {"n_paths", c.exceedance.n_paths},
                     {"pilot_paths", c.exceedance.pilot_paths},
                     {"max_paths", c.exceedance.max_paths},
                     {"reference_paths", c.exceedance.reference_paths}};
  j["H_ref"] = c.H_ref ? ojson(*c.H_ref) : ojson(nullptr);
  j["output"] = {{"format", c.output.format}};
  return j;
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson("symbolic"); }

std::size_t grid_points(const RunConfig& c, double horizon) {
  if (c.grid.n) return *c.grid.n;
  return static_cast<std::size_t>(std::llround(c.grid.density * horizon)) + 1;
}

struct Outcome {
  Table table;
  std::vector<std::string> summary;
  int code = kOk;
};

Outcome run_info(const RunConfig& c) {
  const ProcessSpec spec = make_spec(c.process);
  const SSTriple t = ss_parameters(spec);
  const LampertiLocalParameter lp = lamperti_local_parameter(spec);
  const PickandsClosedForm pk = pickands_closed_form(spec, c.H_ref);
  Outcome o{Table({"family", "params", "alpha", "kappa", "c_y", "lamperti_a",
                   "lamperti_degenerate", "pickands_coefficient", "pickands_value", "kernel"}),
            {}};
  o.table.add({std::string(family_name(spec.family())), params_string(spec), t.alpha, t.kappa,
               t.c_y, lp.a, lp.degenerate, pk.coefficient, optional_json(pk.value),
               kernel_description(spec)});
  o.summary.push_back(fmt::format("{}: (alpha, kappa, c_Y) = ({:g}, {:g}, {:g})", spec.label(),
                                  t.alpha, t.kappa, t.c_y));
  return o;
}

std::string flags_of(const FunctionalEstimate& e) { return e.heavy_tail ? "heavy_tail" : ""; }

Outcome run_estimate(const RunConfig& c) {
  const ProcessSpec spec = make_spec(c.process);
  const double T = c.T.value_or(default_T(c.command));
  const std::size_t n = grid_points(c, T);
  EstimatorOptions opt;
  opt.strategy = strategy_for(c);
  opt.levels = c.mc.levels;
  opt.threads = c.threads;
  opt.method = parse_method(c.mc.method);
  const auto ests = estimate_functional(spec, c.R, T, n, parse_scheme(c.grid.scheme),
                                        c.mc.n_paths, c.mc.seed, opt);
  Outcome o{Table({"family", "params", "R", "T", "grid_n", "fine_grid_n", "scheme", "n_paths",
                   "seed", "strategy", "levels", "value", "stderr", "log_mean", "extrapolated",
                   "extrapolated_stderr", "flags"}),
            {}};
  for (const auto& e : ests) {
    o.table.add({std::string(family_name(spec.family())), params_string(spec), e.R, e.T,
                 e.grid_n, e.levels.back().grid_n, c.grid.scheme, e.n_paths, c.mc.seed,
                 std::string(strategy_name(e.strategy)), c.mc.levels, e.value, e.std_error,
                 e.log_mean, e.extrapolated, e.extrapolated_stderr, flags_of(e)});
    o.summary.push_back(fmt::format(
        "{} R={:g} T={:g}: H = {:.6g} +- {:.2g} (grid {}), extrapolated {:.6g} +- {:.2g}{}",
        spec.label(), e.R, e.T, e.value, e.std_error, e.levels.back().grid_n, e.extrapolated,
        e.extrapolated_stderr, e.heavy_tail ? " [heavy tail]" : ""));
  }
  return o;
}

Outcome run_pickands(const RunConfig& c) {
  const ProcessSpec spec = make_spec(c.process);
  PickandsOptions opt;
  opt.estimator.strategy = strategy_for(c);
  opt.estimator.levels = c.mc.levels;
  opt.estimator.threads = c.threads;
  opt.estimator.method = parse_method(c.mc.method);
  const PickandsCurve curve =
      estimate_pickands_curve(spec, c.T_list, c.grid.density, c.mc.n_paths, c.mc.seed, opt);
  Outcome o{Table({"family", "params", "T", "grid_n", "n_paths", "seed", "strategy", "levels",
                   "ratio", "stderr", "raw_ratio", "raw_stderr", "value", "log_mean", "flags"}),
            {}};
  for (const auto& p : curve.points) {
    std::string flags = flags_of(p.estimate);
    if (curve.capped_at && *curve.capped_at == p.T) flags += flags.empty() ? "capped" : ";capped";
    o.table.add({std::string(family_name(spec.family())), params_string(spec), p.T, p.grid_n,
                 p.estimate.n_paths, c.mc.seed, std::string(strategy_name(p.estimate.strategy)),
                 c.mc.levels, p.ratio, p.std_error, p.raw_ratio, p.raw_stderr, p.estimate.value,
                 p.estimate.log_mean, flags});
    o.summary.push_back(fmt::format("{} T={:g}: H(T)/T^{:g} = {:.6g} +- {:.2g}", spec.label(),
                                    p.T, curve.exponent, p.ratio, p.std_error));
  }
  const PickandsClosedForm pk = pickands_closed_form(spec, c.H_ref);
  ojson trailer = {{"last_two_slope", curve.last_two_slope},
                   {"capped_at", curve.capped_at ? ojson(*curve.capped_at) : ojson(nullptr)},
                   {"closed_form", optional_json(pk.value)}};
  if (curve.points.size() >= 3) {
    const ConvergenceReport rep = convergence_report(curve);
    trailer["plateau"] = rep.plateau;
    trailer["plateau_stderr"] = rep.plateau_stderr;
    trailer["drift"] = rep.drift;
    trailer["drift_stderr"] = rep.drift_stderr;
    trailer["stderr_dominates"] = rep.stderr_dominates;
    o.summary.push_back(fmt::format("plateau {:.6g} +- {:.2g}, drift {:.3g} +- {:.2g}{}",
                                    rep.plateau, rep.plateau_stderr, rep.drift,
                                    rep.drift_stderr,
                                    pk.value ? fmt::format(", closed form {:.6g}", *pk.value)
                                             : std::string()));
  }
  if (curve.capped_at)
    o.summary.push_back(fmt::format("relative stderr above 10% at T={:g}; later T skipped",
                                    *curve.capped_at));
  o.table.add_trailer(ojson{{"convergence", trailer}});
  return o;
}

Outcome run_bounds(const RunConfig& c) {
  const ProcessSpec spec = make_spec(c.process);
  const VariogramConstants k = compute_c1_c2(spec);
  const PickandsClosedForm pk = pickands_closed_form(spec, c.H_ref);
  Outcome o{Table({"family", "params", "R", "c1", "c2", "argmin_x", "argmax_x", "limit",
                   "lower", "upper", "universal_lower", "lower_target", "upper_target",
                   "pickands_coefficient", "pickands_value"}),
            {}};
  for (double R : c.R) {
    const PiterbargBounds b = piterbarg_bounds(spec, R, k);
    o.table.add({std::string(family_name(spec.family())), params_string(spec), R, k.c1, k.c2,
                 k.argmin_x, k.argmax_x, k.limit, optional_json(b.lower), optional_json(b.upper),
                 b.universal_lower, b.lower_target, b.upper_target, pk.coefficient,
                 optional_json(pk.value)});
    auto show = [](const std::optional<double>& v) {
      return v ? fmt::format("{:.6g}", *v) : std::string("symbolic");
    };
    o.summary.push_back(fmt::format(
        "{} R={:g}: c1={:.6g} c2={:.6g} lower={} upper={} universal_lower={:.6g}", spec.label(),
        R, k.c1, k.c2, show(b.lower), show(b.upper), b.universal_lower));
  }
  return o;
}

Outcome run_exceedance(const RunConfig& c) {
  const ExceedanceSpec e{make_spec(c.process), c.exceedance.a, c.exceedance.b,
                         c.exceedance.beta};
  const double T = c.T.value_or(default_T(c.command));
  const double alpha = ss_parameters(e.base).alpha;
  const std::size_t n = grid_points(c, std::pow(e.a, 1.0 / alpha) * T);
  ExceedanceBudget budget;
  budget.n_paths = c.exceedance.n_paths;
  budget.pilot_paths = c.exceedance.pilot_paths;
  budget.max_paths = c.exceedance.max_paths;
  const RatioSeries rs = ratio_series(e, T, c.u_list, n, budget, c.exceedance.reference_paths,
                                      c.mc.seed, c.threads);
  Outcome o{Table({"family", "params", "a", "b", "beta", "case", "T", "u", "grid_n", "window",
                   "n_paths", "hits", "p_hat", "stderr", "psi", "ratio", "ratio_stderr",
                   "reference", "reference_stderr"}),
            {}};
  for (std::size_t i = 0; i < rs.u_values.size(); ++i) {
    const auto& est = rs.estimates[i];
    o.table.add({std::string(family_name(e.base.family())), params_string(e.base), e.a, e.b,
                 e.beta, std::string(e.case_label()), T, est.u, est.grid_n, est.window,
                 est.n_paths, est.hits, est.p_hat, est.std_error, rs.psi_values[i], rs.ratios[i],
                 rs.ratio_stderrs[i], rs.reference, rs.reference_stderr});
    o.summary.push_back(fmt::format("u={:g}: P/Psi = {:.5g} +- {:.2g} (reference {:.5g} +- {:.2g})",
                                    est.u, rs.ratios[i], rs.ratio_stderrs[i], rs.reference,
                                    rs.reference_stderr));
  }
  return o;
}

Outcome run_verify(const RunConfig& c, bool family_given) {
  const std::vector<ProcessSpec> specs =
      family_given ? std::vector<ProcessSpec>{make_spec(c.process)} : representative_specs();
  Outcome o{Table({"check", "family", "params", "value", "tolerance", "pass"}), {}};
  std::size_t failed = 0, total = 0;
  auto record = [&](const std::string& check, const ProcessSpec& s, double value, double tol,
                    bool pass) {
    ++total;
    if (!pass) ++failed;
    o.table.add({check, std::string(family_name(s.family())), params_string(s), value, tol, pass});
    if (!pass)
      o.summary.push_back(fmt::format("FAIL {} {}: {:.6g} (tolerance {:.3g})", check, s.label(),
                                      value, tol));
  };
  for (const ProcessSpec& s : specs) {
    const double h[] = {1e-3};
    const double s2 = verify_s2(s, h).front();
    record("s2_ratio_h1e-3", s, s2, 0.05, std::abs(s2 - 1.0) <= 0.05);

    const double eig = min_relative_eigenvalue(s, 64, 4.0, c.mc.seed);
    record("kernel_psd_64", s, eig, -1e-8, eig > -1e-8);

    const VariogramConstants k = compute_c1_c2(s);
    record("c1_le_1_le_c2", s, k.c2 - k.c1, 0.0, k.c1 <= 1.0 && 1.0 <= k.c2);
    record("c1_le_limit_le_c2", s, k.limit, 0.0, k.c1 <= k.limit && k.limit <= k.c2);
    const SandwichResult sw = sandwich_check(s, k.c1, k.c2, 10000, 4.0, c.mc.seed);
    record("variogram_sandwich", s, sw.max_ratio, 1e-9, sw.pass);

    const HolderCheck hc = check_holder_bound(s, 1.0, 4096, c.mc.seed);
    record("holder_constant", s, hc.C_hat, 0.01, hc.pass);

    for (double a1 : {0.5, 1.7}) {
      const IdentityCheck ic = check_time_change_identity(s, a1, 4.0, 32, 1.0, 256, c.mc.seed);
      record(fmt::format("time_change_a1={:g}", a1), s, ic.max_abs_diff, 0.0, ic.bit_exact);
    }
    for (double cc : {0.5, 3.0}) {
      const IdentityCheck ic = check_scaling_identity(s, cc, 4.0, 32, 1.0, 256, c.mc.seed);
      record(fmt::format("scaling_c={:g}", cc), s, ic.max_rel_diff, 1e-10,
             ic.max_rel_diff <= 1e-10);
    }
  }
  o.summary.push_back(fmt::format("verify: {}/{} checks passed", total - failed, total));
  o.code = failed == 0 ? kOk : kVerificationFailure;
  return o;
}

std::string default_output_path(const RunConfig& c) {
  if (!c.output.path.empty()) return c.output.path == "-" ? std::string() : c.output.path;
  const char* dir = std::getenv("SELFSIM_OUTPUT_DIR");
  if (dir == nullptr || *dir == '\0') return {};
  const std::string ext = c.output.format == "json" ? "jsonl" : "csv";
  const std::string name =
      c.command == "verify" ? fmt::format("verify.{}", ext)
                            : fmt::format("{}-{}.{}", c.command,
                                          family_name(parse_family(c.process.family)), ext);
  return (std::filesystem::path(dir) / name).string();
}

int run_impl(const RunConfig& c, bool family_given) {
  validate(c);
  Outcome o = [&] {
    if (c.command == "info") return run_info(c);
    if (c.command == "estimate") return run_estimate(c);
    if (c.command == "pickands-curve") return run_pickands(c);
    if (c.command == "bounds") return run_bounds(c);
    if (c.command == "exceedance") return run_exceedance(c);
    return run_verify(c, family_given);
  }();
  ojson header = {{"version", SELFSIM_VERSION}, {"config", resolved_json(c)}};
  const std::string path = default_output_path(c);
  if (path.empty()) {
    o.table.write(std::cout, c.output.format, header);
    for (const auto& line : o.summary) std::cerr << line << '\n';
  } else {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ParameterError(fmt::format("cannot open output file '{}'", path));
    o.table.write(out, c.output.format, header);
    if (!out) throw ComputeError(fmt::format("failed writing '{}'", path));
    for (const auto& line : o.summary) std::cout << line << '\n';
  }
  return o.code;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << " (required paths: " << e.required_paths() << ")\n";
    return kComputeError;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ComputeError& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return kComputeError;
  } catch (const std::exception& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return kComputeError;
  }
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParameterError(fmt::format("config: {}", e.what()));
  }
  return from_json(j);
}

std::string resolved_config(const RunConfig& config) { return resolved_json(config).dump(); }

int run(const RunConfig& config) {
  return guarded([&] { return run_impl(config, true); });
}

int main(int argc, char** argv) {
  CLI::App app{"Simulation, bounds and Monte Carlo estimation for extremes of self-similar "
               "Gaussian processes"};
  app.set_version_flag("--version", SELFSIM_VERSION);
  std::string config_path;
  int threads = 0;
  std::string log_level = "warn";
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  struct Flags {
    std::string family;
    double alpha = 0, K = 0, T = 0, density = 0, a = 0, b = 0, beta = 0, H_ref = 0;
    int k = 0, levels = 0;
    std::vector<double> R, T_list, u_list;
    std::size_t n = 0, paths = 0, exc_paths = 0, pilot = 0, max_paths = 0, ref_paths = 0;
    std::uint64_t seed = 0;
    std::string scheme, strategy, method, format, output;
  } f;

  std::vector<std::pair<CLI::App*, std::vector<std::pair<CLI::Option*, std::function<void(json&)>>>>>
      subs;
  for (const char* name : {"info", "estimate", "pickands-curve", "bounds", "exceedance", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> opts;
    auto add = [&](CLI::Option* o, std::function<void(json&)> apply) {
      opts.emplace_back(o, std::move(apply));
    };
    add(sub->add_option("family", f.family, "process family"),
        [&](json& j) { j["process"]["family"] = f.family; });
    add(sub->add_option("--alpha", f.alpha), [&](json& j) { j["process"]["alpha"] = f.alpha; });
    add(sub->add_option("--K", f.K, "bifractional K"), [&](json& j) { j["process"]["K"] = f.K; });
    add(sub->add_option("--k", f.k, "integration order"), [&](json& j) { j["process"]["k"] = f.k; });
    add(sub->add_option("--R", f.R)->delimiter(','), [&](json& j) { j["R"] = f.R; });
    add(sub->add_option("--T", f.T), [&](json& j) { j["T"] = f.T; });
    add(sub->add_option("--T-list", f.T_list)->delimiter(','), [&](json& j) { j["T_list"] = f.T_list; });
    add(sub->add_option("--u", f.u_list)->delimiter(','), [&](json& j) { j["u_list"] = f.u_list; });
    add(sub->add_option("--n", f.n, "grid points"), [&](json& j) { j["grid"]["n"] = f.n; });
    add(sub->add_option("--density", f.density, "grid points per unit time"),
        [&](json& j) { j["grid"]["density"] = f.density; });
    add(sub->add_option("--scheme", f.scheme), [&](json& j) { j["grid"]["scheme"] = f.scheme; });
    add(sub->add_option("--paths", f.paths), [&](json& j) { j["mc"]["n_paths"] = f.paths; });
    add(sub->add_option("--seed", f.seed), [&](json& j) { j["mc"]["seed"] = f.seed; });
    add(sub->add_option("--levels", f.levels), [&](json& j) { j["mc"]["levels"] = f.levels; });
    add(sub->add_option("--strategy", f.strategy, "plain or change-of-measure"),
        [&](json& j) { j["mc"]["strategy"] = f.strategy; });
    add(sub->add_option("--method", f.method, "auto, cholesky, circulant, rank-one, integration"),
        [&](json& j) { j["mc"]["method"] = f.method; });
    add(sub->add_option("--a", f.a), [&](json& j) { j["exceedance"]["a"] = f.a; });
    add(sub->add_option("--b", f.b), [&](json& j) { j["exceedance"]["b"] = f.b; });
    add(sub->add_option("--beta", f.beta), [&](json& j) { j["exceedance"]["beta"] = f.beta; });
    add(sub->add_option("--exceedance-paths", f.exc_paths, "0 = size from the pilot batch"),
        [&](json& j) { j["exceedance"]["n_paths"] = f.exc_paths; });
    add(sub->add_option("--pilot-paths", f.pilot),
        [&](json& j) { j["exceedance"]["pilot_paths"] = f.pilot; });
    add(sub->add_option("--max-paths", f.max_paths),
        [&](json& j) { j["exceedance"]["max_paths"] = f.max_paths; });
    add(sub->add_option("--reference-paths", f.ref_paths),
        [&](json& j) { j["exceedance"]["reference_paths"] = f.ref_paths; });
    add(sub->add_option("--H-ref", f.H_ref, "reference H_{B_kappa} for symbolic Pickands values"),
        [&](json& j) { j["H_ref"] = f.H_ref; });
    add(sub->add_option("--format", f.format, "csv or json"),
        [&](json& j) { j["output"]["format"] = f.format; });
    add(sub->add_option("-o,--output", f.output, "output file ('-' for stdout)"),
        [&](json& j) { j["output"]["path"] = f.output; });
    subs.emplace_back(sub, std::move(opts));
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationError;
  }

  if (auto level = spdlog::level::from_str(log_level);
      level != spdlog::level::off || log_level == "off") {
    spdlog::set_level(level);
  } else {
    std::cerr << "error: unknown log level '" << log_level << "'\n";
    return kValidationError;
  }

  return guarded([&] {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw ParameterError(fmt::format("cannot read config file '{}'", config_path));
      std::stringstream text;
      text << in.rdbuf();
      try {
        cfg = json::parse(text.str());
      } catch (const json::parse_error& e) {
        throw ParameterError(fmt::format("config '{}': {}", config_path, e.what()));
      }
      if (!cfg.is_object()) throw ParameterError("config: top level must be an object");
    }
    for (auto& [sub, opts] : subs) {
      if (!sub->parsed()) continue;
      cfg["command"] = sub->get_name();
      json overlay = json::object();
      for (auto& [opt, apply] : opts)
        if (opt->count() > 0) apply(overlay);
      cfg.merge_patch(overlay);
    }
    const bool family_given = cfg.contains("process") && cfg["process"].is_object() &&
                              cfg["process"].contains("family");
    if (!cfg.contains("command"))
      throw ParameterError("no command given (use a subcommand or --config)");
    RunConfig rc = from_json(cfg);
    if (app.get_option("--threads")->count() > 0) rc.threads = threads;
    return run_impl(rc, family_given);
  });
}

}  // namespace selfsim::cli
