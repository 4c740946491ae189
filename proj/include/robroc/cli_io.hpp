#ifndef ROBROC_CLI_IO_HPP
#define ROBROC_CLI_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "robroc/adaptive_weights.hpp"
#include "robroc/model_core.hpp"
#include "robroc/roc_engine.hpp"
#include "robroc/sim_lab.hpp"

namespace robroc {

/// Malformed input file or configuration. Maps to exit code 1.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace io {

/// Shortest text with 17 significant digits; parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ParseError(where + ": expected a number, got '" + t + "'");
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite value '" + t + "'");
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  return f;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace io

// ---------------------------------------------------------------------------
// Dataset files: header "group,y,x1,...,xp", group in {D, H}. Lines starting
// with '#' are comments.

struct Dataset {
  PopulationSample diseased;
  PopulationSample healthy;
  std::vector<std::string> covariate_names;
};

inline Dataset parse_dataset(std::string_view text, const std::string& name = "dataset") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<double> yd, xd, yh, xh;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto where = name + ":" + std::to_string(lineno);
    auto cells = io::split(t, ',');
    if (header.empty()) {
      if (cells.size() < 3 || cells[0] != "group" || cells[1] != "y")
        throw ParseError(where + ": header must be 'group,y,x1[,x2...]'");
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].empty()) throw ParseError(where + ": missing value in column '" + header[c] + "'");
    const bool is_d = cells[0] == "D";
    if (!is_d && cells[0] != "H") throw ParseError(where + ": group must be D or H, got '" + cells[0] + "'");
    (is_d ? yd : yh).push_back(io::parse_double(cells[1], where));
    for (std::size_t c = 2; c < cells.size(); ++c) (is_d ? xd : xh).push_back(io::parse_double(cells[c], where));
  }
  if (header.empty()) throw ParseError(name + ": missing header line");
  if (yd.empty() || yh.empty()) throw ParseError(name + ": both groups D and H must be present");
  const std::size_t dim = header.size() - 2;
  return Dataset{PopulationSample(Population::Diseased, std::move(yd), std::move(xd), dim),
                 PopulationSample(Population::Healthy, std::move(yh), std::move(xh), dim),
                 std::vector<std::string>(header.begin() + 2, header.end())};
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_file(path), path.filename().string());
}

inline void write_dataset(std::ostream& out, const Dataset& d, std::string_view comment = {}) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "group,y";
  for (const auto& n : d.covariate_names) out << ',' << n;
  out << '\n';
  for (const PopulationSample* s : {&d.diseased, &d.healthy}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      out << to_string(s->label()) << ',' << io::format_double(s->y()[i]);
      for (double v : s->x(i)) out << ',' << io::format_double(v);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Run configuration: INI-style sections of flat key = value pairs.

struct GridSpec {
  double p_min = 0.01, p_max = 0.99, p_step = 0.01;
  std::optional<double> x_min, x_max;
  std::optional<double> x_step;  // 40 intervals when unset
};

struct RunConfig {
  // [model]
  Family family = Family::Linear;
  bool intercept = true;
  std::optional<Vector> beta_init_D, beta_init_H;
  // [robust]
  MMConfig mm;
  // [weights]
  std::optional<WeightKind> weight_kind;
  double eta = 2.5;
  // [roc]
  Variant variant = Variant::Robust;
  MarkerTransform transform = MarkerTransform::None;
  GridSpec grid;
  // [sim]
  ScenarioModel sim_model = ScenarioModel::Linear51;
  std::size_t n_D = 100, n_H = 100, n_rep = 200;
  ContaminationScheme contamination;
  std::vector<Variant> sim_variants{Variant::Classical, Variant::Robust};
  std::size_t threads = 0;
  bool export_auc = true;
  // [run]
  std::uint64_t seed = 0;
  std::string out = "out";

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.variant = variant;
    p.family = family;
    p.intercept = intercept;
    p.mm = mm;
    p.mm.seed = seed;
    p.weight_kind = weight_kind;
    p.eta = eta;
    return p;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(where + ": expected true/false, got '" + v + "'");
}

inline std::size_t parse_count(const std::string& v, const std::string& where) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError(where + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& where) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError(where + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

inline Vector parse_vector(const std::string& v, const std::string& where) {
  const auto cells = io::split(v, ',');
  Vector out(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) out(static_cast<Eigen::Index>(k)) = io::parse_double(cells[k], where);
  return out;
}

template <class F>
auto rethrow_as_parse(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline Family parse_family(const std::string& v, const std::string& where) {
  if (v == "linear") return Family::Linear;
  if (v == "exponential") return Family::Exponential;
  throw ParseError(where + ": family must be linear or exponential, got '" + v + "'");
}

inline WeightKind parse_weight_kind(const std::string& v, const std::string& where) {
  if (v == "hard") return WeightKind::HardRejection;
  if (v == "smooth") return WeightKind::SmoothPolynomial;
  throw ParseError(where + ": weights must be hard or smooth, got '" + v + "'");
}

}  // namespace detail

/// Applies one "section.key = value" setting; unknown keys are rejected.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& value,
                          const std::string& where) {
  using namespace detail;
  const std::string k = section + "." + key;
  auto num = [&] { return io::parse_double(value, where); };
  if (k == "model.family") c.family = parse_family(value, where);
  else if (k == "model.intercept") c.intercept = parse_bool(value, where);
  else if (k == "model.beta_init_d") c.beta_init_D = parse_vector(value, where);
  else if (k == "model.beta_init_h") c.beta_init_H = parse_vector(value, where);
  else if (k == "robust.rho_s_tuning") c.mm.rho_s_tuning = num();
  else if (k == "robust.rho_m_tuning") c.mm.rho_m_tuning = num();
  else if (k == "robust.breakdown") c.mm.breakdown_b = num();
  else if (k == "robust.n_subsamples") c.mm.n_subsamples = parse_count(value, where);
  else if (k == "robust.max_iter") c.mm.max_iter = parse_count(value, where);
  else if (k == "robust.tol") c.mm.tol = num();
  else if (k == "weights.kind") c.weight_kind = parse_weight_kind(value, where);
  else if (k == "weights.eta") c.eta = num();
  else if (k == "roc.variant") c.variant = rethrow_as_parse(where, [&] { return parse_variant(value); });
  else if (k == "roc.transform") c.transform = rethrow_as_parse(where, [&] { return parse_transform(value); });
  else if (k == "roc.p_min") c.grid.p_min = num();
  else if (k == "roc.p_max") c.grid.p_max = num();
  else if (k == "roc.p_step") c.grid.p_step = num();
  else if (k == "roc.x_min") c.grid.x_min = num();
  else if (k == "roc.x_max") c.grid.x_max = num();
  else if (k == "roc.x_step") c.grid.x_step = num();
  else if (k == "sim.model") c.sim_model = rethrow_as_parse(where, [&] { return parse_scenario_model(value); });
  else if (k == "sim.n_d") c.n_D = parse_count(value, where);
  else if (k == "sim.n_h") c.n_H = parse_count(value, where);
  else if (k == "sim.n_rep") c.n_rep = parse_count(value, where);
  else if (k == "sim.contamination")
    c.contamination.kind = rethrow_as_parse(where, [&] { return parse_contamination(value); });
  else if (k == "sim.delta") c.contamination.delta = num();
  else if (k == "sim.shift") c.contamination.shift_S = num();
  else if (k == "sim.diseased_line") c.contamination.diseased_line = parse_bool(value, where);
  else if (k == "sim.variants") {
    c.sim_variants.clear();
    for (const auto& v : io::split(value, ','))
      c.sim_variants.push_back(rethrow_as_parse(where, [&] { return parse_variant(v); }));
  } else if (k == "sim.threads") c.threads = parse_count(value, where);
  else if (k == "sim.export_auc") c.export_auc = parse_bool(value, where);
  else if (k == "run.seed") c.seed = parse_u64(value, where);
  else if (k == "run.out") c.out = value;
  else throw ParseError(where + ": unknown key '" + k + "'");
}

/// Cross-field checks once all settings are in.
inline void validate(const RunConfig& c) {
  try {
    c.mm.validate();
    c.contamination.validate(c.sim_model);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!(c.eta > 0.0)) throw ParseError("config: weights.eta must be positive");
  if (c.n_rep < 1) throw ParseError("config: sim.n_rep must be >= 1");
  if (c.sim_variants.empty()) throw ParseError("config: sim.variants must name at least one variant");
  if (c.beta_init_D && static_cast<std::size_t>(c.beta_init_D->size()) != 2 && c.family == Family::Exponential)
    throw ParseError("config: model.beta_init_d must have 2 entries for the exponential family");
  if (c.beta_init_H && static_cast<std::size_t>(c.beta_init_H->size()) != 2 && c.family == Family::Exponential)
    throw ParseError("config: model.beta_init_h must have 2 entries for the exponential family");
}

inline RunConfig parse_config(std::string_view text, const std::string& name = "config") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  // locate keys for diagnostics
  std::map<std::string, std::size_t> line_of;
  {
    std::istringstream scan{std::string(text)};
    std::string line, section;
    std::size_t n = 0;
    while (std::getline(scan, line)) {
      ++n;
      const std::string t = io::trim(line);
      if (t.empty() || t.front() == ';' || t.front() == '#') continue;
      if (t.front() == '[') {
        section = io::trim(std::string_view(t).substr(1, t.find(']') - 1));
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) line_of.emplace(section + "." + io::trim(std::string_view(t).substr(0, eq)), n);
    }
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParseError(name + ":" + std::to_string(line_of[section]) + ": key '" + section +
                                       "' must belong to a section");
    for (const auto& [key, value] : body) {
      const auto where = name + ":" + std::to_string(line_of[section + "." + key]);
      apply_setting(c, section, key, io::trim(value.get_value<std::string>()), where);
    }
  }
  validate(c);
  return c;
}

inline RunConfig read_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.filename().string());
}

// ---------------------------------------------------------------------------
// Surface and curve exports.

inline void write_surface_csv(std::ostream& out, const RocSurface& s) {
  out << "x";
  for (double p : s.grid.p_grid) out << ',' << io::format_double(p);
  out << '\n';
  for (std::size_t i = 0; i < s.n_x(); ++i) {
    out << io::format_double(s.grid.x_grid[i]);
    for (std::size_t j = 0; j < s.n_p(); ++j) out << ',' << io::format_double(s.at(i, j));
    out << '\n';
  }
}

inline RocSurface parse_surface_csv(std::string_view text, const std::string& name = "surface") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> p, x, values;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto where = name + ":" + std::to_string(lineno);
    const auto cells = io::split(line, ',');
    if (p.empty()) {
      if (cells.size() < 2 || cells[0] != "x") throw ParseError(where + ": header must be 'x,p1,p2,...'");
      for (std::size_t k = 1; k < cells.size(); ++k) p.push_back(io::parse_double(cells[k], where));
      continue;
    }
    if (cells.size() != p.size() + 1) throw ParseError(where + ": row width does not match header");
    x.push_back(io::parse_double(cells[0], where));
    for (std::size_t k = 1; k < cells.size(); ++k) values.push_back(io::parse_double(cells[k], where));
  }
  if (p.empty() || x.empty()) throw ParseError(name + ": empty surface");
  RocSurface s;
  try {
    s.grid = EvalGrid(std::move(p), std::move(x));
  } catch (const std::invalid_argument& e) {
    throw ParseError(name + ": " + e.what());
  }
  s.values = std::move(values);
  return s;
}

inline void write_auc_csv(std::ostream& out, const AucCurve& a) {
  out << "x,auc\n";
  for (std::size_t i = 0; i < a.x_grid.size(); ++i)
    out << io::format_double(a.x_grid[i]) << ',' << io::format_double(a.auc[i]) << '\n';
}

inline void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "model,contamination,delta,shift,n_d,n_h,n_rep,seed,variant,mean_mse,mean_ks,nonconverged_fits\n";
  for (const auto& v : r.variants) {
    out << to_string(r.scenario.model) << ',' << to_string(r.contamination.kind) << ','
        << io::format_double(r.contamination.delta) << ',' << io::format_double(r.contamination.shift_S) << ','
        << r.scenario.n_D << ',' << r.scenario.n_H << ',' << r.n_rep << ',' << r.scenario.seed << ','
        << to_string(v.variant) << ',' << io::format_double(v.mean_mse) << ',' << io::format_double(v.mean_ks) << ','
        << v.nonconverged << '\n';
  }
}

inline void write_replications_csv(std::ostream& out, const MetricsReport& r) {
  out << "replication,variant,mse,ks\n";
  for (std::size_t rep = 0; rep < r.n_rep; ++rep)
    for (const auto& v : r.variants)
      out << rep << ',' << to_string(v.variant) << ',' << io::format_double(v.mse[rep]) << ','
          << io::format_double(v.ks[rep]) << '\n';
}

/// Rows = replication, columns = x grid.
inline void write_auc_matrix_csv(std::ostream& out, const MetricsReport& r, const VariantMetrics& v) {
  out << "replication";
  for (double x : r.grid.x_grid) out << ',' << io::format_double(x);
  out << '\n';
  for (std::size_t rep = 0; rep < v.auc.size(); ++rep) {
    out << rep;
    for (double a : v.auc[rep]) out << ',' << io::format_double(a);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Commands.

namespace detail {

inline nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json fit_json(const RobustFit& f) {
  return {{"method", to_string(f.method)},       {"beta_hat", to_json(f.beta_hat)},
          {"sigma_hat", f.sigma_hat},            {"converged", f.converged},
          {"iterations", f.iterations},          {"scale_degenerate", f.scale_degenerate}};
}

inline Dataset transformed(const Dataset& d, MarkerTransform t) {
  if (t == MarkerTransform::None) return d;
  auto apply = [&](const PopulationSample& s) {
    try {
      return s.with_y(transform_marker(s.y(), t));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("marker transform: ") + e.what());
    }
  };
  return Dataset{apply(d.diseased), apply(d.healthy), d.covariate_names};
}

inline std::optional<Vector> init_for(const RunConfig& c, Population p) {
  return p == Population::Diseased ? c.beta_init_D : c.beta_init_H;
}

inline RobustFit fit_for(const PopulationSample& s, const RunConfig& c) {
  PipelineConfig pc = c.pipeline();
  if (s.label() == Population::Healthy) pc.mm.seed += 1;
  const std::size_t q = pc.family == Family::Linear ? s.dim() + (c.intercept ? 1 : 0) : 2;
  if (s.size() <= q)
    throw ParseError(std::string("population ") + to_string(s.label()) + " has too few observations to fit");
  return fit_population(s, pc, init_for(c, s.label()));
}

inline EvalGrid grid_for(const RunConfig& c, const Dataset& d) {
  if (d.diseased.dim() != 1) throw ParseError("ROC surfaces need a scalar covariate");
  double lo = c.grid.x_min.value_or(std::numeric_limits<double>::infinity());
  double hi = c.grid.x_max.value_or(-std::numeric_limits<double>::infinity());
  if (!c.grid.x_min || !c.grid.x_max) {
    double dlo = std::numeric_limits<double>::infinity(), dhi = -dlo;
    for (const PopulationSample* s : {&d.diseased, &d.healthy})
      for (double v : s->x_flat()) {
        dlo = std::min(dlo, v);
        dhi = std::max(dhi, v);
      }
    if (!c.grid.x_min) lo = dlo;
    if (!c.grid.x_max) hi = dhi;
  }
  try {
    auto x = hi > lo ? equidistant(lo, hi, c.grid.x_step.value_or((hi - lo) / 40.0)) : std::vector<double>{lo};
    return EvalGrid(equidistant(c.grid.p_min, c.grid.p_max, c.grid.p_step), std::move(x));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
}

template <class F>
void write_file(const std::filesystem::path& p, F&& body) {
  auto f = io::open_out(p);
  body(f);
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace detail

/// Steps 1-2 per population, with adaptive-weight diagnostics.
inline nlohmann::json cmd_fit(const std::filesystem::path& dataset_path, const RunConfig& cfg,
                              const std::filesystem::path& out_dir) {
  const Dataset data = detail::transformed(read_dataset(dataset_path), cfg.transform);
  nlohmann::json report;
  report["dataset"] = dataset_path.filename().string();
  report["variant"] = to_string(cfg.variant);
  report["family"] = cfg.family == Family::Linear ? "linear" : "exponential";
  report["weights"] = to_string(cfg.pipeline().effective_weight_kind());
  report["eta"] = cfg.eta;
  report["warnings"] = nlohmann::json::array();

  const PipelineConfig pc = cfg.pipeline();
  for (const PopulationSample* s : {&data.diseased, &data.healthy}) {
    const RobustFit fit = detail::fit_for(*s, cfg);
    nlohmann::json pop = detail::fit_json(fit);
    pop["n"] = s->size();
    if (fit.scale_degenerate || !(fit.sigma_hat > 0.0)) {
      std::vector<double> raw;
      for (std::size_t i = 0; i < s->size(); ++i) raw.push_back(s->y()[i] - fit.mean_at(s->x(i)));
      pop["residuals"] = raw;
      pop["residuals_standardized"] = false;
      report["warnings"].push_back(std::string("degenerate residual scale in population ") + to_string(s->label()) +
                                   "; weights not computed");
    } else {
      const ResidualSet r = standardized_residuals(*s, fit);
      const WeightedEcdf w =
          build_weighted_ecdf(r, WeightFunction::of(pc.effective_weight_kind()), ReferenceDistribution::standard_normal(),
                              cfg.eta);
      pop["residuals"] = r.r;
      pop["residuals_standardized"] = true;
      pop["weights"] = w.weights();
      pop["d_n"] = w.d_n();
      pop["t_bar_n"] = w.t_bar_n();
      pop["t_n"] = w.t_n();
      pop["flagged"] = w.rejected();
    }
    report[s->label() == Population::Diseased ? "diseased" : "healthy"] = std::move(pop);
  }
  detail::write_file(out_dir / "fit_report.json", [&](std::ostream& f) { f << report.dump(2) << '\n'; });
  return report;
}

struct RocResult {
  RocSurface surface;
  AucCurve auc;
  nlohmann::json meta;
};

/// Full pipeline: surface CSV, AUC CSV and a JSON sidecar.
inline RocResult cmd_roc(const std::filesystem::path& dataset_path, const RunConfig& cfg,
                         const std::filesystem::path& out_dir) {
  const Dataset data = detail::transformed(read_dataset(dataset_path), cfg.transform);
  const EvalGrid grid = detail::grid_for(cfg, data);
  const PipelineConfig pc = cfg.pipeline();
  RobustFit fD = detail::fit_for(data.diseased, cfg);
  RobustFit fH = detail::fit_for(data.healthy, cfg);
  const ConditionalRocModel model = assemble_model(data.diseased, fD, data.healthy, fH, cfg.variant, pc);

  RocResult res{roc_surface(model, grid), {}, {}};
  res.auc = auc_curve(res.surface);
  res.meta = {{"dataset", dataset_path.filename().string()},
              {"variant", to_string(cfg.variant)},
              {"family", cfg.family == Family::Linear ? "linear" : "exponential"},
              {"weights", to_string(pc.effective_weight_kind())},
              {"eta", cfg.eta},
              {"seed", cfg.seed},
              {"diseased", detail::fit_json(fD)},
              {"healthy", detail::fit_json(fH)},
              {"n_x", grid.x_grid.size()},
              {"n_p", grid.p_grid.size()}};
  for (const auto& [key, dist] : {std::pair{"diseased", &model.g_D}, std::pair{"healthy", &model.g_H}}) {
    if (const auto* e = dist->ecdf(); e && std::isfinite(e->t_n())) {
      res.meta[key]["d_n"] = e->d_n();
      res.meta[key]["t_n"] = e->t_n();
      res.meta[key]["flagged"] = e->rejected();
    }
  }
  detail::write_file(out_dir / "roc_surface.csv", [&](std::ostream& f) { write_surface_csv(f, res.surface); });
  detail::write_file(out_dir / "auc.csv", [&](std::ostream& f) { write_auc_csv(f, res.auc); });
  detail::write_file(out_dir / "roc_meta.json", [&](std::ostream& f) { f << res.meta.dump(2) << '\n'; });
  return res;
}

inline CampaignConfig campaign_config(const RunConfig& cfg) {
  CampaignConfig c;
  c.scenario = {cfg.sim_model, cfg.n_D, cfg.n_H, cfg.seed};
  c.contamination = cfg.contamination;
  c.variants = cfg.sim_variants;
  c.n_rep = cfg.n_rep;
  c.grid = default_grids(cfg.sim_model);
  c.mm = cfg.mm;
  c.weight_kind = cfg.weight_kind;
  c.eta = cfg.eta;
  c.threads = cfg.threads;
  c.keep_auc = cfg.export_auc;
  return c;
}

/// Monte Carlo campaign: metrics.csv, replications.csv, and per-variant AUC
/// matrices when export_auc is set.
inline MetricsReport cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const MetricsReport r = run_campaign(campaign_config(cfg));
  detail::write_file(out_dir / "metrics.csv", [&](std::ostream& f) { write_metrics_csv(f, r); });
  detail::write_file(out_dir / "replications.csv", [&](std::ostream& f) { write_replications_csv(f, r); });
  if (cfg.export_auc)
    for (const auto& v : r.variants)
      detail::write_file(out_dir / (std::string("auc_") + to_string(v.variant) + ".csv"),
                         [&](std::ostream& f) { write_auc_matrix_csv(f, r, v); });
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic stand-in for a glucose/age diagnostic study: 198 healthy and 88
// diseased subjects, linear in age on the -1/sqrt(glucose) scale, with six
// vertical outliers in the healthy group. Not real data.

struct SyntheticStudy {
  Dataset data;
  std::vector<std::size_t> outliers_H;  // zero-based rows within the healthy group
};

inline SyntheticStudy make_synthetic(std::uint64_t seed) {
  constexpr std::size_t n_H = 198, n_D = 88;
  const std::vector<std::size_t> outliers{36, 77, 124, 136, 140, 149};
  const std::vector<double> shifts{6.0, 7.0, 8.0, 9.0, 10.0, 12.0};  // in units of the healthy error sd
  auto rng = detail::stream_rng(seed, 0xD1AB);
  std::uniform_real_distribution<double> age(20.0, 87.5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto draw = [&](std::size_t n, double b0, double b1, double sd) {
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = age(rng);
      const double t = b0 + b1 * x[i] + sd * gauss(rng);
      y[i] = 1.0 / (t * t);  // back to the glucose scale
    }
    return std::pair{std::move(y), std::move(x)};
  };
  constexpr double sd_H = 0.004;
  auto [yd, xd] = draw(n_D, -0.090, 0.0003, 0.008);
  auto [yh, xh] = draw(n_H, -0.100, 0.0002, sd_H);
  for (std::size_t k = 0; k < outliers.size(); ++k) {
    const std::size_t i = outliers[k];
    const double t = -1.0 / std::sqrt(yh[i]) + shifts[k] * sd_H;
    yh[i] = 1.0 / (t * t);
  }
  return SyntheticStudy{Dataset{PopulationSample(Population::Diseased, std::move(yd), std::move(xd)),
                                PopulationSample(Population::Healthy, std::move(yh), std::move(xh)),
                                {"age"}},
                        outliers};
}

inline SyntheticStudy cmd_make_synthetic(const std::filesystem::path& path, std::uint64_t seed) {
  SyntheticStudy s = make_synthetic(seed);
  detail::write_file(path, [&](std::ostream& f) {
    write_dataset(f, s.data, "SYNTHETIC stand-in for a glucose/age study (not real data); seed " +
                                 std::to_string(seed));
  });
  return s;
}

}  // namespace robroc

#endif  // ROBROC_CLI_IO_HPP
