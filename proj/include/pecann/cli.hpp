#pragma once

// Experiment runner behind the `pecann` executable. Needs Boost
// (property_tree) and nlohmann/json in addition to the core headers.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pecann/experiment.hpp"

namespace pecann::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Bad command line or configuration; the executable exits with status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputRootEnv = "PECANN_OUTPUT_ROOT";
inline constexpr const char* kDefaultOutputRoot = "runs";

/// Flat `section.key -> value` settings, from a file and then flags.
using Settings = std::map<std::string, std::string>;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a CSV field that holds a comma or a quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw UsageError("invalid integer for " + key + ": '" + text + "'");
  }
  return v;
}

inline double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("invalid number for " + key + ": '" + text + "'");
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw UsageError("invalid boolean for " + key + ": '" + text + "'");
}

/// "0..9" (inclusive range), "1,4,7" or a single seed.
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots != std::string::npos) {
      const long long a = parse_integer("run.seeds", part.substr(0, dots));
      const long long b = parse_integer("run.seeds", part.substr(dots + 2));
      if (a < 0 || b < a) throw UsageError("invalid seed range '" + part + "'");
      for (long long s = a; s <= b; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      const long long s = parse_integer("run.seeds", part);
      if (s < 0) throw UsageError("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (seeds.empty()) throw UsageError("no seeds given");
  return seeds;
}

/// "30,30,30" or "3x30".
inline std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> widths;
  const auto x = text.find('x');
  if (x != std::string::npos) {
    const long long n = parse_integer("network.hidden", text.substr(0, x));
    const long long w = parse_integer("network.hidden", text.substr(x + 1));
    if (n < 1) throw UsageError("network.hidden needs at least one layer");
    widths.assign(static_cast<std::size_t>(n), static_cast<int>(w));
  } else {
    for (const auto& part : split(text, ',')) widths.push_back(static_cast<int>(parse_integer("network.hidden", part)));
  }
  for (int w : widths) {
    if (w < 1) throw UsageError("hidden layer widths must be positive");
  }
  return widths;
}

inline std::string format_hidden(const std::vector<int>& hidden) {
  bool uniform = true;
  for (int w : hidden) uniform = uniform && w == hidden.front();
  if (uniform && !hidden.empty()) return std::to_string(hidden.size()) + "x" + std::to_string(hidden.front());
  std::string s;
  for (int w : hidden) s += (s.empty() ? "" : "-") + std::to_string(w);
  return s;
}

inline std::string format_points(const problems::ProblemSpec& p) {
  std::string s;
  for (const auto& [name, n] : p.points) {
    if (!s.empty()) s += ' ';
    const auto copies = p.point_copies.find(name);
    s += name + "=" + (copies != p.point_copies.end() ? std::to_string(copies->second) + "x" : "") + std::to_string(n);
  }
  return s;
}

/// Reads an INI file into `section.key` settings.
inline Settings read_settings(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("cannot read config: " + std::string(e.what()));
  }
  Settings s;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) s[section + "." + key] = trim(value.data());
  }
  return s;
}

struct RunConfig {
  std::string problem;
  std::vector<alm::Strategy> strategies;
  std::vector<std::uint64_t> seeds;
  fs::path output;
  std::optional<fs::path> data;
  /// One experiment per strategy, seed 0; per-seed copies differ only in seed.
  std::vector<Experiment> experiments;
  int progress_every = 0;
};

namespace detail {

inline const std::set<std::string>& alm_keys() {
  static const std::set<std::string> k{"epochs", "learning_rate", "smoothing", "stability", "growth",
                                       "max_penalty", "initial_multiplier", "initial_penalty"};
  return k;
}

inline const std::set<std::string>& lbfgs_keys() {
  static const std::set<std::string> k{"history_size",  "max_inner_iterations", "max_function_evaluations",
                                       "wolfe_c1",      "wolfe_c2",             "max_line_search_evals",
                                       "grad_tolerance", "change_tolerance",     "reset_on_failure",
                                       "defer_last_pair"};
  return k;
}

inline const std::set<std::string>& run_keys() {
  static const std::set<std::string> k{"problem", "strategy", "seeds", "output", "mode", "batch_size",
                                       "data", "progress"};
  return k;
}

inline void apply_alm(alm::AlmConfig& c, const std::string& key, const std::string& v) {
  const std::string full = "alm." + key;
  if (key == "epochs") {
    c.epochs = static_cast<int>(parse_integer(full, v));
  } else if (key == "learning_rate") {
    c.learning_rate = parse_real(full, v);
  } else if (key == "smoothing") {
    c.smoothing = parse_real(full, v);
  } else if (key == "stability") {
    c.stability = parse_real(full, v);
  } else if (key == "growth") {
    c.growth = parse_real(full, v);
  } else if (key == "max_penalty") {
    c.max_penalty = parse_real(full, v);
  } else if (key == "initial_multiplier") {
    c.initial_multiplier = parse_real(full, v);
  } else if (key == "initial_penalty") {
    c.initial_penalty = parse_real(full, v);
  }
}

inline void apply_lbfgs(lbfgs::LbfgsConfig& c, const std::string& key, const std::string& v) {
  const std::string full = "lbfgs." + key;
  if (key == "history_size") {
    c.history_size = static_cast<int>(parse_integer(full, v));
  } else if (key == "max_inner_iterations") {
    c.max_inner_iterations = static_cast<int>(parse_integer(full, v));
  } else if (key == "max_function_evaluations") {
    c.max_function_evaluations = static_cast<int>(parse_integer(full, v));
  } else if (key == "wolfe_c1") {
    c.wolfe_c1 = parse_real(full, v);
  } else if (key == "wolfe_c2") {
    c.wolfe_c2 = parse_real(full, v);
  } else if (key == "max_line_search_evals") {
    c.max_line_search_evals = static_cast<int>(parse_integer(full, v));
  } else if (key == "grad_tolerance") {
    c.grad_tolerance = parse_real(full, v);
  } else if (key == "change_tolerance") {
    c.change_tolerance = parse_real(full, v);
  } else if (key == "reset_on_failure") {
    c.reset_on_failure = parse_bool(full, v);
  } else if (key == "defer_last_pair") {
    c.defer_last_pair = parse_bool(full, v);
  }
}

inline std::string joined_names() {
  std::string s;
  for (const auto& n : problems::registered_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace detail

/// Validates settings against the chosen problem and fills in defaults.
inline RunConfig resolve(const Settings& settings) {
  auto get = [&settings](const std::string& key) -> std::optional<std::string> {
    const auto it = settings.find(key);
    if (it == settings.end()) return std::nullopt;
    return it->second;
  };

  const auto problem_name = get("run.problem");
  if (!problem_name || problem_name->empty()) {
    throw UsageError("no problem given (registered: " + detail::joined_names() + ")");
  }
  problems::ProblemSpec problem;
  try {
    problem = problems::find_problem(*problem_name);
  } catch (const ConfigurationError& e) {
    throw UsageError(e.what());
  }

  RunConfig rc;
  rc.problem = problem.name;
  for (const auto& name : split(get("run.strategy").value_or("apu"), ',')) {
    try {
      rc.strategies.push_back(alm::parse_strategy(name));
    } catch (const ConfigurationError& e) {
      throw UsageError(e.what());
    }
  }
  rc.seeds = parse_seeds(get("run.seeds").value_or("0"));
  if (const auto out = get("run.output")) {
    rc.output = *out;
  } else if (const char* env = std::getenv(kOutputRootEnv)) {
    rc.output = env;
  } else {
    rc.output = kDefaultOutputRoot;
  }
  if (const auto p = get("run.progress")) rc.progress_every = static_cast<int>(parse_integer("run.progress", *p));

  problems::BuildOptions build = problem.default_options();
  if (const auto m = get("run.mode")) {
    try {
      build.mode = alm::parse_mode(*m);
    } catch (const ConfigurationError& e) {
      throw UsageError(e.what());
    }
  }
  std::optional<int> batch;
  if (const auto b = get("run.batch_size"); b && !b->empty()) {
    batch = static_cast<int>(parse_integer("run.batch_size", *b));
  }
  if (const auto d = get("run.data"); d && !d->empty()) {
    if (problem.name.rfind("cavity", 0) != 0) throw UsageError("run.data applies to the cavity problems only");
    rc.data = *d;
  }

  std::vector<int> hidden;
  std::optional<int> data_points;
  std::optional<int> grid_n0, grid_n1;
  for (const auto& [key, value] : settings) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const std::string name = dot == std::string::npos ? "" : key.substr(dot + 1);
    if (section == "run") {
      if (!detail::run_keys().contains(name)) throw UsageError("unknown setting '" + key + "'");
    } else if (section == "network") {
      if (name != "hidden") throw UsageError("unknown setting '" + key + "'");
      hidden = parse_hidden(value);
    } else if (section == "points") {
      const long long n = parse_integer(key, value);
      if (n < 1) throw UsageError(key + " must be positive");
      if (name == "data" && rc.data) {
        data_points = static_cast<int>(n);
      } else if (problem.points.contains(name)) {
        build.points[name] = static_cast<int>(n);
      } else {
        throw UsageError("problem " + problem.name + " has no point group '" + name + "'");
      }
    } else if (section == "alm") {
      if (!detail::alm_keys().contains(name)) throw UsageError("unknown setting '" + key + "'");
    } else if (section == "lbfgs") {
      if (!detail::lbfgs_keys().contains(name)) throw UsageError("unknown setting '" + key + "'");
    } else if (section == "grid") {
      if (name == "n0") {
        grid_n0 = static_cast<int>(parse_integer(key, value));
      } else if (name == "n1") {
        grid_n1 = static_cast<int>(parse_integer(key, value));
      } else {
        throw UsageError("unknown setting '" + key + "'");
      }
    } else {
      throw UsageError("unknown setting '" + key + "'");
    }
  }
  if (grid_n0) problem.grid.n0 = *grid_n0;
  if (grid_n1) problem.grid.n1 = *grid_n1;
  if (problem.grid.n0 < 2 || problem.grid.n1 < 2) throw UsageError("grid sizes must be at least 2");

  if (rc.data) {
    try {
      const PointSet table = problems::read_velocity_samples(*rc.data);
      build.data = data_points ? problems::pick_samples(table, *data_points, 11) : table;
    } catch (const ConfigurationError& e) {
      throw UsageError(e.what());
    }
  }

  for (alm::Strategy s : rc.strategies) {
    Experiment e = make_experiment(problem, s, 0);
    e.build = build;
    e.hidden = hidden;
    e.alm.batch_size = batch;
    for (const auto& [key, value] : settings) {
      if (key.rfind("alm.", 0) == 0) detail::apply_alm(e.alm, key.substr(4), value);
      if (key.rfind("lbfgs.", 0) == 0) detail::apply_lbfgs(e.lbfgs, key.substr(6), value);
    }
    try {
      e.alm.validate();
      e.lbfgs.validate();
    } catch (const ConfigurationError& err) {
      throw UsageError(err.what());
    }
    rc.experiments.push_back(std::move(e));
  }
  return rc;
}

/// Every setting a run used, defaults included.
inline json resolved_config(const Experiment& e, const RunConfig& rc) {
  json j;
  j["run"] = {{"problem", e.problem.name},
              {"strategy", alm::to_string(e.alm.strategy)},
              {"seed", e.seed},
              {"mode", alm::to_string(e.build.mode)},
              {"batch_size", e.alm.batch_size ? json(*e.alm.batch_size) : json(nullptr)},
              {"resample_each_epoch", e.problem.resample_each_epoch},
              {"data", rc.data ? json(rc.data->string()) : json(nullptr)},
              {"output", rc.output.string()}};
  j["network"] = {{"layers", e.layer_sizes()}, {"activation", "tanh"}};
  json points = json::object();
  for (const auto& [name, n] : e.build.points) points[name] = n;
  if (e.build.data) points["data_samples"] = e.build.data->size();
  j["points"] = points;
  j["alm"] = {{"epochs", e.alm.epochs},
              {"learning_rate", e.alm.learning_rate},
              {"smoothing", e.alm.smoothing},
              {"stability", e.alm.stability},
              {"growth", e.alm.growth},
              {"max_penalty", e.alm.max_penalty},
              {"initial_multiplier", e.alm.lambda0()},
              {"initial_penalty", e.alm.initial_penalty}};
  j["lbfgs"] = {{"history_size", e.lbfgs.history_size},
                {"max_inner_iterations", e.lbfgs.max_inner_iterations},
                {"max_function_evaluations", e.lbfgs.max_function_evaluations},
                {"wolfe_c1", e.lbfgs.wolfe_c1},
                {"wolfe_c2", e.lbfgs.wolfe_c2},
                {"max_line_search_evals", e.lbfgs.max_line_search_evals},
                {"grad_tolerance", e.lbfgs.grad_tolerance},
                {"change_tolerance", e.lbfgs.change_tolerance},
                {"reset_on_failure", e.lbfgs.reset_on_failure},
                {"defer_last_pair", e.lbfgs.defer_last_pair}};
  j["grid"] = {{"n0", e.problem.grid.n0}, {"n1", e.problem.grid.n1}};
  json notes = json::object();
  for (const auto& [k, v] : e.problem.notes) notes[k] = v;
  j["notes"] = notes;
  return j;
}

inline void write_penalties_csv(std::ostream& out, const alm::TrainResult& r) {
  out << "epoch";
  for (const auto& g : r.groups) out << ",mu_" << g.name;
  out << '\n';
  auto row = [&out](const alm::MetricsRecord& m) {
    out << m.epoch;
    for (double mu : m.penalty) out << ',' << format_double(mu);
    out << '\n';
  };
  row(r.initial);
  for (const auto& m : r.state.history) row(m);
}

/// The trained network on the problem grid, with exact values when known.
inline void write_solution_grid(std::ostream& out, const problems::ProblemSpec& p, const DenseNetwork& net) {
  const Eigen::MatrixXd pts = problems::detail::grid_points(p.domain, p.grid);
  const Eigen::MatrixXd pred = evaluate_network(net, pts);
  for (int i = 0; i < p.input_dim(); ++i) out << (i ? "," : "") << p.inputs[i];
  for (const auto& o : p.outputs) out << ',' << o;
  if (p.exact) {
    for (const auto& o : p.outputs) out << ",exact_" << o;
  }
  out << '\n';
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    for (int i = 0; i < p.input_dim(); ++i) out << (i ? "," : "") << format_double(pts(i, j));
    for (int o = 0; o < p.output_dim(); ++o) out << ',' << format_double(pred(o, j));
    if (p.exact) {
      const Eigen::VectorXd e = (*p.exact)(pts.col(j));
      for (int o = 0; o < p.output_dim(); ++o) out << ',' << format_double(e[o]);
    }
    out << '\n';
  }
}

inline json summary_json(const Experiment& e, const RunConfig& rc, const ExperimentResult& r) {
  json j;
  j["status"] = r.train.failure ? "FAILED" : "OK";
  j["problem"] = e.problem.name;
  j["strategy"] = alm::to_string(e.alm.strategy);
  j["seed"] = e.seed;
  j["epochs"] = r.train.state.epoch;
  if (r.report) {
    const auto& m = r.report->primary;
    j["rel_l2"] = m.rel_l2;
    j["rel_l2_" + e.problem.outputs[0]] = m.rel_l2;
    j["l_inf"] = m.l_inf;
    j["rms_standard"] = m.rms_standard;
    j["rms_printed"] = m.rms_printed;
    j["mae"] = m.mae;
    for (const auto& [k, v] : r.report->extra) j[k] = v;
  }
  j["wallclock_s"] = r.train.seconds;
  j["function_evaluations"] = r.train.state.function_evaluations;
  j["line_search_failures"] = r.train.state.line_search_failures;
  if (r.train.failure) {
    const auto& f = *r.train.failure;
    j["failure"] = {{"epoch", f.epoch}, {"group", f.group}, {"message", f.message}};
  }
  j["config"] = resolved_config(e, rc);
  return j;
}

inline fs::path run_directory(const RunConfig& rc, alm::Strategy s, std::uint64_t seed) {
  return rc.output / rc.problem / alm::to_string(s) / ("seed_" + std::to_string(seed));
}

inline void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Mean and sample standard deviation.
inline std::pair<double, double> mean_stddev(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

/// Trains every (strategy, seed) pair and writes the artifacts. Returns the
/// process exit status: 0, or 1 when any run aborted.
inline int run(const RunConfig& rc, std::ostream& log) {
  bool any_failed = false;
  std::vector<std::string> sweep_rows;
  for (const Experiment& base : rc.experiments) {
    std::vector<double> errors;
    int failed = 0;
    for (std::uint64_t seed : rc.seeds) {
      Experiment e = base;
      e.seed = seed;
      const fs::path dir = run_directory(rc, e.alm.strategy, seed);
      fs::create_directories(dir);
      const std::string tag = e.problem.name + " " + alm::to_string(e.alm.strategy) + " seed " + std::to_string(seed);
      alm::EpochCallback progress;
      if (rc.progress_every > 0) {
        progress = [&log, &tag, every = rc.progress_every](const alm::MetricsRecord& m, auto, const auto&) {
          if (m.epoch % every == 0) log << tag << " epoch " << m.epoch << " J=" << m.objective << std::endl;
        };
      }
      const ExperimentResult r = run_experiment(e, progress);
      write_file(dir / "metrics.csv", [&](std::ostream& o) { alm::write_metrics_csv(o, r.train); });
      write_file(dir / "penalties.csv", [&](std::ostream& o) { write_penalties_csv(o, r.train); });
      if (e.build.mode == alm::ConstraintMode::pointwise) {
        write_file(dir / "lambda_hist.csv", [&](std::ostream& o) {
          alm::write_multiplier_csv(o, alm::export_multiplier_distribution(r.train.groups));
        });
      }
      write_file(dir / "solution_grid.csv", [&](std::ostream& o) { write_solution_grid(o, e.problem, r.network); });
      write_file(dir / "summary.json", [&](std::ostream& o) { o << summary_json(e, rc, r).dump(2) << '\n'; });
      if (r.train.failure) {
        any_failed = true;
        ++failed;
        log << tag << ": FAILED at epoch " << r.train.failure->epoch << " (" << r.train.failure->message << ")\n";
      } else {
        if (r.report) errors.push_back(r.report->primary.rel_l2);
        log << tag << ": " << r.train.state.epoch << " epochs";
        if (r.report) log << ", rel_l2 " << r.report->primary.rel_l2;
        log << " (" << r.train.seconds << " s)\n";
      }
    }
    const auto [mean, sd] = mean_stddev(errors);
    sweep_rows.push_back(alm::to_string(base.alm.strategy) + "," + std::to_string(rc.seeds.size()) + "," +
                         std::to_string(failed) + "," + format_double(mean) + "," + format_double(sd));
  }
  const fs::path sweep = rc.output / rc.problem / "sweep_summary.csv";
  write_file(sweep, [&](std::ostream& o) {
    o << "strategy,seeds,failed,mean_rel_l2,stddev_rel_l2\n";
    for (const auto& row : sweep_rows) o << row << '\n';
  });
  return any_failed ? 1 : 0;
}

/// Registered problems with their default settings.
inline void list_problems(std::ostream& out) {
  out << "name,inputs,outputs,net,points,epochs,max_inner,history_size,resample,title\n";
  for (const auto& p : problems::registry()) {
    std::string in, o;
    for (const auto& s : p.inputs) in += (in.empty() ? "" : " ") + s;
    for (const auto& s : p.outputs) o += (o.empty() ? "" : " ") + s;
    out << p.name << ',' << in << ',' << o << ',' << format_hidden(p.hidden) << ',' << format_points(p) << ','
        << p.epochs << ',' << p.optimizer.max_inner_iterations << ',' << p.optimizer.history_size << ',' << (p.resample_each_epoch ? "yes" : "no")
        << ',' << csv_field(p.title) << '\n';
  }
}

/// One CSV row per summary.json found under `root`, in path order.
inline int report(const fs::path& root, std::ostream& out) {
  if (!fs::exists(root)) throw UsageError("no such directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no summary.json under " + root.string());
  const std::vector<std::string> metrics{"rel_l2", "l_inf", "rms_standard", "rms_printed", "mae", "wallclock_s"};
  out << "problem,strategy,seed,status,epochs";
  for (const auto& m : metrics) out << ',' << m;
  out << '\n';
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("cannot parse " + f.string() + ": " + e.what());
    }
    out << j.value("problem", "") << ',' << j.value("strategy", "") << ',' << j.value("seed", 0) << ','
        << j.value("status", "") << ',' << j.value("epochs", 0);
    for (const auto& m : metrics) {
      out << ',';
      if (j.contains(m) && j[m].is_number()) out << format_double(j[m].get<double>());
    }
    out << '\n';
  }
  return 0;
}

}  // namespace pecann::cli
