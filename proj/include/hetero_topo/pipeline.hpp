#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetero_topo/dsgd.hpp"
#include "hetero_topo/errors.hpp"
#include "hetero_topo/heterogeneity.hpp"
#include "hetero_topo/io.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/problems.hpp"
#include "hetero_topo/topo_opt.hpp"

namespace hetero_topo {

enum class TopologySource { generator, file, learn };

struct TopologyEntry {
  std::string name;
  TopologySource source = TopologySource::generator;
  TopologyKind kind = TopologyKind::complete;  // generator
  std::filesystem::path path;                  // file
  std::size_t iterations = 0;                  // learn
  double lambda = kDefaultLambda;              // learn
  double gap_tol = 0.0;                        // learn
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  io::json problem;               // problem spec document
  std::filesystem::path base_dir; // resolves relative paths inside the config
  std::vector<TopologyEntry> topologies;
  std::size_t T = 1000;
  std::optional<double> eta;
  std::string eta_reference;      // eta = p(reference)/(8L) when eta is unset
  std::size_t record_every = 10;
  std::vector<std::uint64_t> sim_seeds;
  double epsilon = 1e-3;
  std::size_t samples = 2000;
  std::size_t trajectory_steps = 80;
  double table_lambda = kDefaultLambda;  // lambda of the g_value column
};

namespace detail {

inline std::vector<std::uint64_t> seed_list(const io::json& sim, const std::string& path, std::uint64_t base) {
  if (sim.contains("seeds")) return io::detail::field<std::vector<std::uint64_t>>(sim, path, "seeds");
  const auto count = io::detail::field_or<std::size_t>(sim, path, "seed_count", 5);
  if (count == 0) throw ConfigError(path, "seed_count", "must be >= 1");
  std::vector<std::uint64_t> out(count);
  for (std::size_t s = 0; s < count; ++s) out[s] = base + s;
  return out;
}

}  // namespace detail

/// Parses and validates an experiment document. `path` labels errors.
inline ExperimentConfig parse_experiment(const io::json& j, const std::string& path,
                                         const std::filesystem::path& base_dir) {
  using io::detail::field;
  using io::detail::field_or;
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.name = field_or<std::string>(j, path, "name", "experiment");
  c.seed = field<std::uint64_t>(j, path, "seed");
  c.output_dir = field_or<std::string>(j, path, "output_dir", "out/" + c.name);

  if (j.contains("problem")) {
    c.problem = j.at("problem");
  } else if (j.contains("problem_path")) {
    const auto p = base_dir / field<std::string>(j, path, "problem_path");
    if (!std::filesystem::exists(p)) throw ConfigError(path, "problem_path", "file not found: " + p.string());
    try {
      c.problem = io::json::parse(io::read_file(p));
    } catch (const io::json::parse_error& e) {
      throw ConfigError(p.string(), "<document>", e.what());
    }
  } else {
    throw ConfigError(path, "problem", "either problem or problem_path is required");
  }

  if (!j.contains("topologies") || !j.at("topologies").is_array() || j.at("topologies").empty())
    throw ConfigError(path, "topologies", "a nonempty array is required");
  std::size_t idx = 0;
  for (const auto& t : j.at("topologies")) {
    const std::string tpath = path + ":topologies[" + std::to_string(idx++) + "]";
    TopologyEntry e;
    const auto source = field_or<std::string>(t, tpath, "source", "generator");
    if (source == "generator") {
      e.source = TopologySource::generator;
      const auto kind = field<std::string>(t, tpath, "kind");
      const auto parsed = parse_topology_kind(kind);
      if (!parsed || *parsed == TopologyKind::custom_weights)
        throw ConfigError(tpath, "kind", "unknown generator '" + kind + "'");
      e.kind = *parsed;
      e.name = field_or<std::string>(t, tpath, "name", kind);
    } else if (source == "file") {
      e.source = TopologySource::file;
      e.path = base_dir / field<std::string>(t, tpath, "path");
      if (!std::filesystem::exists(e.path)) throw ConfigError(tpath, "path", "file not found: " + e.path.string());
      e.name = field_or<std::string>(t, tpath, "name", e.path.stem().string());
    } else if (source == "learn") {
      e.source = TopologySource::learn;
      e.iterations = field<std::size_t>(t, tpath, "iterations");
      if (e.iterations == 0) throw ConfigError(tpath, "iterations", "must be >= 1");
      e.lambda = field_or<double>(t, tpath, "lambda", kDefaultLambda);
      if (!(e.lambda > 0.0)) throw ConfigError(tpath, "lambda", "must be positive");
      e.gap_tol = field_or<double>(t, tpath, "gap_tol", 0.0);
      if (!(e.gap_tol >= 0.0)) throw ConfigError(tpath, "gap_tol", "must be >= 0");
      e.name = field_or<std::string>(t, tpath, "name", "fw_l" + std::to_string(e.iterations));
    } else {
      throw ConfigError(tpath, "source", "expected generator, file or learn");
    }
    for (const auto& prev : c.topologies)
      if (prev.name == e.name) throw ConfigError(tpath, "name", "duplicate topology name '" + e.name + "'");
    c.topologies.push_back(std::move(e));
  }

  const io::json sim = j.contains("simulation") ? j.at("simulation") : io::json::object();
  const std::string spath = path + ":simulation";
  c.T = field_or<std::size_t>(sim, spath, "T", 1000);
  if (sim.contains("eta")) {
    c.eta = field<double>(sim, spath, "eta");
    if (!(*c.eta >= 0.0)) throw ConfigError(spath, "eta", "must be >= 0");
  }
  c.eta_reference = field_or<std::string>(sim, spath, "eta_reference", "");
  if (!c.eta && c.eta_reference.empty())
    throw ConfigError(spath, "eta", "set eta or eta_reference (a topology name)");
  if (!c.eta) {
    const bool known = std::any_of(c.topologies.begin(), c.topologies.end(),
                                   [&](const TopologyEntry& e) { return e.name == c.eta_reference; });
    if (!known) throw ConfigError(spath, "eta_reference", "no topology named '" + c.eta_reference + "'");
  }
  c.record_every = field_or<std::size_t>(sim, spath, "record_every", 10);
  if (c.record_every == 0) throw ConfigError(spath, "record_every", "must be >= 1");
  c.sim_seeds = detail::seed_list(sim, spath, c.seed);
  c.epsilon = field_or<double>(sim, spath, "epsilon", 1e-3);
  if (!(c.epsilon > 0.0)) throw ConfigError(spath, "epsilon", "must be positive");

  const io::json meas = j.contains("measure") ? j.at("measure") : io::json::object();
  const std::string mpath = path + ":measure";
  c.samples = field_or<std::size_t>(meas, mpath, "samples", 2000);
  if (c.samples < 2) throw ConfigError(mpath, "samples", "must be >= 2");
  c.trajectory_steps = field_or<std::size_t>(meas, mpath, "trajectory_steps", 80);
  c.table_lambda = field_or<double>(j, path, "lambda", kDefaultLambda);
  if (!(c.table_lambda > 0.0)) throw ConfigError(path, "lambda", "must be positive");
  return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  io::json j;
  try {
    j = io::json::parse(io::read_file(path));
  } catch (const io::json::parse_error& e) {
    throw ConfigError(path.string(), "<document>", e.what());
  }
  return parse_experiment(j, path.string(), path.parent_path());
}

/// Built-in experiment documents.
inline std::optional<io::json> preset(const std::string& name) {
  using io::json;
  if (name == "example1") {
    return json{
        {"name", "example1"},
        {"seed", 1},
        {"output_dir", "out/example1"},
        {"problem", {{"kind", "mean_estimation"}, {"n", 16}, {"seed", 1},
                     {"params", {{"m", 10.0}, {"sigma_tilde_sq", 1.0}, {"theta0", 1.0}}}}},
        {"topologies", json::array({json{{"kind", "alternating_ring"}}, json{{"kind", "clustered_ring"}},
                                    json{{"kind", "complete"}}, json{{"kind", "identity"}}})},
        {"simulation", {{"T", 10000}, {"eta_reference", "alternating_ring"}, {"record_every", 10},
                        {"seed_count", 5}, {"epsilon", 1e-2}}},
        {"measure", {{"samples", 4000}, {"trajectory_steps", 80}}}};
  }
  if (name == "label_skew") {
    return json{
        {"name", "label_skew"},
        {"seed", 7},
        {"output_dir", "out/label_skew"},
        {"lambda", 0.1},
        {"problem", {{"kind", "softmax_label_skew"}, {"n", 20}, {"seed", 7},
                     {"params", {{"K", 5}, {"q", 4}, {"class_sep", 4.0}, {"alpha", 0.1}, {"points_per_dim", 6}}}}},
        {"topologies", json::array({json{{"source", "learn"}, {"iterations", 2}, {"lambda", 0.1}},
                                    json{{"source", "learn"}, {"iterations", 4}, {"lambda", 0.1}},
                                    json{{"source", "learn"}, {"iterations", 8}, {"lambda", 0.1}},
                                    json{{"kind", "ring"}}, json{{"kind", "complete"}},
                                    json{{"kind", "identity"}}})},
        {"simulation", {{"T", 2000}, {"eta", 0.05}, {"record_every", 10}, {"seed_count", 3}, {"epsilon", 0.1}}},
        {"measure", {{"samples", 1000}, {"trajectory_steps", 80}}}};
  }
  return std::nullopt;
}

inline std::vector<std::string> preset_names() { return {"example1", "label_skew"}; }

struct TableRow {
  std::string name;
  std::optional<double> p;
  std::optional<std::size_t> d_in_max, d_out_max;
  std::optional<double> g_value;
  std::optional<double> H_hat;
  std::optional<double> zeta_bar_sq_hat;
  std::optional<double> iterations_to_eps;  // median over seeds
  std::optional<double> final_gap;          // median over seeds
};

struct ComparisonTable {
  std::vector<TableRow> rows;
};

inline const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols{"topology",        "p",          "d_in_max",
                                             "d_out_max",       "g_value",    "H_hat",
                                             "zeta_bar_sq_hat", "iterations_to_eps", "final_gap"};
  return cols;
}

namespace detail {

template <typename T>
std::string cell(const std::optional<T>& v) {
  if (!v) return "n/a";
  if constexpr (std::is_floating_point_v<T>) return io::format_double(*v);
  else return std::to_string(*v);
}

inline std::vector<std::string> row_cells(const TableRow& r) {
  return {r.name, cell(r.p), cell(r.d_in_max), cell(r.d_out_max), cell(r.g_value), cell(r.H_hat),
          cell(r.zeta_bar_sq_hat), cell(r.iterations_to_eps), cell(r.final_gap)};
}

/// Median with unreached entries (nullopt) ordered last; nullopt if the
/// median itself is unreached.
inline std::optional<double> median(std::vector<std::optional<double>> xs) {
  if (xs.empty()) return std::nullopt;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v;
  for (const auto& x : xs) v.push_back(x ? *x : inf);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  const double med = v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  if (!std::isfinite(med)) return std::nullopt;
  return med;
}

}  // namespace detail

inline std::string table_to_csv(const ComparisonTable& t) {
  std::string out;
  const auto& cols = table_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  for (const auto& r : t.rows) {
    const auto cells = detail::row_cells(r);
    for (std::size_t c = 0; c < cells.size(); ++c) out += (c ? "," : "") + cells[c];
    out += '\n';
  }
  return out;
}

/// Fixed-width text rendering with 6 significant digits.
inline std::string table_to_text(const ComparisonTable& t) {
  auto short_cell = [](const std::string& s) {
    if (s == "n/a") return s;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') return s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> grid{table_columns()};
  for (const auto& r : t.rows) {
    auto cells = detail::row_cells(r);
    for (std::size_t c = 1; c < cells.size(); ++c) cells[c] = short_cell(cells[c]);
    grid.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      if (c) out += "  ";
      const std::string& s = grid[r][c];
      if (c == 0) out += s + std::string(width[c] - s.size(), ' ');
      else out += std::string(width[c] - s.size(), ' ') + s;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

struct PipelineResult {
  ComparisonTable table;
  io::json manifest;
};

/// Learn, measure and simulate every configured topology, then write the
/// artifact tree under config.output_dir. No wall-clock data reaches any
/// file, so reruns reproduce identical bytes.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  using io::json;
  const fs::path out = cfg.output_dir;
  const ProblemSpec spec = io::problem_from_json(cfg.problem, cfg.name + ":problem", cfg.base_dir);
  const std::size_t n = spec.n;

  json artifacts = json::object();
  auto emit = [&](const std::string& rel, const std::string& content) {
    io::write_file(out / rel, content);
    artifacts[rel] = io::git_blob_hash(content);
  };
  const std::string problem_text = io::problem_to_json(spec).dump(2) + "\n";
  emit("problem.json", problem_text);

  // Topologies.
  std::map<std::string, MixingMatrix> matrices;
  std::vector<std::string> order;
  json cell_sources = json::object();
  for (const auto& e : cfg.topologies) {
    std::optional<MixingMatrix> w;
    json sources = json::object();
    switch (e.source) {
      case TopologySource::generator: w = make_topology(e.kind, n); break;
      case TopologySource::file:
        w = io::load_mixing_matrix(e.path);
        if (w->n() != n) throw ConfigError(e.path.string(), "n", "matrix size differs from the problem");
        sources["input"] = e.path.string();
        sources["input_hash"] = io::git_blob_hash(io::read_file(e.path));
        break;
      case TopologySource::learn: {
        if (!spec.proportions) throw ConfigError(cfg.name, "topologies", "learn needs a label-skew problem");
        const TopoObjective obj(*spec.proportions, e.lambda);
        FwResult fw = frank_wolfe(obj, e.iterations, e.gap_tol);
        const std::string rel = "fw/" + e.name + ".jsonl";
        emit(rel, io::fw_trace_to_jsonl(fw.trace));
        sources["fw_trace"] = rel;
        w = std::move(fw.w);
        break;
      }
    }
    const std::string mrel = "matrices/" + e.name + ".csv";
    emit(mrel, io::matrix_to_csv(w->matrix()));
    sources["matrix"] = mrel;
    matrices.emplace(e.name, *w);
    order.push_back(e.name);
    cell_sources[e.name] = sources;
  }

  double eta = 0.0;
  if (cfg.eta) eta = *cfg.eta;
  else eta = mixing_parameter(matrices.at(cfg.eta_reference)) / (8.0 * spec.L);

  ComparisonTable table;
  for (const auto& name : order) {
    const MixingMatrix& w = matrices.at(name);
    TableRow row;
    row.name = name;
    const DegreeReport deg = degrees(w);
    row.d_in_max = deg.d_in_max;
    row.d_out_max = deg.d_out_max;
    if (spec.proportions) row.g_value = g_value(w, TopoObjective(*spec.proportions, cfg.table_lambda));

    SamplingOptions sopt;
    sopt.samples = cfg.samples;
    sopt.seed = cfg.seed;
    const auto probes = default_probes(spec, w, cfg.seed, cfg.trajectory_steps);
    const HeterogeneityReport rep = measure(w, spec.objectives, probes, sopt);
    row.p = rep.p;
    row.H_hat = rep.H_hat;
    row.zeta_bar_sq_hat = rep.zeta_bar_sq_hat;
    json report = io::report_to_json(rep);
    if (spec.proportions && spec.model && rep.sigma_max_sq_hat >= 0.0) {
      const double B = estimate_B(*spec.model, probes);
      if (B > 0.0) report["label_skew_bound"] = io::label_skew_to_json(label_skew_bound(w, *spec.proportions, B, rep.sigma_max_sq_hat));
    }
    const std::string rrel = "reports/" + name + ".json";
    emit(rrel, report.dump(2) + "\n");
    cell_sources[name]["report"] = rrel;

    std::vector<std::optional<double>> hits, finals;
    json traces = json::array();
    std::vector<std::string> warnings;
    for (const auto s : cfg.sim_seeds) {
      SimConfig sc;
      sc.T = cfg.T;
      sc.stepsize = eta;
      sc.seed = s;
      sc.record_every = cfg.record_every;
      const SimTrace tr = run_dsgd(spec, w, sc);
      const std::string trel = "traces/" + name + "_seed" + std::to_string(s) + ".csv";
      emit(trel, io::trace_to_csv(tr));
      traces.push_back(trel);
      const auto hit = iterations_to_eps(tr, cfg.epsilon);
      hits.push_back(hit ? std::optional<double>(static_cast<double>(*hit)) : std::nullopt);
      finals.push_back(tr.records.back().f_bar_gap);
      for (const auto& wmsg : tr.warnings)
        if (std::find(warnings.begin(), warnings.end(), wmsg) == warnings.end()) warnings.push_back(wmsg);
    }
    cell_sources[name]["traces"] = traces;
    if (!warnings.empty()) cell_sources[name]["warnings"] = warnings;
    row.iterations_to_eps = detail::median(hits);
    row.final_gap = detail::median(finals);
    table.rows.push_back(std::move(row));
  }

  emit("table.csv", table_to_csv(table));
  emit("table.txt", table_to_text(table));

  json manifest{{"name", cfg.name},
                {"seed", cfg.seed},
                {"problem_hash", io::git_blob_hash(cfg.problem.dump())},
                {"simulation",
                 {{"T", cfg.T}, {"eta", eta}, {"record_every", cfg.record_every}, {"seeds", cfg.sim_seeds},
                  {"epsilon", cfg.epsilon}}},
                {"measure", {{"samples", cfg.samples}, {"trajectory_steps", cfg.trajectory_steps}}},
                {"table_lambda", cfg.table_lambda},
                {"cells", cell_sources},
                {"artifacts", artifacts}};
  io::write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return {std::move(table), std::move(manifest)};
}

}  // namespace hetero_topo
