#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetero_topo/hetero_topo.hpp"

namespace ht = hetero_topo;
namespace fs = std::filesystem;
using ht::io::json;

namespace {

void emit(const std::optional<std::string>& path, const std::string& content) {
  if (path && *path != "-") ht::io::write_file(*path, content);
  else std::cout << content;
}

std::vector<std::uint64_t> stream_ids_identity(std::size_t n) {
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

// Probe set of the requested size: theta0, theta*, then trajectory points.
std::vector<ht::Probe> probe_set(const ht::ProblemSpec& spec, const ht::MixingMatrix& w, std::size_t count,
                                 std::uint64_t seed) {
  auto probes = ht::default_probes(spec, w, seed, std::max<std::size_t>(8, 10 * count));
  if (count > 0 && probes.size() > count) probes.resize(count);
  return probes;
}

struct LearnArgs {
  std::string proportions;
  double lambda = ht::kDefaultLambda;
  std::size_t iters = 10;
  double gap_tol = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> out_matrix;
  std::optional<std::string> out_trace;
};

int learn_topo(const LearnArgs& a) {
  const ht::ClassProportions pi = ht::io::load_proportions(a.proportions);
  const ht::TopoObjective obj(pi, a.lambda);
  const ht::FwResult fw = ht::frank_wolfe(obj, a.iters, a.gap_tol);
  ht::io::write_file(a.out_trace.value_or("fw_trace.jsonl"), ht::io::fw_trace_to_jsonl(fw.trace));
  emit(a.out_matrix, ht::io::matrix_to_csv(fw.w.matrix()));
  return 0;
}

struct MeasureArgs {
  std::string topology;
  std::string problem;
  std::size_t samples = 10000;
  std::size_t probes = 10;
  std::uint64_t seed = 0;
  std::optional<double> B;
  std::optional<double> sigma_max_sq;
  std::optional<std::string> out;
};

int measure(const MeasureArgs& a) {
  const ht::ProblemSpec spec = ht::io::load_problem(a.problem);
  const ht::MixingMatrix w = ht::io::load_mixing_matrix(a.topology);
  if (w.n() != spec.n) throw ht::DimensionMismatch("topology n differs from problem n");
  const auto probes = probe_set(spec, w, a.probes, a.seed);
  ht::SamplingOptions opt;
  opt.samples = a.samples;
  opt.seed = a.seed;
  opt.stream_ids = stream_ids_identity(spec.n);
  const ht::HeterogeneityReport rep = ht::measure(w, spec.objectives, probes, opt);
  json doc{{"report", ht::io::report_to_json(rep)}};
  if (spec.proportions) {
    const double sigma_max_sq = a.sigma_max_sq.value_or(rep.sigma_max_sq_hat);
    double B = 0.0;
    if (a.B) B = *a.B;
    else if (spec.model) B = ht::estimate_B(*spec.model, probes);
    doc["B_source"] = a.B ? "user" : "probe_estimate";
    if (B > 0.0) doc["label_skew_bound"] = ht::io::label_skew_to_json(ht::label_skew_bound(w, *spec.proportions, B, sigma_max_sq));
  } else if (a.sigma_max_sq) {
    const auto bv = ht::bias_variance_bound(w, spec.objectives, probes, *a.sigma_max_sq);
    doc["bias_variance_user_sigma"] = {{"bias", bv.bias}, {"variance", bv.variance}};
  }
  emit(a.out, doc.dump(2) + "\n");
  return 0;
}

struct SimulateArgs {
  std::string problem;
  std::optional<std::string> topology;
  std::optional<std::string> schedule_dir;
  std::size_t T = 1000;
  std::optional<double> eta;
  bool tuned = false;
  std::size_t tune_samples = 2000;
  std::uint64_t seed = 0;
  std::size_t record_every = 10;
  bool centralized = false;
  std::optional<std::string> out;
  std::optional<std::string> manifest;
};

ht::MixingSchedule load_schedule(const SimulateArgs& a, std::vector<std::pair<std::string, std::string>>& inputs) {
  if (a.topology) {
    inputs.emplace_back(*a.topology, ht::io::git_blob_hash(ht::io::read_file(*a.topology)));
    return ht::MixingSchedule::fixed(ht::io::load_mixing_matrix(*a.topology));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(*a.schedule_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".csv" || ext == ".json")) files.push_back(entry.path());
  }
  if (files.empty()) throw ht::IoError("schedule directory holds no .csv or .json matrices");
  std::sort(files.begin(), files.end());
  std::vector<ht::MixingMatrix> ws;
  for (const auto& f : files) {
    inputs.emplace_back(f.string(), ht::io::git_blob_hash(ht::io::read_file(f)));
    ws.push_back(ht::io::load_mixing_matrix(f));
  }
  if (ws.size() == 1) return ht::MixingSchedule::fixed(ws.front());
  return ht::MixingSchedule::cyclic(std::move(ws));
}

int simulate(const SimulateArgs& a) {
  const ht::ProblemSpec spec = ht::io::load_problem(a.problem);
  std::vector<std::pair<std::string, std::string>> inputs{
      {a.problem, ht::io::git_blob_hash(ht::io::read_file(a.problem))}};
  const ht::MixingSchedule schedule = load_schedule(a, inputs);

  ht::SimConfig cfg;
  cfg.T = a.T;
  cfg.seed = a.seed;
  cfg.record_every = a.record_every;
  json stepsize;
  if (a.tuned) {
    // b = sigma^2/n, e = 36 L tau^2/p^2, d = 8L/p, with p the smallest over the
    // schedule and sigma^2, tau^2 measured at the default probes.
    double p = 1.0;
    for (const auto& w : schedule.matrices()) p = std::min(p, ht::mixing_parameter(w));
    if (!(p > 0.0)) throw ht::ZeroP();
    const auto& w0 = schedule.matrices().front();
    ht::SamplingOptions opt;
    opt.samples = a.tune_samples;
    opt.seed = a.seed;
    const auto rep = ht::measure(w0, spec.objectives, ht::default_probes(spec, w0, a.seed), opt);
    double r0 = 0.0;
    for (std::size_t k = 0; k < spec.theta0.size(); ++k)
      r0 += (spec.theta0[k] - spec.theta_star[k]) * (spec.theta0[k] - spec.theta_star[k]);
    ht::TunedStepsize t{r0, rep.sigma_bar_sq_hat / static_cast<double>(spec.n),
                        36.0 * spec.L * rep.H_hat / (p * p), 8.0 * spec.L / p};
    cfg.stepsize = t;
    stepsize = {{"rule", "tuned"}, {"r0", t.r0}, {"b", t.b}, {"e", t.e}, {"d", t.d}, {"p", p},
                {"tau_bar_sq_hat", rep.H_hat}, {"sigma_bar_sq_hat", rep.sigma_bar_sq_hat}};
  } else {
    if (!a.eta) throw ht::InvalidArgument("simulate needs --eta or --tuned");
    cfg.stepsize = *a.eta;
    stepsize = {{"rule", "constant"}};
  }

  const ht::SimTrace trace = a.centralized ? ht::run_centralized(spec, cfg) : ht::run_dsgd(spec, schedule, cfg);
  stepsize["eta"] = trace.eta;
  for (const auto& w : trace.warnings) std::cerr << "warning: " << w << '\n';
  const std::string csv = ht::io::trace_to_csv(trace);
  emit(a.out, csv);

  json in = json::array();
  for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"hash", hash}});
  json manifest{{"command", "simulate"},
                {"mode", a.centralized ? "centralized" : "decentralized"},
                {"T", a.T},
                {"seed", a.seed},
                {"record_every", a.record_every},
                {"stepsize", stepsize},
                {"inputs", in},
                {"trace_hash", ht::io::git_blob_hash(csv)},
                {"warnings", trace.warnings}};
  ht::io::write_file(a.manifest.value_or(a.out && *a.out != "-" ? *a.out + ".manifest.json" : "run_manifest.json"),
                     manifest.dump(2) + "\n");
  return 0;
}

struct PipelineArgs {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> T;
  std::optional<std::size_t> samples;
  bool quiet = false;
};

int pipeline(const PipelineArgs& a) {
  ht::ExperimentConfig cfg;
  if (a.config) {
    cfg = ht::load_experiment(*a.config);
  } else {
    const auto doc = ht::preset(a.preset.value_or(""));
    if (!doc) throw ht::ConfigError("<preset>", "name", "unknown preset '" + a.preset.value_or("") + "'");
    cfg = ht::parse_experiment(*doc, "preset:" + *a.preset, fs::current_path());
  }
  // Flags win over the document.
  if (a.out) cfg.output_dir = *a.out;
  if (a.seed) {
    const std::uint64_t shift = *a.seed - cfg.seed;
    cfg.seed = *a.seed;
    for (auto& s : cfg.sim_seeds) s += shift;
  }
  if (a.T) cfg.T = *a.T;
  if (a.samples) cfg.samples = *a.samples;
  const ht::PipelineResult result = ht::run_pipeline(cfg);
  if (!a.quiet) std::cout << ht::table_to_text(result.table);
  return 0;
}

struct TopologyArgs {
  std::string kind;
  std::size_t n = 0;
  std::optional<std::string> out;
  bool as_json = false;
};

int make_topology(const TopologyArgs& a) {
  const auto kind = ht::parse_topology_kind(a.kind);
  if (!kind || *kind == ht::TopologyKind::custom_weights) throw ht::InvalidArgument("unknown topology kind '" + a.kind + "'");
  const ht::MixingMatrix w = ht::make_topology(*kind, a.n);
  emit(a.out, a.as_json ? ht::io::matrix_to_json(w.matrix()).dump() + "\n" : ht::io::matrix_to_csv(w.matrix()));
  return 0;
}

struct DirichletArgs {
  std::size_t n = 0, K = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::string> out;
};

int dirichlet(const DirichletArgs& a) {
  emit(a.out, ht::io::matrix_to_csv(ht::dirichlet_proportions(a.n, a.K, a.alpha, a.seed).matrix()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized SGD topologies under data heterogeneity"};
  app.require_subcommand(1);

  LearnArgs learn;
  auto* c_learn = app.add_subcommand("learn-topo", "Learn a sparse mixing matrix from class proportions");
  c_learn->add_option("proportions", learn.proportions, "Proportions CSV (n rows, K columns)")->required()->check(CLI::ExistingFile);
  c_learn->add_option("--lambda", learn.lambda, "Bias-variance trade-off weight")->capture_default_str();
  c_learn->add_option("--iters,-L", learn.iters, "Frank-Wolfe iterations")->capture_default_str();
  c_learn->add_option("--gap-tol", learn.gap_tol, "Stop once the duality gap is at most this (0 = off)")->capture_default_str();
  c_learn->add_option("--seed", learn.seed, "Accepted for uniformity; the algorithm is deterministic");
  c_learn->add_option("--out,-o", learn.out_matrix, "Learned matrix CSV (default stdout)");
  c_learn->add_option("--trace", learn.out_trace, "Per-iteration JSON lines (default fw_trace.jsonl)");

  MeasureArgs meas;
  auto* c_meas = app.add_subcommand("measure", "Estimate heterogeneity quantities for a topology");
  c_meas->add_option("--topology", meas.topology, "Mixing matrix CSV or JSON")->required()->check(CLI::ExistingFile);
  c_meas->add_option("--problem", meas.problem, "Problem spec JSON")->required()->check(CLI::ExistingFile);
  c_meas->add_option("--samples", meas.samples, "Joint draws per probe")->capture_default_str();
  c_meas->add_option("--probes", meas.probes, "Probe count: theta0, theta*, then trajectory points")->capture_default_str();
  c_meas->add_option("--seed", meas.seed, "Sampling seed")->capture_default_str();
  c_meas->add_option("--B", meas.B, "Class-level heterogeneity constant (default: probe estimate)");
  c_meas->add_option("--sigma-max-sq", meas.sigma_max_sq, "Noise bound (default: Monte Carlo estimate)");
  c_meas->add_option("--out,-o", meas.out, "Report JSON (default stdout)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run decentralized SGD and write its trace");
  c_sim->add_option("--problem", sim.problem, "Problem spec JSON")->required()->check(CLI::ExistingFile);
  auto* o_top = c_sim->add_option("--topology", sim.topology, "Mixing matrix CSV or JSON")->check(CLI::ExistingFile);
  auto* o_dir = c_sim->add_option("--schedule-dir", sim.schedule_dir, "Directory of matrices used cyclically in name order")
                    ->check(CLI::ExistingDirectory);
  o_top->excludes(o_dir);
  c_sim->add_option("--T", sim.T, "Iterations")->capture_default_str();
  auto* o_eta = c_sim->add_option("--eta", sim.eta, "Constant stepsize");
  auto* o_tuned = c_sim->add_flag("--tuned", sim.tuned, "Stepsize from measured sigma^2, tau^2 and p");
  o_eta->excludes(o_tuned);
  c_sim->add_option("--tune-samples", sim.tune_samples, "Samples for the --tuned measurement")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Sampling seed")->capture_default_str();
  c_sim->add_option("--record-every", sim.record_every, "Record period")->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_flag("--centralized", sim.centralized, "Centralized parallel SGD on the same draws");
  c_sim->add_option("--out,-o", sim.out, "Trace CSV (default stdout)");
  c_sim->add_option("--manifest", sim.manifest, "Run manifest JSON (default <out>.manifest.json)");

  PipelineArgs pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Learn, measure, simulate and tabulate an experiment");
  auto* o_cfg = c_pipe->add_option("--config", pipe.config, "Experiment JSON")->check(CLI::ExistingFile);
  auto* o_preset = c_pipe->add_option("--preset", pipe.preset, "Built-in experiment: example1 or label_skew");
  o_cfg->excludes(o_preset);
  c_pipe->add_option("--out,-o", pipe.out, "Output directory (overrides the config)");
  c_pipe->add_option("--seed", pipe.seed, "Experiment seed (overrides the config)");
  c_pipe->add_option("--T", pipe.T, "Iterations (overrides the config)");
  c_pipe->add_option("--samples", pipe.samples, "Monte Carlo samples (overrides the config)");
  c_pipe->add_flag("--quiet,-q", pipe.quiet, "Do not print the table");

  TopologyArgs topo;
  auto* c_topo = app.add_subcommand("make-topology", "Write a canonical mixing matrix");
  c_topo->add_option("kind", topo.kind, "complete | identity | ring | alternating_ring | clustered_ring")->required();
  c_topo->add_option("n", topo.n, "Node count")->required()->check(CLI::PositiveNumber);
  c_topo->add_option("--out,-o", topo.out, "Output file (default stdout)");
  c_topo->add_flag("--json", topo.as_json, "Write {\"n\", \"rows\"} JSON instead of CSV");

  DirichletArgs dir;
  auto* c_dir = app.add_subcommand("dirichlet", "Draw label proportions, one Dirichlet row per node");
  c_dir->add_option("n", dir.n, "Node count")->required()->check(CLI::PositiveNumber);
  c_dir->add_option("K", dir.K, "Class count")->required()->check(CLI::PositiveNumber);
  c_dir->add_option("--alpha", dir.alpha, "Concentration")->capture_default_str();
  c_dir->add_option("--seed", dir.seed, "Seed")->capture_default_str();
  c_dir->add_option("--out,-o", dir.out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_learn) return learn_topo(learn);
    if (*c_meas) return measure(meas);
    if (*c_sim) {
      if (!sim.topology && !sim.schedule_dir) throw ht::InvalidArgument("simulate needs --topology or --schedule-dir");
      return simulate(sim);
    }
    if (*c_pipe) {
      if (!pipe.config && !pipe.preset) throw ht::InvalidArgument("pipeline needs --config or --preset");
      return pipeline(pipe);
    }
    if (*c_topo) return make_topology(topo);
    if (*c_dir) return dirichlet(dir);
  } catch (const ht::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
