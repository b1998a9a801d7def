#pragma once

#include <openssl/evp.h>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hetero_topo/dsgd.hpp"
#include "hetero_topo/errors.hpp"
#include "hetero_topo/heterogeneity.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/problems.hpp"
#include "hetero_topo/proportions.hpp"
#include "hetero_topo/topo_opt.hpp"

namespace hetero_topo::io {

using json = nlohmann::ordered_json;

/// Shortest text with 17 significant digits; locale independent.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("cannot parse '" + std::string(s) + "' as a number in " + std::string(what));
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// ---- dense matrices ------------------------------------------------------

inline std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Rows of comma-separated decimals, no header. Blank lines are skipped.
inline Matrix matrix_from_csv(std::string_view text, std::string_view what = "matrix CSV") {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      std::vector<double> row;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        row.push_back(parse_double(line.substr(start, comma == std::string_view::npos ? comma : comma - start), what));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw IoError(std::string(what) + ": row " + std::to_string(rows.size() + 1) + " has " +
                      std::to_string(row.size()) + " columns, expected " + std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  if (rows.empty()) throw IoError(std::string(what) + " is empty");
  return Matrix::from_rows(rows);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return json{{"n", m.rows()}, {"rows", std::move(rows)}};
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("rows")) throw IoError("matrix JSON needs fields 'n' and 'rows'");
  const auto n = j.at("n").get<std::size_t>();
  auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
  if (rows.size() != n) throw IoError("matrix JSON: 'rows' length differs from 'n'");
  for (const auto& r : rows)
    if (r.size() != n) throw IoError("matrix JSON: row length differs from 'n'");
  return Matrix::from_rows(rows);
}

/// CSV or JSON by extension.
inline MixingMatrix load_mixing_matrix(const std::filesystem::path& path, double tol = kDefaultStochasticTol) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") return MixingMatrix::validate(matrix_from_json(json::parse(text)), tol);
  return MixingMatrix::validate(matrix_from_csv(text, path.string()), tol);
}

inline ClassProportions load_proportions(const std::filesystem::path& path) {
  return ClassProportions::validate(matrix_from_csv(read_file(path), path.string()));
}

// ---- traces ----------------------------------------------------------------

/// t, f_bar_gap, consensus_sq, theta_bar_0, ...; wall-clock time is left out
/// so equal runs give equal bytes.
inline std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "t,f_bar_gap,consensus_sq";
  const std::size_t d = trace.records.empty() ? 0 : trace.records.front().mean_iterate.size();
  for (std::size_t a = 0; a < d; ++a) out += ",theta_bar_" + std::to_string(a);
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.t);
    out += ',' + format_double(r.f_bar_gap);
    out += ',' + format_double(r.consensus_sq);
    for (double v : r.mean_iterate) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

inline json fw_record_to_json(const FwRecord& r) {
  return json{{"l", r.l},
              {"g_value", r.g_value},
              {"duality_gap", r.duality_gap},
              {"gamma", r.gamma},
              {"permutation", r.permutation.one_based()},
              {"d_in_max", r.d_in_max},
              {"d_out_max", r.d_out_max},
              {"bound_value", r.bound_value},
              {"max_in_neighbors", r.max_in_neighbors},
              {"max_out_neighbors", r.max_out_neighbors}};
}

inline std::string fw_trace_to_jsonl(const FwTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    out += fw_record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline json report_to_json(const HeterogeneityReport& r) {
  return json{{"H_hat", r.H_hat},
              {"H_stderr", r.H_stderr},
              {"zeta_bar_sq_hat", r.zeta_bar_sq_hat},
              {"sigma_bar_sq_hat", r.sigma_bar_sq_hat},
              {"sigma_max_sq_hat", r.sigma_max_sq_hat},
              {"bias_term", r.bias_term},
              {"variance_term", r.variance_term},
              {"p", r.p},
              {"tau_bar_sq_prop1", r.tau_bar_sq_prop1},
              {"H_per_probe", r.H_per_probe},
              {"probe_points", r.probe_points},
              {"samples_per_node", r.samples_per_node}};
}

inline json label_skew_to_json(const LabelSkewBound& b) {
  return json{{"B", b.B}, {"K", b.K}, {"bias_bound", b.bias_bound}, {"variance_bound", b.variance_bound},
              {"total", b.total}};
}

// ---- problem spec files ---------------------------------------------------

namespace detail {

template <typename T>
T field(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(path, key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, key, e.what());
  }
}

template <typename T>
T field_or(const json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, path, key);
}

}  // namespace detail

/// {"kind": ..., "n": ..., "params": {...}, "seed": ...}. Label-skew
/// proportions come from params.proportions (inline rows), params.
/// proportions_csv (path relative to the spec file), or params.alpha (a
/// Dirichlet draw with the spec seed).
inline ProblemSpec problem_from_json(const json& j, const std::string& path,
                                     const std::filesystem::path& base_dir = {}) {
  const auto kind = detail::field<std::string>(j, path, "kind");
  const auto n = detail::field<std::size_t>(j, path, "n");
  const auto seed = detail::field<std::uint64_t>(j, path, "seed");
  const json params = j.contains("params") ? j.at("params") : json::object();
  const std::string ppath = path + ":params";
  try {
    if (kind == "mean_estimation") {
      MeanEstimationParams p;
      p.n = n;
      p.m = detail::field_or<double>(params, ppath, "m", 1.0);
      p.sigma_tilde_sq = detail::field_or<double>(params, ppath, "sigma_tilde_sq", 1.0);
      p.dim = detail::field_or<std::size_t>(params, ppath, "dim", 1);
      p.theta0 = detail::field_or<double>(params, ppath, "theta0", 1.0);
      return make_mean_estimation(p, seed);
    }
    if (kind == "softmax_label_skew") {
      LabelSkewParams p;
      p.n = n;
      p.classes = detail::field<std::size_t>(params, ppath, "K");
      p.features = detail::field_or<std::size_t>(params, ppath, "q", p.classes - 1);
      p.class_sep = detail::field_or<double>(params, ppath, "class_sep", 4.0);
      p.points_per_dim = detail::field_or<std::size_t>(params, ppath, "points_per_dim", 0);
      p.theta0 = detail::field_or<double>(params, ppath, "theta0", 0.0);
      std::optional<ClassProportions> pi;
      if (params.contains("proportions")) {
        pi = ClassProportions::validate(
            Matrix::from_rows(detail::field<std::vector<std::vector<double>>>(params, ppath, "proportions")));
      } else if (params.contains("proportions_csv")) {
        pi = load_proportions(base_dir / detail::field<std::string>(params, ppath, "proportions_csv"));
      } else if (params.contains("alpha")) {
        p.alpha = detail::field<double>(params, ppath, "alpha");
        pi = dirichlet_proportions(n, p.classes, *p.alpha, seed);
      } else {
        throw ConfigError(ppath, "proportions", "one of proportions, proportions_csv or alpha is required");
      }
      return make_label_skew(p, *pi, seed);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, "params", e.what());
  }
  throw ConfigError(path, "kind", "unknown problem kind '" + kind + "'");
}

inline ProblemSpec load_problem(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), "<document>", e.what());
  }
  return problem_from_json(j, path.string(), path.parent_path());
}

/// Echo of the inputs that define a problem, including the derived optimum.
inline json problem_to_json(const ProblemSpec& spec) {
  json params = json::object();
  if (const auto* p = std::get_if<MeanEstimationParams>(&spec.params)) {
    params = json{{"m", p->m}, {"sigma_tilde_sq", p->sigma_tilde_sq}, {"dim", p->dim}, {"theta0", p->theta0}};
  } else if (const auto* p = std::get_if<LabelSkewParams>(&spec.params)) {
    params = json{{"K", p->classes}, {"q", p->features}, {"class_sep", p->class_sep},
                  {"points_per_dim", p->points_per_dim}, {"theta0", p->theta0}};
    if (p->alpha) params["alpha"] = *p->alpha;
    if (spec.proportions) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < spec.proportions->n(); ++i) rows.push_back(spec.proportions->node(i));
      params["proportions"] = rows;
    }
  }
  return json{{"kind", std::string(to_string(spec.kind))},
              {"n", spec.n},
              {"params", params},
              {"seed", spec.seed},
              {"optimum",
               {{"f_star", spec.f_star},
                {"theta_star", spec.theta_star},
                {"method", spec.optimum.method},
                {"iterations", spec.optimum.iterations},
                {"grad_norm", spec.optimum.grad_norm},
                {"converged", spec.optimum.converged}}},
              {"L", spec.L}};
}

// ---- content hash ------------------------------------------------------------

/// Git blob id: SHA-1 over "blob <size>\0" followed by the content.
inline std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("cannot allocate a digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace hetero_topo::io
