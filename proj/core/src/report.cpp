#include "olu/report.hpp"

#include "olu/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace olu {

namespace {

std::string fit_rate(const std::optional<DecayFit>& f) {
  return f ? format_number(f->rho_hat) : "nan";
}

std::vector<std::string> row(const RunResult& r, const MethodResult& m) {
  return {
      std::to_string(r.seed),
      std::string(to_string(r.regime)),
      format_number(r.kappa),
      std::to_string(r.tau),
      std::string(to_string(r.deletion_mode)),
      std::to_string(r.deletion_size),
      std::to_string(r.t_del),
      std::to_string(r.horizon),
      m.method,
      format_number(m.initial_param_err),
      format_number(m.initial_mem_err),
      format_number(m.initial_state_err),
      format_number(m.final_state_err),
      format_number(m.future_state_auc),
      format_number(m.future_param_auc),
      format_number(m.upd_dir_auc),
      std::to_string(m.direct_mass_at_del),
      m.clearance_time ? std::to_string(*m.clearance_time) : "not_cleared",
      m.exact_recovery ? "1" : "0",
      format_number(m.avg_future_loss),
      format_number(m.auc_ratio_vs_noop),
      fit_rate(m.decay.p1),
      fit_rate(m.decay.p2),
      fit_rate(m.decay.p3),
      std::to_string(m.cost.replayed_events),
      std::to_string(m.cost.extra_grad_evals),
      format_number(m.cost.wall_clock_seconds),
      format_number(m.alpha_bound),
      format_number(m.sigma_cert),
  };
}

nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_number(v));
}

}  // namespace

OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw Error(Errc::InvalidConfig, "unknown output format '" + std::string(s) + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "seed", "regime", "kappa", "tau", "deletion_mode", "deletion_size", "t_del", "horizon",
      "method", "initial_param_err", "initial_mem_err", "initial_state_err", "final_state_err",
      "future_state_auc", "future_param_auc", "upd_dir_auc", "direct_mass_at_del",
      "clearance_time", "exact_recovery", "avg_future_loss", "auc_ratio_vs_noop", "rho_p1",
      "rho_p2", "rho_p3", "replayed_events", "extra_grad_evals", "wall_clock_s", "alpha_bound",
      "sigma_cert"};
  return cols;
}

bool is_timing_column(std::string_view column) { return column == "wall_clock_s"; }

std::string results_csv(const std::vector<RunResult>& runs) {
  std::string out = fmt::format("{}\n", fmt::join(result_columns(), ","));
  for (const auto& r : runs)
    for (const auto& m : r.methods) out += fmt::format("{}\n", fmt::join(row(r, m), ","));
  return out;
}

std::string results_json(const std::vector<RunResult>& runs) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json j;
    j["experiment"] = to_string(r.kind);
    j["seed"] = r.seed;
    j["regime"] = to_string(r.regime);
    j["kappa"] = r.kappa;
    j["tau"] = r.tau;
    j["deletion_mode"] = to_string(r.deletion_mode);
    j["deletion_size"] = r.deletion_size;
    j["deleted"] = r.deleted;
    j["t_del"] = r.t_del;
    j["horizon"] = r.horizon;
    j["future_hash"] = fmt::format("{:016x}", r.future_hash);
    j["probe_hash"] = fmt::format("{:016x}", r.probe_hash);
    j["counterfactual_hash"] = fmt::format("{:016x}", r.counterfactual_hash);
    j["rho_used"] = number(r.rho_used);
    j["violated_assumptions"] = r.violated_assumptions;
    nlohmann::json point = nlohmann::json::object();
    for (const auto& [k, v] : r.grid_point) point[k] = v;
    j["grid_point"] = point;
    nlohmann::json methods = nlohmann::json::array();
    const auto& cols = result_columns();
    for (const auto& m : r.methods) {
      const auto values = row(r, m);
      nlohmann::json mj;
      // Method-level columns start after the run-level ones.
      for (std::size_t c = 8; c < cols.size(); ++c) mj[cols[c]] = values[c];
      for (auto& [k, v] : mj.items()) {
        if (k == "method" || k == "clearance_time") continue;
        const std::string s = v.get<std::string>();
        if (s != "nan" && s != "inf" && s != "-inf") v = nlohmann::json::parse(s);
      }
      methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string trace_csv(const MethodResult& m) {
  const MetricTrace& t = m.trace;
  std::string out = "k,E_w,E_Z,E_theta,D_upd,M_direct,loss\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    out += fmt::format("{},{},{},{},{},{},{}\n", k, format_number(t.e_w[k]),
                       format_number(t.e_z[k]), format_number(t.e_theta[k]),
                       format_number(t.d_upd[k]), t.m_direct[k], format_number(t.loss[k]));
  return out;
}

std::string summary_csv(const std::vector<MethodSummary>& summaries) {
  std::vector<std::string> header = {"method", "runs"};
  for (const auto& c : summary_columns()) {
    header.push_back("median_" + c);
    header.push_back("mean_" + c);
  }
  for (const char* c : {"median_ratio_vs_noop", "mean_ratio_vs_noop", "share_better_than_noop",
                        "exact_recovery_rate", "best_non_oracle_share", "mean_replayed_events"})
    header.emplace_back(c);
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& s : summaries) {
    std::vector<std::string> r = {s.method, std::to_string(s.runs)};
    for (const auto& c : summary_columns()) {
      r.push_back(format_number(s.median.at(c)));
      r.push_back(format_number(s.mean.at(c)));
    }
    for (double v : {s.median_ratio_vs_noop, s.mean_ratio_vs_noop, s.share_better_than_noop,
                     s.exact_recovery_rate, s.best_non_oracle_share, s.mean_replayed_events})
      r.push_back(format_number(v));
    out += fmt::format("{}\n", fmt::join(r, ","));
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw Error(Errc::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::IoError, "cannot move output into '" + path.string() + "'");
  }
}

void write_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs,
                   OutputFormat format, bool traces) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create output directory '" + dir.string() + "'");
  if (format == OutputFormat::Csv) atomic_write(dir / "results.csv", results_csv(runs));
  else atomic_write(dir / "results.json", results_json(runs));
  if (traces)
    for (const auto& r : runs)
      for (const auto& m : r.methods)
        atomic_write(dir / ("trace_" + m.method + ".csv"), trace_csv(m));
  if (runs.size() > 1) atomic_write(dir / "summary.csv", summary_csv(aggregate(runs)));
}

}  // namespace olu
