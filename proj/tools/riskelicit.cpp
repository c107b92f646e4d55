// Command-line front end: simulate, summarize, verify-separation, serve.
#include <CLI11.hpp>
#include <httplib.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "riskelicit/errors.hpp"
#include "riskelicit/experiments.hpp"
#include "riskelicit/separation.hpp"
#include "riskelicit/service.hpp"

using namespace riskelicit;

namespace {

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::string sidecar_path) {
  const ScenarioConfig config = config_from_json(read_json_file(config_path));
  const Trace trace = run_scenario(config);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write " + out_path);
  write_trace_csv(trace, out);
  if (sidecar_path.empty()) sidecar_path = out_path + ".json";
  write_json_file(sidecar_path, trace_sidecar(trace, config));
  std::fprintf(stderr, "wrote %zu rows to %s (near ties: %zu)\n", trace.rows.size(), out_path.c_str(),
               trace.near_ties);
  return 0;
}

int cmd_summarize(const std::string& in_path, const std::vector<double>& quantiles, std::vector<std::size_t> truth) {
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open " + in_path);
  const Trace trace = read_trace_csv(in);
  if (truth.empty()) {
    // Fall back to the truth recorded in the simulate sidecar, then to column 0.
    std::ifstream side(in_path + ".json");
    const Json cfg = side ? Json::parse(side, nullptr, false) : Json();
    if (cfg.is_object() && cfg.contains("config") && cfg["config"].value("truth", Json()).is_number_integer()) {
      truth.push_back(cfg["config"]["truth"].get<std::size_t>());
    } else {
      truth.push_back(0);
    }
  }
  std::cout << "round,mean";
  for (double q : quantiles) std::cout << ",q" << q;
  std::cout << '\n';
  for (const auto& row : summarize(trace, quantiles, truth)) {
    std::cout << row.round << ',' << row.mean;
    for (double v : row.quantiles) std::cout << ',' << v;
    std::cout << '\n';
  }
  return 0;
}

template <class Cands>
int print_matrix(const std::vector<std::vector<double>>& m, const Cands& cands) {
  int failures = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      std::printf("%s%.6g", j ? "," : "", m[i][j]);
      if (i != j && !(m[i][j] > 0.0)) ++failures;
    }
    std::printf("\n");
  }
  std::fprintf(stderr, "%zu candidates, %d non-separated ordered pairs\n", cands.size(), failures);
  return failures == 0 ? 0 : 1;
}

int cmd_verify(const std::string& path, double tol) {
  const Json j = read_json_file(path);
  const Mode mode = parse_mode(j.value("mode", "one-period"));
  if (mode == Mode::one_period) {
    CandidateSet cands;
    if (j.contains("grid")) {
      Json cfg = {{"mode", "one-period"}, {"grid", j.at("grid")}, {"truth", 0}};
      cands = one_period_candidates(config_from_json(cfg).grid);
    } else {
      for (const auto& c : j.at("candidates")) cands.push_back(aversion_from_json(c));
    }
    validate_candidates(cands);
    return print_matrix(margin_matrix(cands), cands);
  }
  CandidateSetInf cands;
  if (j.contains("grid")) {
    Json cfg = {{"mode", "infinite"}, {"grid", j.at("grid")}, {"truth", 0}};
    cands = infinite_candidates(config_from_json(cfg).grid);
  } else {
    for (const auto& c : j.at("candidates")) cands.push_back(aversion_inf_from_json(c));
  }
  validate_candidates(cands);
  return print_matrix(margin_matrix(cands, tol), cands);
}

int cmd_serve(const std::string& host, int port, const std::string& journal, const std::string& static_dir) {
  SessionManager manager(journal.empty() ? std::nullopt : std::optional<std::filesystem::path>(journal));
  if (!journal.empty()) std::fprintf(stderr, "restored %zu sessions from %s\n", manager.replay_journal(), journal.c_str());
  httplib::Server server;
  mount_routes(server, manager, static_dir);
  std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-aversion elicitation by adaptive environment design"};
  app.require_subcommand(1);

  std::string config_path, out_path, sidecar_path;
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write its trace CSV");
  sim->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_path, "Trace CSV path")->required();
  sim->add_option("--sidecar", sidecar_path, "Sidecar JSON path (default: <out>.json)");

  std::string in_path;
  std::vector<double> quantiles{0.1, 0.5, 0.9};
  std::vector<std::size_t> truth;
  auto* sum = app.add_subcommand("summarize", "Per-round mean and quantiles of the posterior on the truth");
  sum->add_option("--in", in_path, "Trace CSV")->required()->check(CLI::ExistingFile);
  sum->add_option("--quantiles", quantiles, "Quantile levels")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sum->add_option("--truth", truth, "Posterior column(s) summed as the truth (default: sidecar truth, else 0)")->delimiter(',');

  std::string cands_path;
  double tol = kDefaultValueTol;
  auto* ver = app.add_subcommand("verify-separation", "Print pairwise separation margins");
  ver->add_option("--candidates", cands_path, "Candidate JSON (list or grid)")->required()->check(CLI::ExistingFile);
  ver->add_option("--tol", tol, "Value-iteration tolerance");

  std::string host = "0.0.0.0", journal, static_dir;
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "Run the HTTP elicitation service");
  srv->add_option("--host", host);
  srv->add_option("--port", port)->check(CLI::Range(1, 65535));
  srv->add_option("--journal", journal, "Directory for per-session JSON-lines journals");
  srv->add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(config_path, out_path, sidecar_path);
    if (*sum) return cmd_summarize(in_path, quantiles, truth);
    if (*ver) return cmd_verify(cands_path, tol);
    if (*srv) return cmd_serve(host, port, journal, static_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
