#include <lfn/lfn.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfn;

std::string pick_output(const std::string& flag, const ScenarioConfig& cfg) {
  return flag.empty() ? cfg.output_dir : flag;
}

int cmd_generate(const std::string& out, const io::SyntheticSpec& spec) {
  const auto path = io::generate_synthetic(spec, out);
  std::cout << path << "\n";
  return 0;
}

int cmd_simulate(const std::string& scenario, std::vector<std::uint64_t> seeds, std::optional<int> steps,
                 const std::string& out_flag) {
  const auto cfg = io::load_scenario(scenario);
  if (seeds.empty()) seeds = cfg.seeds;
  RunOptions opt;
  opt.fixed_burn_in = steps;
  const auto runs = run_suite(cfg, seeds, opt);
  io::RunOutputs out;
  out.config = &cfg;
  for (const auto& r : runs) out.runs.push_back(&r);
  const auto dir = pick_output(out_flag, cfg);
  io::write_results(out, dir);
  for (const auto& r : runs)
    std::cout << "seed " << r.seed << ": steady at step " << r.steady_step << ", " << r.collected.total()
              << " transitions collected\n";
  std::cout << "results in " << dir << "\n";
  return 0;
}

int cmd_calibrate(const std::string& scenario, const std::vector<std::string>& observed_files,
                  std::optional<double> threshold, std::optional<int> max_iters, std::optional<int> m_sims,
                  std::optional<bool> fixed_seeds, const std::string& out_flag) {
  auto cfg = io::load_scenario(scenario);
  FlowTriple observed;
  if (!observed_files.empty()) {
    observed = io::read_flows(observed_files[0], observed_files[1], observed_files[2], cfg.labels, cfg.sources.labels);
  } else if (cfg.observed) {
    observed = *cfg.observed;
  } else {
    throw ValidationError("observed", "no observed flows in the scenario and none given with --observed");
  }
  CalibrationConfig cc = cfg.calibration.value_or(CalibrationConfig{});
  if (threshold) cc.threshold = *threshold;
  if (max_iters) cc.max_iterations = *max_iters;
  if (m_sims) {
    cc.m_simulations = *m_sims;
    if (!cc.seeds.empty() && cc.seeds.size() != static_cast<std::size_t>(*m_sims)) cc.seeds.clear();
  }
  if (fixed_seeds) cc.fixed_seeds = *fixed_seeds;
  const auto res = calibrate(observed, cc, cfg);
  for (const auto& h : res.history)
    std::cout << "iteration " << h.iteration << ": mean error " << h.mean_error << "\n";
  std::cout << (res.converged ? "converged" : "stopped at iteration limit") << "; best iteration "
            << res.best_iteration << " (" << res.best_error << ")\n";

  auto calibrated = cfg;
  calibrated.similarity = res.bundle;
  calibrated.observed = observed;
  calibrated.calibration = cc;
  const auto dir = pick_output(out_flag, cfg);
  io::RunOutputs out;
  out.config = &calibrated;
  out.calibration = &res;
  io::write_results(out, dir);
  const auto scn = io::write_scenario(calibrated, (fs::path(dir) / "calibrated").string());
  std::cout << "calibrated scenario: " << scn << "\n";
  return 0;
}

int cmd_shock(const std::string& scenario, const std::vector<int>& industries, const std::string& kind,
              std::optional<int> m, std::optional<std::uint64_t> seed, const std::string& out_flag) {
  const auto cfg = io::load_scenario(scenario);
  ShockSpec spec = cfg.shock.value_or(ShockSpec{});
  if (!industries.empty()) spec.industries = industries;
  if (!kind.empty()) spec.kind = io::shock_kind_from(kind);
  if (seed) spec.seed = *seed;
  ScenarioConfig base = cfg;
  base.shock.reset();
  const auto rep = run_experiment(base, spec, m.value_or(5));
  const auto dir = pick_output(out_flag, cfg);
  io::RunOutputs out;
  out.config = &cfg;
  out.shock = &rep;
  io::write_results(out, dir);
  std::cout << io::shock_report_json(rep).dump(2) << "\n";
  return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
  const auto a = csv::read_labelled(a_path), b = csv::read_labelled(b_path);
  if (a.row_labels != b.row_labels || a.col_labels != b.col_labels)
    throw DimensionMismatch(a_path, b_path, "labels differ");
  json j{{"pearson", pearson(a.values, b.values)},
         {"frobenius", frobenius_distance(a.values, b.values)},
         {"weighted_jaccard", weighted_jaccard_distance(a.values, b.values)}};
  if (a.values.is_square())
    j["clustering"] = {{"a", weighted_clustering(a.values)}, {"b", weighted_clustering(b.values)}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_steady_state(const std::string& path, const SteadyStateParams& p) {
  p.validate();
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw ParseError(path + ": empty file");
  std::vector<double> xi;
  const std::size_t col = rows.front().size() > 1 ? 1 : 0;
  for (std::size_t r = 1; r < rows.size(); ++r) xi.push_back(csv::parse_double(rows[r].at(col), path));
  json j{{"entries", xi.size()}, {"window", p.window}, {"lag", p.lag}, {"epsilon", p.epsilon}};
  j["steady_at"] = nullptr;
  for (std::size_t n = p.min_history(); n <= xi.size(); ++n)
    if (steady_state_reached(std::span<const double>(xi.data(), n), p)) {
      j["steady_at"] = n - 1;
      break;
    }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Labour flow network simulator"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic input file set");
  std::string gen_out = "synthetic";
  io::SyntheticSpec spec;
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--regions", spec.dims.regions)->capture_default_str();
  gen->add_option("--industries", spec.dims.industries)->capture_default_str();
  gen->add_option("--occupations", spec.dims.occupations)->capture_default_str();
  gen->add_option("--agents", spec.n_agents)->capture_default_str();
  gen->add_option("--positions", spec.n_positions)->capture_default_str();

  std::string scenario, out;
  auto* sim = app.add_subcommand("simulate", "Run one simulation per seed");
  std::vector<std::uint64_t> seeds;
  std::optional<int> steps;
  sim->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--seeds", seeds, "Seeds (default: from the scenario)")->delimiter(',');
  sim->add_option("--steps", steps, "Fixed burn-in instead of steady-state detection");
  sim->add_option("--out", out, "Output directory (default: scenario output_dir)");

  auto* cal = app.add_subcommand("calibrate", "Fit the similarity exponents to observed flows");
  std::vector<std::string> observed;
  std::optional<double> threshold;
  std::optional<int> max_iters, m_sims;
  std::optional<bool> fixed_seeds;
  cal->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  cal->add_option("--observed", observed, "Region, industry and occupation flow CSVs")
      ->expected(3)
      ->check(CLI::ExistingFile);
  cal->add_option("--threshold", threshold);
  cal->add_option("--max-iters", max_iters);
  cal->add_option("--m-sims", m_sims);
  cal->add_flag("--fixed-seeds,!--fresh-seeds", fixed_seeds, "Reuse suite seeds across iterations");
  cal->add_option("--out", out);

  auto* shk = app.add_subcommand("shock", "Run a baseline and a shocked suite and compare them");
  std::vector<int> industries;
  std::string kind;
  std::optional<int> m;
  std::optional<std::uint64_t> shock_seed;
  shk->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  shk->add_option("--industries", industries, "Industry indices")->delimiter(',');
  shk->add_option("--kind", kind)->check(CLI::IsMember({"positional", "wage_up", "wage_down"}));
  shk->add_option("--m", m, "Runs per suite (>= 3)");
  shk->add_option("--seed", shock_seed);
  shk->add_option("--out", out);

  auto* met = app.add_subcommand("metrics", "Compare two labelled matrix CSVs");
  std::string a_path, b_path;
  met->add_option("a", a_path)->required()->check(CLI::ExistingFile);
  met->add_option("b", b_path)->required()->check(CLI::ExistingFile);

  auto* ss = app.add_subcommand("steady-state", "Find the first step a Xi history satisfies the criterion");
  std::string xi_path;
  SteadyStateParams ssp;
  ss->add_option("xi", xi_path, "CSV with a step,xi header")->required()->check(CLI::ExistingFile);
  ss->add_option("--window", ssp.window)->capture_default_str();
  ss->add_option("--lag", ssp.lag)->capture_default_str();
  ss->add_option("--epsilon", ssp.epsilon)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(gen_out, spec);
    if (*sim) return cmd_simulate(scenario, seeds, steps, out);
    if (*cal) return cmd_calibrate(scenario, observed, threshold, max_iters, m_sims, fixed_seeds, out);
    if (*shk) return cmd_shock(scenario, industries, kind, m, shock_seed, out);
    if (*met) return cmd_metrics(a_path, b_path);
    if (*ss) return cmd_steady_state(xi_path, ssp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
