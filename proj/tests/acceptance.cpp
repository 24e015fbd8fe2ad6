// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is non-zero when any criterion fails.

#include <lfn/lfn.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace lfn;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ScenarioConfig fixture() { return io::scenario_from_synthetic(io::make_synthetic({})); }

// ---------------------------------------------------------------------------

void utility_oracle(Outcome& o) {
  const double gamma = 0.9662;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> age(18, 100);
  std::uniform_real_distribution<double> alpha(0.05, 0.95), log_wage(std::log(100.0), std::log(200000.0));
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int L = age(rng);
    const double a = alpha(rng), w = std::exp(log_wage(rng));
    const double discount = std::pow(gamma, L) / (1.0 - gamma);
    double best = 0.0;
    for (int g = 0; g <= 100000; ++g) {
      const double l = g / 100000.0;
      best = std::max(best, discount * std::pow((1.0 - l) * w, a) * std::pow(l, 1.0 - a));
    }
    const double closed = optimal_utility(L, a, w, gamma);
    worst = std::max(worst, std::abs(closed - best) / closed);
  }
  o.detail << "max relative error " << worst << " over 100 tuples";
  o.require(worst <= 1e-4, "relative error <= 1e-4");
}

void similarity_constructors(Outcome& o) {
  const auto in = io::make_synthetic({});
  std::vector<Matrix> shares{industry_affinity(in.io_table)};
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m(7, 7);
    for (double& v : m.flat()) v = u(rng);
    m(3, 3) = 0.0;
    shares.push_back(industry_affinity(m));
  }
  double row_dev = 0.0;
  for (const auto& s : shares)
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double sum = 0.0;
      for (double v : s.row(r)) sum += v;
      row_dev = std::max(row_dev, std::abs(sum - 1.0));
    }
  o.require(row_dev <= 1e-9, "row sums within 1e-9");

  const auto oc = occupation_closeness(in.skills);
  bool sym = true, diag = true;
  for (std::size_t a = 0; a < oc.rows(); ++a) {
    diag = diag && oc(a, a) == 1.0;
    for (std::size_t b = 0; b < oc.cols(); ++b) sym = sym && oc(a, b) == oc(b, a);
  }
  o.require(sym, "occupation symmetry exact");
  o.require(diag, "occupation unit diagonal exact");

  const auto rs = region_similarity(in.distances);
  double dmin = 1e300, dmax = -1e300;
  for (double v : in.distances.flat()) dmin = std::min(dmin, v), dmax = std::max(dmax, v);
  bool extremes = true;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (in.distances.flat()[k] == dmin) extremes = extremes && rs.flat()[k] == 1.0;
    if (in.distances.flat()[k] == dmax) extremes = extremes && rs.flat()[k] == 0.0;
  }
  o.require(extremes, "region min->1 and max->0 exact");

  bool idempotent = true;
  for (const auto* m : {&rs, &oc}) {
    const auto once = normalize_matrix(*m);
    idempotent = idempotent && normalize_matrix(once) == once;
  }
  const auto b = io::build_similarity(in.distances, in.io_table, in.skills).bundle;
  for (const auto* m : {&b.R, &b.I, &b.O}) idempotent = idempotent && normalize_matrix(*m) == *m;
  o.require(idempotent, "normalisation idempotent");
  o.detail << "max row-sum deviation " << row_dev << "; symmetry, diagonal, extremes, idempotence checked";
}

void conservation(Outcome& o) {
  const auto cfg = fixture();
  const SimilarityKernel kernel(cfg.similarity);
  const StepContext ctx(cfg.economy, cfg.jobs, kernel, cfg.alpha);
  auto s = initialise(cfg, ctx, 103);
  s.keep_log = false;
  const int steps = 500;
  double destroyed = 0.0;
  int bad_steps = 0;
  for (int t = 0; t < steps; ++t) {
    step(s, ctx);
    if (!state_consistent(s, 3500, 3600)) ++bad_steps;
    destroyed += static_cast<double>(s.last_stats.destroyed);
  }
  const double mean = destroyed / steps;
  const double expected = cfg.economy.lambda * 3600.0;
  const double se = std::sqrt(3600.0 * cfg.economy.lambda * (1.0 - cfg.economy.lambda) / steps);
  o.detail << "N=" << s.agents.size() << " P=" << s.positions.size() << " inconsistent steps " << bad_steps
           << "; mean destruction " << mean << " vs " << expected << " (3 SE = " << 3.0 * se << ")";
  o.require(bad_steps == 0, "counts constant every step");
  o.require(std::abs(mean - expected) <= 3.0 * se, "destruction within 3 SE");
}

// ---------------------------------------------------------------------------
// Calibration experiments share one observed target.

struct CalibrationSetup {
  ScenarioConfig base;
  FlowTriple observed;
};

CalibrationSetup calibration_setup() {
  CalibrationSetup s{fixture(), {}};
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  auto rnd = [&](const Matrix& like) {
    Matrix m(like.rows(), like.cols());
    for (double& v : m.flat()) v = u(rng);
    return m;
  };
  ScenarioConfig truth = s.base;
  truth.similarity = s.base.similarity.with_nu(rnd(s.base.similarity.R), rnd(s.base.similarity.I),
                                               rnd(s.base.similarity.O));
  RunOptions opt;
  opt.keep_log = false;
  s.observed = mean_flows(run_suite(truth, seed_block(5000, 0, 1), opt));
  return s;
}

// Same job shares at a larger scale: P positions redrawn multinomially.
ScenarioConfig scaled(const ScenarioConfig& base, int n_agents) {
  ScenarioConfig c = base;
  const int positions = n_agents / 35 * 36;
  Rng rng(3);
  std::vector<double> w(base.jobs.counts.begin(), base.jobs.counts.end());
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::fill(c.jobs.counts.begin(), c.jobs.counts.end(), 0);
  for (int k = 0; k < positions; ++k) ++c.jobs.counts[pick(rng)];
  c.economy.n_agents = n_agents;
  c.economy.n_positions = positions;
  c.validate();
  return c;
}

CalibrationConfig calibration_config(int m) {
  CalibrationConfig cc;
  cc.m_simulations = m;
  cc.max_iterations = 20;
  return cc;
}

CalibrationResult m5_result;
bool m5_done = false;

const CalibrationResult& calibrate_m5(const CalibrationSetup& s) {
  if (!m5_done) {
    m5_result = calibrate(s.observed, calibration_config(5), s.base);
    m5_done = true;
  }
  return m5_result;
}

void self_calibration(Outcome& o, const CalibrationSetup& s) {
  const auto& res = calibrate_m5(s);
  const auto& fit = res.history[static_cast<std::size_t>(res.best_iteration)].fit;
  const double e0 = res.history.front().mean_error;
  const double reduction = 1.0 - res.best_error / e0;
  o.detail << "iterations " << res.history.size() << ", best " << res.best_iteration << "; Pearson R "
           << fit.region.pearson << " I " << fit.industry.pearson << " O " << fit.occupation.pearson << "; mean error "
           << e0 << " -> " << res.best_error << " (" << 100.0 * reduction << "% lower)";
  o.require(fit.region.pearson >= 0.9, "region Pearson >= 0.90");
  o.require(fit.industry.pearson >= 0.9, "industry Pearson >= 0.90");
  o.require(fit.occupation.pearson >= 0.9, "occupation Pearson >= 0.90");
  o.require(reduction >= 0.5, "mean error reduced by >= 50%");
}

double relative_spread(std::initializer_list<double> v) {
  const auto [lo, hi] = std::minmax(v);
  return (hi - lo) / lo;
}

void calibration_robustness(Outcome& o, const CalibrationSetup& s) {
  const double e_small = calibrate_m5(s).best_error;
  const double e_large = calibrate(s.observed, calibration_config(5), scaled(s.base, 35000)).best_error;
  const double e_m3 = calibrate(s.observed, calibration_config(3), s.base).best_error;
  const double e_m10 = calibrate(s.observed, calibration_config(10), s.base).best_error;
  const double by_n = relative_spread({e_small, e_large});
  const double by_m = relative_spread({e_m3, e_small, e_m10});
  o.detail << "final mean error N=3500 " << e_small << ", N=35000 " << e_large << " (spread " << 100.0 * by_n
           << "%); M=3 " << e_m3 << ", M=5 " << e_small << ", M=10 " << e_m10 << " (spread " << 100.0 * by_m << "%)";
  o.require(by_n < 0.25, "N=3500 vs N=35000 within 25%");
  o.require(by_m < 0.25, "M in {3,5,10} within 25%");
}

// ---------------------------------------------------------------------------
// Shock experiments: one baseline suite, nested industry sets of growing size.

struct ShockLevel {
  std::vector<int> industries;
  double fraction = 0.0;
  ShockReport positional, wage_up, wage_down;
};

constexpr int kShockRuns = 10;
constexpr std::uint64_t kShockSeed = 7000;

std::vector<ShockLevel> shock_levels;

const std::vector<ShockLevel>& run_shocks() {
  if (!shock_levels.empty()) return shock_levels;
  const auto cfg = fixture();
  std::vector<int> order(static_cast<std::size_t>(cfg.dims().industries));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), Rng(104));

  ShockSpec probe;
  probe.seed = kShockSeed;
  probe.industries = {0};
  ShockRuns runs;
  runs.baseline = run_baseline_suite(cfg, probe, kShockRuns);
  for (std::size_t size : {1u, 2u, 3u, 5u, 7u, 10u}) {
    ShockLevel level;
    level.industries.assign(order.begin(), order.begin() + static_cast<long>(size));
    for (auto kind : {ShockKind::positional, ShockKind::wage_up, ShockKind::wage_down}) {
      ShockSpec spec;
      spec.kind = kind;
      spec.industries = level.industries;
      spec.seed = kShockSeed;
      runs.shocked = run_shocked_suite(cfg, spec, kShockRuns);
      auto rep = summarise_shock(spec, cfg.jobs, runs);
      (kind == ShockKind::positional ? level.positional : kind == ShockKind::wage_up ? level.wage_up : level.wage_down) =
          std::move(rep);
    }
    level.fraction = level.positional.fraction_shocked;
    shock_levels.push_back(std::move(level));
  }
  return shock_levels;
}

void shock_monotonicity(Outcome& o) {
  const auto& levels = run_shocks();
  o.detail << levels.size() << " levels, fractions";
  for (const auto& l : levels) o.detail << ' ' << l.fraction;
  std::vector<double> frac;
  for (const auto& l : levels) frac.push_back(l.fraction);
  for (auto d : kFlowDimensions) {
    std::vector<double> jac;
    bool above = true;
    for (const auto& l : levels) {
      jac.push_back(l.positional[d].jaccard);
      above = above && l.positional[d].jaccard > l.positional[d].band_max;
    }
    const double rho = spearman(frac, jac);
    o.detail << "; " << to_string(d) << " Spearman " << rho << ", band max " << levels.front().positional[d].band_max
             << ", Jaccard";
    for (double j : jac) o.detail << ' ' << j;
    o.require(rho > 0.0, std::string(to_string(d)) + " Spearman > 0");
    o.require(above, std::string(to_string(d)) + " every shock above band");
  }
  o.require(levels.size() >= 5, ">= 5 shock levels");
}

void wage_weakness(Outcome& o) {
  const auto& levels = run_shocks();
  int comparisons = 0, weaker = 0;
  double worst_ratio = 0.0;
  for (const auto& l : levels)
    for (auto d : kFlowDimensions)
      for (const auto* w : {&l.wage_up, &l.wage_down}) {
        ++comparisons;
        const double pos = l.positional[d].jaccard, wage = (*w)[d].jaccard;
        weaker += wage < pos;
        worst_ratio = std::max(worst_ratio, wage / pos);
      }
  o.detail << weaker << "/" << comparisons << " wage-shock Jaccards below the positional ones; largest ratio "
           << worst_ratio;
  o.require(weaker == comparisons, "every wage shock strictly weaker");
}

// ---------------------------------------------------------------------------

double pair_count_u(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0.0;
  for (double a : x)
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return u;
}

void metrics_oracles(Outcome& o) {
  const std::vector<double> a{2, 1}, b{1, 2};
  o.require(weighted_jaccard_distance(a, b) == 0.5, "Jaccard (2,1)/(1,2) = 0.5");
  o.require(frobenius_distance(Matrix{{3, 4}}, Matrix{{0, 0}}) == 5.0, "Frobenius 3-4-5");

  std::mt19937_64 rng(105);
  std::uniform_int_distribution<int> val(0, 5);
  int u_mismatch = 0, p_mismatch = 0, cases = 0;
  for (std::size_t nx = 1; nx <= 6; ++nx)
    for (std::size_t ny = 1; ny <= 6; ++ny)
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> x(nx), y(ny);
        for (double& v : x) v = val(rng);
        for (double& v : y) v = val(rng);
        const auto r = mann_whitney_u(x, y);
        const double u = pair_count_u(x, y);
        ++cases;
        u_mismatch += r.u != u;
        std::vector<double> pool(x);
        pool.insert(pool.end(), y.begin(), y.end());
        std::vector<int> pick(pool.size(), 0);
        std::fill(pick.end() - static_cast<long>(nx), pick.end(), 1);
        const double centre = static_cast<double>(nx * ny) / 2.0;
        int extreme = 0, total = 0;
        do {
          std::vector<double> xa, yb;
          for (std::size_t k = 0; k < pool.size(); ++k) (pick[k] ? xa : yb).push_back(pool[k]);
          ++total;
          extreme += std::abs(pair_count_u(xa, yb) - centre) >= std::abs(u - centre);
        } while (std::next_permutation(pick.begin(), pick.end()));
        p_mismatch += std::abs(r.p_value - static_cast<double>(extreme) / total) > 1e-12;
      }
  o.require(u_mismatch == 0, "U matches pair enumeration");
  o.require(p_mismatch == 0, "exact p matches permutation enumeration");

  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> p(8), q(8), r(8);
    for (auto* v : {&p, &q, &r})
      for (double& x : *v) x = u(rng) < 0.25 ? 0.0 : u(rng);
    p[0] = q[1] = r[2] = 0.5;
    const double pq = weighted_jaccard_distance(p, q), qp = weighted_jaccard_distance(q, p);
    const double qr = weighted_jaccard_distance(q, r), pr = weighted_jaccard_distance(p, r);
    const bool ok = pq == qp && pq >= 0.0 && pq <= 1.0 && weighted_jaccard_distance(p, p) == 0.0 &&
                    pr <= pq + qr + 1e-12;
    violations += !ok;
  }
  o.require(violations == 0, "Jaccard metric axioms");
  o.detail << cases << " Mann-Whitney cases (U mismatches " << u_mismatch << ", p mismatches " << p_mismatch
           << "); 1000 Jaccard triples, " << violations << " axiom violations";
}

void steady_state_detector(Outcome& o) {
  int constant_fail = 0, ramp_fail = 0, checks = 0;
  for (double eps : {1e-15, 1e-9, 1e-3, 0.5})
    for (int k : {1, 3, 20})
      for (int l : {1, 4, 20}) {
        const SteadyStateParams p{k, l, eps, 2000};
        ++checks;
        constant_fail += !steady_state_reached(std::vector<double>(p.min_history() + 5, 0.37), p);
        for (double factor : {1.0, 1.5, 10.0}) {
          const double slope = factor * eps / l;
          std::vector<double> xi(p.min_history() + 5);
          for (std::size_t t = 0; t < xi.size(); ++t) xi[t] = 0.25 + slope * static_cast<double>(t);
          ramp_fail += factor > 1.0 && steady_state_reached(xi, p);
        }
      }
  o.require(constant_fail == 0, "fires on constant streams");
  o.require(ramp_fail == 0, "silent on ramps with l*|slope| > eps");

  // Exact boundary: slope 1/8, lag 8, window 7; window means differ by exactly 1.
  const SteadyStateParams p{7, 8, 1.0, 2000};
  std::vector<double> xi(p.min_history());
  for (std::size_t t = 0; t < xi.size(); ++t) xi[t] = 3.0 + 0.125 * static_cast<double>(t);
  const bool at_boundary = steady_state_reached(xi, p);
  SteadyStateParams above = p;
  above.epsilon = std::nextafter(1.0, 2.0);
  const bool just_above = steady_state_reached(xi, above);
  for (double& v : xi) v = -v;
  const bool negative = steady_state_reached(xi, p);
  o.require(!at_boundary && !negative, "l*|slope| == eps does not fire");
  o.require(just_above, "fires once eps exceeds l*|slope|");
  o.detail << checks << " parameter sets; boundary at l*|slope| = eps: fires " << at_boundary
           << ", with eps one ulp larger: fires " << just_above;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void determinism(Outcome& o) {
  const auto cfg = fixture();
  const auto seeds = seed_block(8000, 0, 6);
  const auto serial = run_suite(cfg, seeds, {}, 1);
  const auto parallel = run_suite(cfg, seeds, {}, static_cast<unsigned>(seeds.size()));
  bool logs = true;
  for (std::size_t k = 0; k < seeds.size(); ++k)
    logs = logs && serial[k].state.transition_log == parallel[k].state.transition_log &&
           serial[k].flows == parallel[k].flows && serial[k].xi_history == parallel[k].xi_history;
  o.require(logs, "transition logs bit-identical");

  ShockSpec spec;
  spec.industries = {4, 9};
  spec.seed = 8100;
  const auto rep_serial = run_experiment(cfg, spec, 4, 1);
  const auto rep_parallel = run_experiment(cfg, spec, 4, 8);
  const auto tmp = fs::temp_directory_path() / ("lfn_acceptance_" + std::to_string(std::random_device{}()));
  auto write = [&](const std::vector<RunResult>& runs, const ShockReport& rep, const std::string& name) {
    io::RunOutputs out;
    out.config = &cfg;
    for (const auto& r : runs) out.runs.push_back(&r);
    out.shock = &rep;
    return io::write_results(out, (tmp / name).string());
  };
  const auto m1 = write(serial, rep_serial, "serial");
  const auto m2 = write(parallel, rep_parallel, "parallel");
  bool files = m1 == m2;
  for (const auto& f : m1["files"]) {
    const auto name = f["path"].get<std::string>();
    files = files && read_file(tmp / "serial" / name) == read_file(tmp / "parallel" / name);
  }
  fs::remove_all(tmp);
  o.require(files, "reports and manifests byte-identical");
  o.detail << seeds.size() << " runs and a 4+4 shock experiment, 1 thread vs " << seeds.size() << "/8 threads; "
           << m1["files"].size() << " output files compared";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> check;
  };
  std::optional<CalibrationSetup> setup;
  auto cal = [&]() -> const CalibrationSetup& {
    if (!setup) setup = calibration_setup();
    return *setup;
  };
  const std::vector<Criterion> criteria{
      {"closed-form utility vs grid oracle", utility_oracle},
      {"similarity constructors", similarity_constructors},
      {"conservation and destruction rate", conservation},
      {"self-calibration", [&](Outcome& o) { self_calibration(o, cal()); }},
      {"calibration robustness", [&](Outcome& o) { calibration_robustness(o, cal()); }},
      {"shock monotonicity", shock_monotonicity},
      {"wage-shock weakness", wage_weakness},
      {"metrics oracles", metrics_oracles},
      {"steady-state detector", steady_state_detector},
      {"determinism under parallel suites", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[k].check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::printf("%s %2zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name, seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
