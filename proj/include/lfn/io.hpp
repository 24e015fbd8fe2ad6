#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "csv.hpp"
#include "domain.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "flows.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "shocks.hpp"
#include "similarity.hpp"

namespace lfn::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Node metadata

inline NodeMetadata read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  NodeMetadata md;
  auto grab = [&](const char* key, std::vector<std::string>& out) {
    if (!j.contains(key) || !j[key].is_array()) throw ValidationError(path, std::string("missing array '") + key + "'");
    for (const auto& v : j[key]) out.push_back(v.get<std::string>());
    std::vector<std::string> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError(path, std::string("duplicate label in '") + key + "'");
    if (out.empty()) throw ValidationError(path, std::string("'") + key + "' is empty");
  };
  grab("regions", md.regions);
  grab("industries", md.industries);
  grab("occupations", md.occupations);
  return md;
}

inline void write_labels(const std::string& path, const NodeMetadata& md) {
  json j{{"regions", md.regions}, {"industries", md.industries}, {"occupations", md.occupations}};
  csv::write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Matrix / table files

inline void check_labels(const std::vector<std::string>& got, const std::vector<std::string>& want,
                         const std::string& file, const std::string& labels_file, const std::string& what) {
  if (got.size() != want.size())
    throw DimensionMismatch(file, labels_file,
                            what + " has " + std::to_string(got.size()) + " categories, labels list " +
                                std::to_string(want.size()));
  for (std::size_t k = 0; k < got.size(); ++k)
    if (got[k] != want[k]) throw ValidationError(file, what + " label '" + got[k] + "' does not match '" + want[k] + "'");
}

inline Matrix read_square(const std::string& path, const std::vector<std::string>& labels,
                          const std::string& labels_file) {
  auto lm = csv::read_labelled(path);
  check_labels(lm.row_labels, labels, path, labels_file, "rows");
  check_labels(lm.col_labels, labels, path, labels_file, "columns");
  return std::move(lm.values);
}

inline std::vector<SkillVector> read_skills(const std::string& path, const std::vector<std::string>& occupations,
                                            const std::string& labels_file) {
  auto lm = csv::read_labelled(path);
  check_labels(lm.row_labels, occupations, path, labels_file, "occupation rows");
  std::vector<SkillVector> out;
  for (std::size_t r = 0; r < lm.values.rows(); ++r) {
    const auto row = lm.values.row(r);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

inline JobDistribution read_jobs(const std::string& path, const NodeMetadata& md, const std::string& labels_file) {
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw ParseError(path + ": empty file");
  const std::vector<std::string> header{"region", "industry", "occupation", "count", "wage_mean", "wage_std"};
  if (rows.front() != header) throw ParseError(path + ": expected header region,industry,occupation,count,wage_mean,wage_std");
  auto lookup = [&](const std::vector<std::string>& labels, const std::string& v, const char* what) {
    const auto it = std::find(labels.begin(), labels.end(), v);
    if (it == labels.end())
      throw DimensionMismatch(path, labels_file, std::string("unknown ") + what + " label '" + v + "'");
    return static_cast<int>(it - labels.begin());
  };
  JobDistribution jobs(md.dims());
  std::fill(jobs.wage_mean.begin(), jobs.wage_mean.end(), 0.0);
  std::vector<bool> seen(jobs.dims.cells(), false);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::string where = path + ":" + std::to_string(r + 1);
    if (f.size() != header.size()) throw ParseError(where + ": expected 6 fields");
    const Cell c{lookup(md.regions, f[0], "region"), lookup(md.industries, f[1], "industry"),
                 lookup(md.occupations, f[2], "occupation")};
    const auto k = jobs.dims.index(c);
    if (seen[k]) throw ValidationError(where, "duplicate cell");
    seen[k] = true;
    const double count = csv::parse_double(f[3], where);
    if (count < 0 || count != std::floor(count)) throw ValidationError(where, "count must be a non-negative integer");
    jobs.counts[k] = static_cast<std::int64_t>(count);
    jobs.wage_mean[k] = csv::parse_double(f[4], where);
    jobs.wage_std[k] = csv::parse_double(f[5], where);
  }
  return jobs;
}

inline void write_jobs(const std::string& path, const JobDistribution& jobs, const NodeMetadata& md) {
  std::ostringstream os;
  os << "region,industry,occupation,count,wage_mean,wage_std\n";
  for (std::size_t k = 0; k < jobs.dims.cells(); ++k) {
    const auto c = jobs.dims.cell(k);
    os << csv::quote(md.regions[static_cast<std::size_t>(c.region)]) << ','
       << csv::quote(md.industries[static_cast<std::size_t>(c.industry)]) << ','
       << csv::quote(md.occupations[static_cast<std::size_t>(c.occupation)]) << ',' << jobs.counts[k] << ','
       << csv::format(jobs.wage_mean[k]) << ',' << csv::format(jobs.wage_std[k]) << '\n';
  }
  csv::write_text(path, os.str());
}

inline SurvivalTable read_survival(const std::string& path) {
  const auto rows = csv::read_rows(path);
  if (rows.size() < 2) throw ParseError(path + ": no survival rows");
  if (rows.front() != std::vector<std::string>{"age", "survival_probability"})
    throw ParseError(path + ": expected header age,survival_probability");
  SurvivalTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 1);
    if (rows[r].size() != 2) throw ParseError(where + ": expected 2 fields");
    const int age = static_cast<int>(csv::parse_double(rows[r][0], where));
    if (r == 1) t.first_age = age;
    else if (age != t.first_age + static_cast<int>(r) - 1) throw ValidationError(where, "ages must be consecutive");
    t.probability.push_back(csv::parse_double(rows[r][1], where));
  }
  return t;
}

inline void write_survival(const std::string& path, const SurvivalTable& t) {
  std::ostringstream os;
  os << "age,survival_probability\n";
  for (std::size_t k = 0; k < t.probability.size(); ++k)
    os << t.first_age + static_cast<int>(k) << ',' << csv::format(t.probability[k]) << '\n';
  csv::write_text(path, os.str());
}

inline void write_flow_matrix(const std::string& path, const Matrix& m, const std::vector<std::string>& labels) {
  csv::write_labelled(path, labels, labels, m, "from\\to");
}

inline FlowTriple read_flows(const std::string& region, const std::string& industry, const std::string& occupation,
                             const NodeMetadata& md, const std::string& labels_file) {
  return {read_square(region, md.regions, labels_file), read_square(industry, md.industries, labels_file),
          read_square(occupation, md.occupations, labels_file)};
}

// ---------------------------------------------------------------------------
// Similarity construction from raw inputs

// Intermediate matrices kept for inspection alongside the normalised bundle.
struct SimilarityBuild {
  Matrix region;            // proximity from distances
  Matrix industry_shares;   // row-stochastic input shares, before min-max
  Matrix occupation_cosine; // cosine similarity, before min-max
  SimilarityBundle bundle;
};

inline SimilarityBuild build_similarity(const Matrix& distances, const Matrix& io_table,
                                        const std::vector<SkillVector>& skills) {
  SimilarityBuild b;
  b.region = region_similarity(distances);
  b.industry_shares = industry_affinity(io_table);
  b.occupation_cosine = occupation_closeness(skills);
  b.bundle = normalize_bundle(b.region, b.industry_shares, b.occupation_cosine);
  return b;
}

// ---------------------------------------------------------------------------
// Scenario JSON

inline const char* to_string(ShockKind k) {
  switch (k) {
    case ShockKind::positional: return "positional";
    case ShockKind::wage_up: return "wage_up";
    case ShockKind::wage_down: return "wage_down";
  }
  return "?";
}

inline ShockKind shock_kind_from(const std::string& s) {
  if (s == "positional") return ShockKind::positional;
  if (s == "wage_up") return ShockKind::wage_up;
  if (s == "wage_down") return ShockKind::wage_down;
  throw ValidationError("shock.kind", "unknown kind '" + s + "'");
}

inline json shock_to_json(const ShockSpec& s) {
  json homog = json::array();
  if (s.homogenise_region) homog.push_back("region");
  if (s.homogenise_occupation) homog.push_back("occupation");
  json j{{"kind", to_string(s.kind)},
         {"industries", s.industries},
         {"homogenise", homog},
         {"sigma_multiplier", s.sigma_multiplier},
         {"seed", s.seed}};
  if (s.region_target) j["region_target"] = *s.region_target;
  if (s.occupation_target) j["occupation_target"] = *s.occupation_target;
  return j;
}

inline ShockSpec shock_from_json(const json& j) {
  ShockSpec s;
  try {
    s.kind = shock_kind_from(j.value("kind", std::string("positional")));
    if (!j.contains("industries")) throw ValidationError("shock.industries", "missing");
    s.industries = j.at("industries").get<std::vector<int>>();
    if (j.contains("homogenise")) {
      s.homogenise_region = s.homogenise_occupation = false;
      for (const auto& h : j.at("homogenise")) {
        const auto v = h.get<std::string>();
        if (v == "region") s.homogenise_region = true;
        else if (v == "occupation") s.homogenise_occupation = true;
        else throw ValidationError("shock.homogenise", "unknown characteristic '" + v + "'");
      }
    }
    s.sigma_multiplier = j.value("sigma_multiplier", 2.0);
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("region_target")) s.region_target = j.at("region_target").get<int>();
    if (j.contains("occupation_target")) s.occupation_target = j.at("occupation_target").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError("shock", e.what());
  }
  return s;
}

inline json calibration_to_json(const CalibrationConfig& c) {
  return json{{"m_simulations", c.m_simulations},       {"threshold", c.threshold},
              {"max_iterations", c.max_iterations},     {"collection_steps", c.collection_steps},
              {"seeds", c.seeds},                       {"fixed_seeds", c.fixed_seeds},
              {"signed_mean_error", c.signed_mean_error}};
}

inline CalibrationConfig calibration_from_json(const json& j) {
  CalibrationConfig c;
  try {
    c.m_simulations = j.value("m_simulations", c.m_simulations);
    c.threshold = j.value("threshold", c.threshold);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.collection_steps = j.value("collection_steps", c.collection_steps);
    c.seeds = j.value("seeds", c.seeds);
    c.fixed_seeds = j.value("fixed_seeds", c.fixed_seeds);
    c.signed_mean_error = j.value("signed_mean_error", c.signed_mean_error);
  } catch (const json::exception& e) {
    throw ValidationError("calibration", e.what());
  }
  return c;
}

// Everything except file locations, in a stable key order.
inline json scenario_parameters_json(const ScenarioConfig& c) {
  const auto& e = c.economy;
  json j{{"economy",
          {{"n_agents", e.n_agents},
           {"n_positions", e.n_positions},
           {"lambda", e.lambda},
           {"gamma", e.gamma},
           {"theta_e", e.theta_e},
           {"theta_ue", e.theta_ue},
           {"entry_age", e.entry_age}}},
         {"age_increment", e.age_increment},
         {"alpha", {{"beta_a", c.alpha.beta_a}, {"beta_b", c.alpha.beta_b}, {"lo", c.alpha.lo}, {"hi", c.alpha.hi}}},
         {"initial_age", {{"min", c.initial_age_min}, {"max", c.initial_age_max}}},
         {"vacancy_fraction", c.vacancy_fraction},
         {"steady_state",
          {{"window", c.steady_state.window},
           {"lag", c.steady_state.lag},
           {"epsilon", c.steady_state.epsilon},
           {"max_steps", c.steady_state.max_steps},
           {"xi_mode", c.xi_mode == XiMode::cumulative ? "cumulative" : "windowed"}}},
         {"collection_steps", c.collection_steps},
         {"seeds", c.seeds},
         {"output_dir", c.output_dir}};
  if (c.calibration) j["calibration"] = calibration_to_json(*c.calibration);
  if (c.shock) j["shock"] = shock_to_json(*c.shock);
  return j;
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& prefix) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(prefix + key, e.what());
  }
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

inline void require_file(const std::string& field, const std::string& p) {
  if (p.empty()) throw ValidationError(field, "missing file path");
  if (!fs::exists(p)) throw ValidationError(field, "file does not exist: " + p);
}

}  // namespace detail

// Parses and validates a scenario file. Relative paths resolve against the
// scenario file's directory. Defaults: lambda 0.0463, gamma 0.9662, entry
// age 18, vacancy fraction 800/36000.
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": top level must be an object");
  const fs::path base = fs::path(path).parent_path();
  using detail::get_or;

  ScenarioConfig c;
  const json econ = j.value("economy", json::object());
  auto& e = c.economy;
  e.n_agents = get_or(econ, "n_agents", e.n_agents, "economy.");
  e.lambda = get_or(econ, "lambda", e.lambda, "economy.");
  e.gamma = get_or(econ, "gamma", e.gamma, "economy.");
  e.theta_e = get_or(econ, "theta_e", e.theta_e, "economy.");
  e.theta_ue = get_or(econ, "theta_ue", e.theta_ue, "economy.");
  e.entry_age = get_or(econ, "entry_age", e.entry_age, "economy.");
  e.age_increment = get_or(j, "age_increment", e.age_increment, "");

  const json alpha = j.value("alpha", json::object());
  c.alpha.beta_a = get_or(alpha, "beta_a", c.alpha.beta_a, "alpha.");
  c.alpha.beta_b = get_or(alpha, "beta_b", c.alpha.beta_b, "alpha.");
  c.alpha.lo = get_or(alpha, "lo", c.alpha.lo, "alpha.");
  c.alpha.hi = get_or(alpha, "hi", c.alpha.hi, "alpha.");
  const json ages = j.value("initial_age", json::object());
  c.initial_age_min = get_or(ages, "min", c.initial_age_min, "initial_age.");
  c.initial_age_max = get_or(ages, "max", c.initial_age_max, "initial_age.");
  c.vacancy_fraction = get_or(j, "vacancy_fraction", c.vacancy_fraction, "");
  const json ss = j.value("steady_state", json::object());
  c.steady_state.window = get_or(ss, "window", c.steady_state.window, "steady_state.");
  c.steady_state.lag = get_or(ss, "lag", c.steady_state.lag, "steady_state.");
  c.steady_state.epsilon = get_or(ss, "epsilon", c.steady_state.epsilon, "steady_state.");
  c.steady_state.max_steps = get_or(ss, "max_steps", c.steady_state.max_steps, "steady_state.");
  const auto mode = get_or(ss, "xi_mode", std::string("cumulative"), "steady_state.");
  if (mode == "cumulative") c.xi_mode = XiMode::cumulative;
  else if (mode == "windowed") c.xi_mode = XiMode::windowed;
  else throw ValidationError("steady_state.xi_mode", "unknown mode '" + mode + "'");
  c.collection_steps = get_or(j, "collection_steps", c.collection_steps, "");
  c.seeds = get_or(j, "seeds", c.seeds, "");
  c.output_dir = detail::resolve(base, get_or(j, "output_dir", c.output_dir, ""));
  if (j.contains("calibration")) c.calibration = calibration_from_json(j["calibration"]);
  if (j.contains("shock")) c.shock = shock_from_json(j["shock"]);

  if (!j.contains("files") || !j["files"].is_object()) throw ValidationError("files", "missing 'files' object");
  const json files = j["files"];
  auto file = [&](const char* key) { return detail::resolve(base, get_or(files, key, std::string(), "files.")); };
  auto& src = c.sources;
  src.labels = file("labels");
  src.jobs = file("jobs");
  src.survival = file("survival");
  src.distances = file("distances");
  src.io_table = file("io_table");
  src.skills = file("skills");
  src.nu_region = file("nu_region");
  src.nu_industry = file("nu_industry");
  src.nu_occupation = file("nu_occupation");
  src.observed_region = file("observed_region");
  src.observed_industry = file("observed_industry");
  src.observed_occupation = file("observed_occupation");
  const auto sim_r = file("similarity_region"), sim_i = file("similarity_industry"),
             sim_o = file("similarity_occupation");

  detail::require_file("files.labels", src.labels);
  detail::require_file("files.jobs", src.jobs);
  detail::require_file("files.survival", src.survival);
  c.labels = read_labels(src.labels);
  c.jobs = read_jobs(src.jobs, c.labels, src.labels);
  e.survival = read_survival(src.survival);
  e.n_positions = get_or(econ, "n_positions", static_cast<int>(c.jobs.total()), "economy.");

  if (!sim_r.empty() || !sim_i.empty() || !sim_o.empty()) {
    detail::require_file("files.similarity_region", sim_r);
    detail::require_file("files.similarity_industry", sim_i);
    detail::require_file("files.similarity_occupation", sim_o);
    c.similarity = normalize_bundle(read_square(sim_r, c.labels.regions, src.labels),
                                    read_square(sim_i, c.labels.industries, src.labels),
                                    read_square(sim_o, c.labels.occupations, src.labels));
    src.similarity_region = sim_r;
    src.similarity_industry = sim_i;
    src.similarity_occupation = sim_o;
  } else {
    detail::require_file("files.distances", src.distances);
    detail::require_file("files.io_table", src.io_table);
    detail::require_file("files.skills", src.skills);
    c.similarity = build_similarity(read_square(src.distances, c.labels.regions, src.labels),
                                    read_square(src.io_table, c.labels.industries, src.labels),
                                    read_skills(src.skills, c.labels.occupations, src.labels))
                       .bundle;
  }
  const int nus = !src.nu_region.empty() + !src.nu_industry.empty() + !src.nu_occupation.empty();
  if (nus != 0) {
    if (nus != 3) throw ValidationError("files.nu_*", "give all three exponent matrices or none");
    c.similarity = c.similarity.with_nu(read_square(src.nu_region, c.labels.regions, src.labels),
                                        read_square(src.nu_industry, c.labels.industries, src.labels),
                                        read_square(src.nu_occupation, c.labels.occupations, src.labels));
  }
  const int obs = !src.observed_region.empty() + !src.observed_industry.empty() + !src.observed_occupation.empty();
  if (obs != 0) {
    if (obs != 3) throw ValidationError("files.observed_*", "give all three observed flow matrices or none");
    c.observed = read_flows(src.observed_region, src.observed_industry, src.observed_occupation, c.labels, src.labels);
  }
  c.validate();
  return c;
}

// Writes the scenario and all of its data into `dir` so that
// load_scenario(dir/scenario.json) reproduces it. Similarity is written in
// its normalised form. Returns the scenario path.
inline std::string write_scenario(const ScenarioConfig& c, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_labels((d / "labels.json").string(), c.labels);
  write_jobs((d / "jobs.csv").string(), c.jobs, c.labels);
  write_survival((d / "survival.csv").string(), c.economy.survival);
  const auto& b = c.similarity;
  const auto& md = c.labels;
  csv::write_labelled((d / "similarity_region.csv").string(), md.regions, md.regions, b.R);
  csv::write_labelled((d / "similarity_industry.csv").string(), md.industries, md.industries, b.I);
  csv::write_labelled((d / "similarity_occupation.csv").string(), md.occupations, md.occupations, b.O);
  csv::write_labelled((d / "nu_region.csv").string(), md.regions, md.regions, b.nuR);
  csv::write_labelled((d / "nu_industry.csv").string(), md.industries, md.industries, b.nuI);
  csv::write_labelled((d / "nu_occupation.csv").string(), md.occupations, md.occupations, b.nuO);
  json j = scenario_parameters_json(c);
  json files{{"labels", "labels.json"},
             {"jobs", "jobs.csv"},
             {"survival", "survival.csv"},
             {"similarity_region", "similarity_region.csv"},
             {"similarity_industry", "similarity_industry.csv"},
             {"similarity_occupation", "similarity_occupation.csv"},
             {"nu_region", "nu_region.csv"},
             {"nu_industry", "nu_industry.csv"},
             {"nu_occupation", "nu_occupation.csv"}};
  if (c.observed) {
    write_flow_matrix((d / "observed_region.csv").string(), c.observed->region, md.regions);
    write_flow_matrix((d / "observed_industry.csv").string(), c.observed->industry, md.industries);
    write_flow_matrix((d / "observed_occupation.csv").string(), c.observed->occupation, md.occupations);
    files["observed_region"] = "observed_region.csv";
    files["observed_industry"] = "observed_industry.csv";
    files["observed_occupation"] = "observed_occupation.csv";
  }
  j["files"] = files;
  const auto path = (d / "scenario.json").string();
  csv::write_text(path, j.dump(2) + "\n");
  return path;
}

// ---------------------------------------------------------------------------
// Hashing

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Hash over every parameter and every data value, independent of paths.
inline std::string config_hash(const ScenarioConfig& c) {
  std::ostringstream os;
  os << scenario_parameters_json(c).dump();
  auto put = [&os](const Matrix& m) {
    os << '|' << m.rows() << 'x' << m.cols();
    for (double v : m.flat()) os << ',' << csv::format(v);
  };
  const auto& b = c.similarity;
  for (const Matrix* m : {&b.R, &b.I, &b.O, &b.nuR, &b.nuI, &b.nuO}) put(*m);
  if (c.observed)
    for (auto d : kFlowDimensions) put((*c.observed)[d]);
  os << "|jobs";
  for (std::size_t k = 0; k < c.jobs.counts.size(); ++k)
    os << ',' << c.jobs.counts[k] << ':' << csv::format(c.jobs.wage_mean[k]) << ':' << csv::format(c.jobs.wage_std[k]);
  os << "|survival" << c.economy.survival.first_age;
  for (double p : c.economy.survival.probability) os << ',' << csv::format(p);
  os << "|labels";
  for (const auto* v : {&c.labels.regions, &c.labels.industries, &c.labels.occupations})
    for (const auto& l : *v) os << ',' << l;
  return hex(fnv1a(os.str()));
}

// ---------------------------------------------------------------------------
// Synthetic fixture

struct SyntheticSpec {
  Dimensions dims{21, 21, 9};
  int n_agents = 3500;
  int n_positions = 3600;
  std::uint64_t seed = 1;
  int skill_categories = 12;
};

struct SyntheticInputs {
  NodeMetadata labels;
  Matrix distances;
  Matrix io_table;
  std::vector<SkillVector> skills;
  JobDistribution jobs;
  SurvivalTable survival;
  AlphaDistribution alpha;
  double theta_e = 0.10;
  double theta_ue = 0.50;
  int n_agents = 0;
  int n_positions = 0;
};

inline std::vector<std::string> numbered_labels(const char* prefix, int n) {
  std::vector<std::string> out;
  for (int k = 1; k <= n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02d", prefix, k);
    out.emplace_back(buf);
  }
  return out;
}

// Logistic mortality rising with age; survival is 0 at age 110.
inline SurvivalTable synthetic_survival(int entry_age = 18, int max_age = 110) {
  SurvivalTable t;
  t.first_age = entry_age;
  for (int age = entry_age; age <= max_age; ++age) {
    const double mortality = 1.0 / (1.0 + std::exp(-(static_cast<double>(age) - 88.0) / 7.0));
    t.probability.push_back(age == max_age ? 0.0 : 1.0 - mortality);
  }
  return t;
}

inline SyntheticInputs make_synthetic(const SyntheticSpec& spec) {
  const auto d = spec.dims;
  if (d.regions < 2 || d.industries < 2 || d.occupations < 2)
    throw ValidationError("dimensions", "each of n_R, n_I, n_O must be >= 2");
  if (spec.n_agents < 1 || spec.n_positions < 1) throw ValidationError("size", "N and P must be positive");
  if (spec.skill_categories < 1) throw ValidationError("skill_categories", "must be >= 1");
  Rng rng(spec.seed);
  SyntheticInputs s;
  s.labels = {numbered_labels("R", d.regions), numbered_labels("I", d.industries), numbered_labels("O", d.occupations)};
  s.n_agents = spec.n_agents;
  s.n_positions = spec.n_positions;

  // Regions as points on a 100 x 100 plane.
  std::uniform_real_distribution<double> plane(0.0, 100.0);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(d.regions));
  for (auto& p : pts) p = {plane(rng), plane(rng)};
  s.distances = Matrix::square(pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = 0; b < pts.size(); ++b)
      s.distances(a, b) = std::hypot(pts[a].first - pts[b].first, pts[a].second - pts[b].second);

  // Input-output values: log-normal off-diagonal, heavier own-industry use.
  std::lognormal_distribution<double> io(0.0, 1.0);
  s.io_table = Matrix::square(static_cast<std::size_t>(d.industries));
  for (std::size_t a = 0; a < s.io_table.rows(); ++a)
    for (std::size_t b = 0; b < s.io_table.cols(); ++b) s.io_table(a, b) = io(rng) * (a == b ? 6.0 : 1.0);

  // Skill levels: a shared profile plus occupation-specific emphasis.
  std::gamma_distribution<double> skill(1.0, 1.0);
  for (int o = 0; o < d.occupations; ++o) {
    SkillVector v(static_cast<std::size_t>(spec.skill_categories));
    for (auto& x : v) x = skill(rng) * skill(rng);
    s.skills.push_back(std::move(v));
  }

  // Cell shares: product of region, industry, occupation sizes with cell
  // noise, then a multinomial draw of exactly P positions.
  std::gamma_distribution<double> region_size(2.0, 1.0), industry_size(1.5, 1.0), occ_size(2.0, 1.0),
      cell_noise(1.0, 1.0);
  std::vector<double> rw(static_cast<std::size_t>(d.regions)), iw(static_cast<std::size_t>(d.industries)),
      ow(static_cast<std::size_t>(d.occupations));
  for (auto& w : rw) w = region_size(rng);
  for (auto& w : iw) w = industry_size(rng);
  for (auto& w : ow) w = occ_size(rng);
  std::vector<double> share(d.cells());
  for (std::size_t k = 0; k < share.size(); ++k) {
    const auto c = d.cell(k);
    share[k] = rw[static_cast<std::size_t>(c.region)] * iw[static_cast<std::size_t>(c.industry)] *
               ow[static_cast<std::size_t>(c.occupation)] * cell_noise(rng);
  }
  s.jobs = JobDistribution(d);
  std::discrete_distribution<std::size_t> pick(share.begin(), share.end());
  for (int p = 0; p < spec.n_positions; ++p) ++s.jobs.counts[pick(rng)];

  // Wages: log-normal means with industry and occupation premia; std a
  // cell-specific fraction of the mean.
  std::normal_distribution<double> premium(0.0, 0.25), cell_wage(0.0, 0.1);
  std::uniform_real_distribution<double> spread(0.10, 0.30);
  std::vector<double> ip(iw.size()), op(ow.size()), rp(rw.size());
  for (auto& v : rp) v = 0.4 * premium(rng);
  for (auto& v : ip) v = premium(rng);
  for (auto& v : op) v = premium(rng);
  for (std::size_t k = 0; k < share.size(); ++k) {
    const auto c = d.cell(k);
    const double mean = 25000.0 * std::exp(rp[static_cast<std::size_t>(c.region)] +
                                           ip[static_cast<std::size_t>(c.industry)] +
                                           op[static_cast<std::size_t>(c.occupation)] + cell_wage(rng));
    s.jobs.wage_mean[k] = mean;
    s.jobs.wage_std[k] = spread(rng) * mean;
  }
  s.survival = synthetic_survival();
  return s;
}

inline ScenarioConfig scenario_from_synthetic(const SyntheticInputs& s) {
  ScenarioConfig c;
  c.labels = s.labels;
  c.jobs = s.jobs;
  c.similarity = build_similarity(s.distances, s.io_table, s.skills).bundle;
  c.economy.n_agents = s.n_agents;
  c.economy.n_positions = static_cast<int>(s.jobs.total());
  c.economy.theta_e = s.theta_e;
  c.economy.theta_ue = s.theta_ue;
  c.economy.survival = s.survival;
  c.alpha = s.alpha;
  c.validate();
  return c;
}

// Writes the raw-input file set plus a scenario.json that references it.
inline std::string write_synthetic(const SyntheticInputs& s, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  const auto& md = s.labels;
  write_labels((d / "labels.json").string(), md);
  csv::write_labelled((d / "distances.csv").string(), md.regions, md.regions, s.distances, "region");
  csv::write_labelled((d / "io_table.csv").string(), md.industries, md.industries, s.io_table, "industry");
  Matrix skills(s.skills.size(), s.skills.empty() ? 0 : s.skills.front().size());
  for (std::size_t r = 0; r < s.skills.size(); ++r)
    for (std::size_t c = 0; c < s.skills[r].size(); ++c) skills(r, c) = s.skills[r][c];
  csv::write_labelled((d / "skills.csv").string(), md.occupations, numbered_labels("skill_", static_cast<int>(skills.cols())),
                      skills, "occupation");
  write_jobs((d / "jobs.csv").string(), s.jobs, md);
  write_survival((d / "survival.csv").string(), s.survival);
  json j{{"economy",
          {{"n_agents", s.n_agents},
           {"n_positions", s.jobs.total()},
           {"lambda", 0.0463},
           {"gamma", 0.9662},
           {"theta_e", s.theta_e},
           {"theta_ue", s.theta_ue},
           {"entry_age", 18}}},
         {"age_increment", 1},
         {"alpha", {{"beta_a", s.alpha.beta_a}, {"beta_b", s.alpha.beta_b}, {"lo", s.alpha.lo}, {"hi", s.alpha.hi}}},
         {"files",
          {{"labels", "labels.json"},
           {"jobs", "jobs.csv"},
           {"survival", "survival.csv"},
           {"distances", "distances.csv"},
           {"io_table", "io_table.csv"},
           {"skills", "skills.csv"}}},
         {"seeds", {1}},
         {"output_dir", "out"}};
  const auto path = (d / "scenario.json").string();
  csv::write_text(path, j.dump(2) + "\n");
  return path;
}

inline std::string generate_synthetic(const SyntheticSpec& spec, const std::string& dir) {
  return write_synthetic(make_synthetic(spec), dir);
}

// ---------------------------------------------------------------------------
// Results

struct RunOutputs {
  const ScenarioConfig* config = nullptr;
  std::vector<const RunResult*> runs;
  const CalibrationResult* calibration = nullptr;
  const ShockReport* shock = nullptr;
};

inline std::string transitions_csv(std::span<const TransitionRecord> log) {
  std::ostringstream os;
  os << "step,from_r,from_i,from_o,to_r,to_i,to_o,mover_status\n";
  for (const auto& t : log)
    os << t.step << ',' << t.from.region << ',' << t.from.industry << ',' << t.from.occupation << ',' << t.to.region
       << ',' << t.to.industry << ',' << t.to.occupation << ','
       << (t.mover == MoverStatus::employed ? "employed" : "unemployed") << '\n';
  return os.str();
}

inline std::string xi_csv(std::span<const double> xi) {
  std::ostringstream os;
  os << "step,xi\n";
  for (std::size_t k = 0; k < xi.size(); ++k) os << k << ',' << csv::format(xi[k]) << '\n';
  return os.str();
}

inline json fit_json(const FitReport& f) {
  auto one = [](const DimensionFit& d) { return json{{"pearson", d.pearson}, {"frobenius", d.frobenius}}; };
  return json{{"region", one(f.region)},
              {"industry", one(f.industry)},
              {"occupation", one(f.occupation)},
              {"total", one(f.total)}};
}

inline std::string calibration_history_csv(std::span<const CalibrationIteration> history) {
  std::ostringstream os;
  os << "iteration,mean_error,pearson_R,pearson_I,pearson_O,frob_R,frob_I,frob_O\n";
  for (const auto& h : history)
    os << h.iteration << ',' << csv::format(h.mean_error) << ',' << csv::format(h.fit.region.pearson) << ','
       << csv::format(h.fit.industry.pearson) << ',' << csv::format(h.fit.occupation.pearson) << ','
       << csv::format(h.fit.region.frobenius) << ',' << csv::format(h.fit.industry.frobenius) << ','
       << csv::format(h.fit.occupation.frobenius) << '\n';
  return os.str();
}

inline std::string flagged_csv(std::span<const FlaggedEdge> edges, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "from,to,mean_change,p_value\n";
  for (const auto& e : edges)
    os << csv::quote(labels[static_cast<std::size_t>(e.from)]) << ',' << csv::quote(labels[static_cast<std::size_t>(e.to)])
       << ',' << csv::format(e.mean_change) << ',' << csv::format(e.p_value) << '\n';
  return os.str();
}

inline json shock_report_json(const ShockReport& r) {
  json j{{"spec", shock_to_json(r.spec)}, {"m", r.m}, {"fraction_shocked", r.fraction_shocked}};
  for (auto d : kFlowDimensions) {
    const auto& x = r[d];
    json flagged = json::array();
    for (const auto& e : x.flagged)
      flagged.push_back({{"from", e.from}, {"to", e.to}, {"mean_change", e.mean_change}, {"p_value", e.p_value}});
    j[to_string(d)] = {{"weighted_jaccard", x.jaccard},
                       {"baseline_band", {x.band_min, x.band_max}},
                       {"clustering_baseline", x.clustering_baseline},
                       {"clustering_shocked", x.clustering_shocked},
                       {"flagged_edges", flagged}};
  }
  return j;
}

// Writes every output plus manifest.json listing each file with its seed
// (when it belongs to one run), content hash and the config hash.
inline json write_results(const RunOutputs& out, const std::string& dir) {
  if (!out.config) throw ValidationError("write_results", "config required");
  fs::create_directories(dir);
  const fs::path d(dir);
  const auto& cfg = *out.config;
  const auto& md = cfg.labels;
  json files = json::array();
  auto emit = [&](const std::string& name, const std::string& kind, const std::string& text,
                  std::optional<std::uint64_t> seed) {
    csv::write_text((d / name).string(), text);
    json entry{{"path", name}, {"kind", kind}, {"content_hash", hex(fnv1a(text))}};
    entry["seed"] = seed ? json(*seed) : json(nullptr);
    files.push_back(entry);
  };

  for (const auto* r : out.runs) {
    const std::string tag = "seed" + std::to_string(r->seed);
    for (auto dim : kFlowDimensions) {
      const auto& labels = md.labels(dim);
      emit(std::string("flows_") + to_string(dim) + "_" + tag + ".csv", "flow_density",
           csv::render_labelled(labels, labels, r->flows[dim], "from\\to"), r->seed);
    }
    emit("transitions_" + tag + ".csv", "transition_log", transitions_csv(r->state.transition_log), r->seed);
    emit("xi_" + tag + ".csv", "xi_history", xi_csv(r->xi_history), r->seed);
    if (cfg.observed) {
      const auto& o = *cfg.observed;
      const auto f = fit_report(r->flows.region, o.region, r->flows.industry, o.industry, r->flows.occupation,
                                o.occupation);
      emit("fit_" + tag + ".json", "fit_report", fit_json(f).dump(2) + "\n", r->seed);
    }
  }
  if (out.calibration) {
    const auto& c = *out.calibration;
    emit("calibration_history.csv", "calibration_history", calibration_history_csv(c.history), std::nullopt);
    emit("nu_region.csv", "nu", csv::render_labelled(md.regions, md.regions, c.bundle.nuR), std::nullopt);
    emit("nu_industry.csv", "nu", csv::render_labelled(md.industries, md.industries, c.bundle.nuI), std::nullopt);
    emit("nu_occupation.csv", "nu", csv::render_labelled(md.occupations, md.occupations, c.bundle.nuO),
         std::nullopt);
    json summary{{"converged", c.converged},
                 {"best_iteration", c.best_iteration},
                 {"best_error", c.best_error},
                 {"iterations", c.history.size()}};
    if (!c.history.empty()) summary["best_fit"] = fit_json(c.history[static_cast<std::size_t>(c.best_iteration)].fit);
    emit("calibration_summary.json", "calibration_summary", summary.dump(2) + "\n", std::nullopt);
  }
  if (out.shock) {
    emit("shock_report.json", "shock_report", shock_report_json(*out.shock).dump(2) + "\n", std::nullopt);
    for (auto dim : kFlowDimensions)
      emit(std::string("flagged_") + to_string(dim) + ".csv", "flagged_edges",
           flagged_csv((*out.shock)[dim].flagged, md.labels(dim)), std::nullopt);
  }
  json manifest{{"config_hash", config_hash(cfg)}, {"files", files}};
  csv::write_text((d / "manifest.json").string(), manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace lfn::io
