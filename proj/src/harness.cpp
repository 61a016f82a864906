#include "vtwins/harness.hpp"

#include "vtwins/random.hpp"
#include "vtwins/tree_export.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace vtwins {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

template <class Fn>
void run_pool(int tasks, int workers, Fn fn) {
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) fn(t);
  };
  const int n = std::clamp(workers, 1, std::max(1, tasks));
  if (n == 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
}

StepTwoSpec step2_from_json(const json& m) {
  StepTwoSpec s;
  s.kind = step2_from_name(m.at("step2").get<std::string>());
  s.min_leaf = m.value("min_leaf", s.min_leaf);
  s.alpha_split = m.value("alpha_split", s.alpha_split);
  s.complexity = m.value("complexity", s.complexity);
  s.max_depth = m.value("max_depth", s.max_depth);
  s.linear_k = m.value("linear_k", s.linear_k);
  s.lasso_folds = m.value("lasso_folds", s.lasso_folds);
  if (m.contains("tuning")) {
    const json& t = m.at("tuning");
    if (t.contains("fixed_penalty")) {
      s.tuning = FixedPenalty{t.at("fixed_penalty").get<double>()};
    } else {
      RepeatedCV cv;
      cv.folds = t.value("folds", cv.folds);
      cv.repeats = t.value("repeats", cv.repeats);
      cv.depth_grid = t.value("depth_grid", cv.depth_grid);
      s.tuning = cv;
    }
  }
  return s;
}

}  // namespace

std::vector<VtSpec> default_method_grid() {
  std::vector<VtSpec> grid;
  for (const char* s1 : {"lasso", "forest", "mars", "superlearner"})
    for (const char* s2 : {"none", "linear", "rtree", "ctree"}) grid.push_back(method_from_names(s1, s2));
  return grid;
}

VtSpec method_from_names(const std::string& step1, const std::string& step2) {
  VtSpec spec;
  spec.step1 = regressor_from_name(step1);
  spec.step2.kind = step2_from_name(step2);
  return spec;
}

void validate_config(const BenchmarkConfig& config) {
  try {
    require(!config.scenarios.empty(), "config: scenarios is empty");
    require(!config.method_grid.empty(), "config: method_grid is empty");
    require(config.replicates >= 1, "config: replicates must be >= 1");
    require(config.workers >= 1, "config: workers must be >= 1");
    for (const auto& s : config.scenarios) {
      require(s.n_train >= 40, "config: n_train must be >= 40");
      require(s.n_test >= 1, "config: n_test must be >= 1");
    }
    for (const auto& m : config.method_grid) {
      validate_spec(m.step1);
      validate_step2(m.step2);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

BenchmarkConfig config_from_json(const std::string& text) {
  BenchmarkConfig config;
  try {
    const json doc = json::parse(text);
    static const std::set<std::string> known = {"scenarios",         "method_grid", "replicates",
                                                "workers",           "seed",        "ground_truth_mode",
                                                "output_dir",        "export_trees"};
    for (const auto& [key, value] : doc.items())
      if (!known.count(key)) throw ConfigError("config: unknown key " + key);
    for (const json& s : doc.at("scenarios")) {
      ScenarioConfig sc;
      sc.linearity = linearity_from_name(s.at("linearity").get<std::string>());
      sc.structure = structure_from_name(s.value("structure", std::string("regular")));
      sc.teh = s.value("teh", true);
      sc.n_train = s.value("n_train", sc.n_train);
      sc.n_test = s.value("n_test", sc.n_test);
      config.scenarios.push_back(sc);
    }
    if (!doc.contains("method_grid") || (doc["method_grid"].is_string() && doc["method_grid"] == "default")) {
      config.method_grid = default_method_grid();
    } else {
      for (const json& m : doc.at("method_grid")) {
        VtSpec spec;
        spec.step1 = regressor_from_name(m.at("step1").get<std::string>());
        spec.step2 = step2_from_json(m);
        config.method_grid.push_back(spec);
      }
    }
    config.replicates = doc.value("replicates", config.replicates);
    config.workers = doc.value("workers", config.workers);
    config.seed = doc.value("seed", config.seed);
    config.ground_truth_mode =
        truth_mode_from_name(doc.value("ground_truth_mode", truth_mode_name(config.ground_truth_mode)));
    config.output_dir = doc.value("output_dir", config.output_dir);
    config.export_trees = doc.value("export_trees", config.export_trees);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  validate_config(config);
  return config;
}

BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::uint64_t data_seed(std::uint64_t master, int scenario, int replicate) {
  return derive_seed(master, {1, static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(replicate)});
}

std::uint64_t step1_seed(std::uint64_t master, int scenario, int replicate, const std::string& learner) {
  return derive_seed(master, {2, static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(replicate),
                              hash_string(learner)});
}

std::uint64_t step2_seed(std::uint64_t master, int scenario, int method, int replicate) {
  return derive_seed(master, {3, static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(method),
                              static_cast<std::uint64_t>(replicate)});
}

bool ResultsTable::partial() const {
  return std::any_of(cells.begin(), cells.end(), [](const ResultCell& c) { return c.partial(); });
}

const ResultCell& ResultsTable::cell(int scenario, int method) const {
  for (const auto& c : cells)
    if (c.scenario == scenario && c.method == method) return c;
  throw Error("no such result cell");
}

ResultsTable run_benchmark(const BenchmarkConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  const int S = static_cast<int>(config.scenarios.size());
  const int M = static_cast<int>(config.method_grid.size());
  const int R = config.replicates;

  struct Slot {
    std::optional<ReplicateMetrics> metrics;
    std::optional<ReplicateFailure> failure;
    std::string tree_json, tree_dot;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(S) * M * R);
  auto slot = [&](int s, int m, int r) -> Slot& {
    return slots[(static_cast<std::size_t>(s) * M + m) * R + r];
  };

  std::map<std::string, RegressorSpec> learners;
  for (const auto& spec : config.method_grid) learners.emplace(regressor_name(spec.step1), spec.step1);

  run_pool(S * R, config.workers, [&](int unit) {
    const int s = unit / R;
    const int r = unit % R;
    ScenarioConfig sc = config.scenarios[static_cast<std::size_t>(s)];
    sc.seed = data_seed(config.seed, s, r);
    auto fail_all = [&](const std::string& what, const std::string& learner) {
      for (int m = 0; m < M; ++m)
        if (learner.empty() || regressor_name(config.method_grid[static_cast<std::size_t>(m)].step1) == learner)
          slot(s, m, r).failure = ReplicateFailure{r, sc.seed, what};
    };
    SimulatedData sim;
    try {
      sim = generate(sc);
    } catch (const std::exception& e) {
      fail_all(std::string("data generation: ") + e.what(), "");
      return;
    }
    const auto kinds = sim.train.kinds();
    const auto names = sim.train.names();
    for (const auto& [learner, step1] : learners) {
      std::optional<std::pair<FittedRegressor, FittedRegressor>> arms;
      try {
        arms = fit_step1(sim.train, step1, step1_seed(config.seed, s, r, learner));
      } catch (const std::exception& e) {
        fail_all(std::string("step 1 (") + learner + "): " + e.what(), learner);
        continue;
      }
      for (int m = 0; m < M; ++m) {
        const VtSpec& spec = config.method_grid[static_cast<std::size_t>(m)];
        if (regressor_name(spec.step1) != learner) continue;
        Slot& out = slot(s, m, r);
        const std::uint64_t seed2 = step2_seed(config.seed, s, m, r);
        try {
          const VtFit fit = run_vt(sim.train, arms->first, arms->second, spec.step2, seed2);
          out.metrics = evaluate_replicate(fit, sim, config.ground_truth_mode);
          if (config.export_trees && r == 0 && fit.step2_model) {
            if (const auto* tree = std::get_if<TreeModel>(&*fit.step2_model)) {
              out.tree_json = tree_to_json(*tree, names);
              out.tree_dot = tree_to_dot(*tree, names);
            }
          }
        } catch (const std::exception& e) {
          out.failure = ReplicateFailure{r, seed2, std::string("step 2: ") + e.what()};
        }
      }
    }
  });

  ResultsTable table;
  table.config = config;
  for (int s = 0; s < S; ++s) {
    const auto truth = true_predictive_set(config.scenarios[static_cast<std::size_t>(s)]);
    for (int m = 0; m < M; ++m) {
      ResultCell cell;
      cell.scenario = s;
      cell.method = m;
      cell.scenario_name = config.scenarios[static_cast<std::size_t>(s)].name();
      cell.step1 = regressor_name(config.method_grid[static_cast<std::size_t>(m)].step1);
      cell.step2 = step2_name(config.method_grid[static_cast<std::size_t>(m)].step2.kind);
      for (int r = 0; r < R; ++r) {
        Slot& sl = slot(s, m, r);
        if (sl.metrics) cell.reps.push_back(*sl.metrics);
        if (sl.failure) cell.failures.push_back(*sl.failure);
        if (r == 0) {
          cell.tree_json = std::move(sl.tree_json);
          cell.tree_dot = std::move(sl.tree_dot);
        }
      }
      cell.metrics = aggregate(cell.reps, truth);
      table.cells.push_back(std::move(cell));
    }
  }
  table.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

std::string results_csv(const ResultsTable& table) {
  std::ostringstream out;
  out << "scenario,n,step1,step2,metric,mean,mc_se,replicates\n";
  for (const auto& c : table.cells) {
    const auto& sc = table.config.scenarios[static_cast<std::size_t>(c.scenario)];
    const std::string prefix =
        c.scenario_name + "," + std::to_string(sc.n_train) + "," + c.step1 + "," + c.step2 + ",";
    const std::string reps = std::to_string(c.metrics.replicates);
    out << prefix << "accuracy," << format_number(c.metrics.mean_accuracy) << ','
        << format_number(c.metrics.mc_se_accuracy) << ',' << reps << '\n';
    out << prefix << "ite_mse," << format_number(c.metrics.mean_mse) << ',' << format_number(c.metrics.mc_se_mse)
        << ',' << reps << '\n';
    out << prefix << "precision,"
        << (c.metrics.pooled_precision ? format_number(*c.metrics.pooled_precision) : std::string("NA")) << ",NA,"
        << reps << '\n';
  }
  return out.str();
}

std::string results_markdown(const ResultsTable& table) {
  const auto& scenarios = table.config.scenarios;
  // One group of tables per (linearity, teh); columns are (n, structure).
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    groups[{static_cast<int>(scenarios[s].linearity), scenarios[s].teh ? 0 : 1}].push_back(static_cast<int>(s));
  std::ostringstream out;
  out << "# Benchmark results\n\n";
  out << "Replicates per cell: " << table.config.replicates << ". Seed: " << table.config.seed
      << ". Classification truth: " << truth_mode_name(table.config.ground_truth_mode) << ".\n";
  const int M = static_cast<int>(table.config.method_grid.size());
  for (const auto& [key, members] : groups) {
    const ScenarioConfig& first = scenarios[static_cast<std::size_t>(members.front())];
    for (const char* metric : {"accuracy", "ite_mse", "precision"}) {
      out << "\n## " << linearity_name(first.linearity) << (first.teh ? "" : ", no TEH") << ": " << metric
          << "\n\n| step 1 | step 2 |";
      for (int s : members) {
        const auto& sc = scenarios[static_cast<std::size_t>(s)];
        out << " n=" << sc.n_train << " " << structure_name(sc.structure) << " |";
      }
      out << "\n|---|---|";
      for (std::size_t i = 0; i < members.size(); ++i) out << "---|";
      out << '\n';
      for (int m = 0; m < M; ++m) {
        const ResultCell& head = table.cell(members.front(), m);
        out << "| " << head.step1 << " | " << head.step2 << " |";
        for (int s : members) {
          const ResultCell& c = table.cell(s, m);
          const AggregateMetrics& a = c.metrics;
          std::string text;
          if (std::string(metric) == "accuracy")
            text = format_short(a.mean_accuracy) + " (" + format_short(a.mc_se_accuracy) + ")";
          else if (std::string(metric) == "ite_mse")
            text = format_short(a.mean_mse) + " (" + format_short(a.mc_se_mse) + ")";
          else
            text = a.pooled_precision ? format_short(*a.pooled_precision) : "NA";
          if (c.partial()) text += " *";
          out << ' ' << text << " |";
        }
        out << '\n';
      }
    }
  }
  if (table.partial()) out << "\n\\* partial cell: some replicates failed (see run_info.json).\n";
  return out.str();
}

void render_report(const ResultsTable& table, const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir / "trees", ec);
  if (ec) throw Error("cannot create output directory " + directory + ": " + ec.message());
  write_file(dir / "results.csv", results_csv(table));
  write_file(dir / "results.md", results_markdown(table));

  json info;
  info["version"] = kVersion;
  info["seed"] = table.config.seed;
  info["replicates"] = table.config.replicates;
  info["workers"] = table.config.workers;
  info["ground_truth_mode"] = truth_mode_name(table.config.ground_truth_mode);
  info["seconds"] = table.seconds;
  info["failures"] = json::array();
  for (const auto& c : table.cells) {
    for (const auto& f : c.failures)
      info["failures"].push_back({{"scenario", c.scenario_name},
                                  {"step1", c.step1},
                                  {"step2", c.step2},
                                  {"replicate", f.replicate},
                                  {"seed", f.seed},
                                  {"message", f.message}});
    if (!c.tree_json.empty()) {
      const std::string stem = c.scenario_name + "__" + c.step1 + "__" + c.step2;
      write_file(dir / "trees" / (stem + ".json"), c.tree_json);
      write_file(dir / "trees" / (stem + ".dot"), c.tree_dot);
    }
  }
  write_file(dir / "run_info.json", info.dump(2) + "\n");
}

namespace {

void collect_subgroups(const TreeModel& tree, int id, const std::string& rule, const std::vector<std::string>& names,
                       std::vector<Subgroup>& out) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  if (n.is_leaf()) {
    out.push_back({rule.empty() ? "all subjects" : rule, n.count, n.mean});
    return;
  }
  const std::string name = names[static_cast<std::size_t>(n.var)];
  const std::string sep = rule.empty() ? "" : " & ";
  collect_subgroups(tree, n.left, rule + sep + name + " <= " + format_number(n.threshold), names, out);
  collect_subgroups(tree, n.right, rule + sep + name + " > " + format_number(n.threshold), names, out);
}

}  // namespace

AnalysisReport analyze(const Dataset& data, const VtSpec& spec, const std::optional<CalibrationRequest>& calibration,
                       int workers) {
  data.validate();
  AnalysisReport report;
  report.step1 = regressor_name(spec.step1);
  report.step2 = step2_name(spec.step2.kind);
  report.n = static_cast<int>(data.rows());
  VtSpec run = spec;
  if (calibration && spec.step2.kind != StepTwoKind::None) {
    report.calibration = calibrate_step2_penalty(data, spec.step1, spec.step2, calibration->M, calibration->alpha,
                                                 derive_seed(spec.seed, {7}), workers);
    run.step2.tuning = FixedPenalty{report.calibration->threshold};
  }
  const VtFit fit = run_vt(data, run);
  const auto names = data.names();
  if (!fit.step2_model) {
    report.subgroups.push_back({"all subjects", report.n, fit.cf.z_hat.mean()});
    return report;
  }
  for (int v : selected_variables(*fit.step2_model)) report.selected.push_back(names[static_cast<std::size_t>(v)]);
  if (const auto* tree = std::get_if<TreeModel>(&*fit.step2_model)) {
    collect_subgroups(*tree, 0, "", names, report.subgroups);
    report.tree_json = tree_to_json(*tree, names);
  } else {
    const auto& lin = std::get<SparseLinearModel>(*fit.step2_model);
    report.linear_terms.emplace_back("(intercept)", lin.intercept);
    for (std::size_t k = 0; k < lin.selected.size(); ++k)
      report.linear_terms.emplace_back(names[static_cast<std::size_t>(lin.selected[k])],
                                       lin.coefficients(static_cast<Index>(k)));
    report.subgroups.push_back({"all subjects", report.n, predict_effect(*fit.step2_model, data.X).mean()});
  }
  return report;
}

std::string AnalysisReport::to_json() const {
  json j;
  j["n"] = n;
  j["step1"] = step1;
  j["step2"] = step2;
  j["selected"] = selected;
  j["subgroups"] = json::array();
  for (const auto& g : subgroups) j["subgroups"].push_back({{"rule", g.rule}, {"size", g.size}, {"mean_effect", g.mean_effect}});
  if (calibration) {
    j["calibration"] = {{"M", calibration->M},
                        {"alpha", calibration->alpha},
                        {"threshold", calibration->threshold},
                        {"samples", std::vector<double>(calibration->samples.data(),
                                                        calibration->samples.data() + calibration->samples.size())}};
  }
  if (!linear_terms.empty()) {
    j["linear_terms"] = json::array();
    for (const auto& [name, coef] : linear_terms) j["linear_terms"].push_back({{"name", name}, {"coefficient", coef}});
  }
  if (!tree_json.empty()) j["tree"] = json::parse(tree_json);
  return j.dump(2);
}

std::string AnalysisReport::to_text() const {
  std::ostringstream out;
  out << "step 1: " << step1 << "   step 2: " << step2 << "   n = " << n << '\n';
  if (calibration)
    out << "calibrated penalty: " << format_number(calibration->threshold) << " (M = " << calibration->M
        << ", alpha = " << calibration->alpha << ")\n";
  out << "selected variables:";
  if (selected.empty()) out << " none";
  for (const auto& s : selected) out << ' ' << s;
  out << "\n\nsubgroups:\n";
  for (const auto& g : subgroups)
    out << "  " << g.rule << "\n      size " << g.size << ", mean effect " << format_number(g.mean_effect) << '\n';
  if (!linear_terms.empty()) {
    out << "\nlinear effect model:\n";
    for (const auto& [name, coef] : linear_terms) out << "  " << name << "  " << format_number(coef) << '\n';
  }
  return out.str();
}

}  // namespace vtwins
