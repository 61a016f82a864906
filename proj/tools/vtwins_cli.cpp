#include "vtwins/harness.hpp"
#include "vtwins/tree_export.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kInvalid = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vtwins::Error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vtwins::CalibrationRequest parse_calibration(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw vtwins::ConfigError("--calibrate expects M,alpha");
  vtwins::CalibrationRequest req;
  try {
    req.M = std::stoi(text.substr(0, comma));
    req.alpha = std::stod(text.substr(comma + 1));
  } catch (const std::exception&) {
    throw vtwins::ConfigError("--calibrate expects M,alpha");
  }
  return req;
}

// A bad option value is a usage error, not a runtime failure.
template <typename Fn>
auto option_value(Fn fn) {
  try {
    return fn();
  } catch (const vtwins::ConfigError&) {
    throw;
  } catch (const vtwins::Error& e) {
    throw vtwins::ConfigError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual Twins subgroup identification"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "write simulated train/test CSVs");
  std::string sim_linearity = "linear", sim_structure = "regular", sim_out = "sim";
  bool sim_no_teh = false;
  int sim_n = 600, sim_test = 2000;
  std::uint64_t sim_seed = 1;
  simulate->add_option("--linearity", sim_linearity, "linear or nonlinear");
  simulate->add_option("--structure", sim_structure, "regular, correlated or selection_bias");
  simulate->add_flag("--no-teh", sim_no_teh, "no treatment effect heterogeneity");
  simulate->add_option("--n-train", sim_n);
  simulate->add_option("--n-test", sim_test);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--out", sim_out, "output directory");

  auto* bench = app.add_subcommand("benchmark", "run a simulation benchmark");
  std::string config_path, bench_out;
  int replicates = 0, workers = 0;
  std::optional<std::uint64_t> bench_seed;
  bench->add_option("--config", config_path, "JSON config")->required();
  bench->add_option("--replicates", replicates);
  bench->add_option("--workers", workers);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--out", bench_out);

  auto* analyze = app.add_subcommand("analyze", "fit Virtual Twins to a CSV");
  std::string data_path, treatment = "trt", outcome = "y", step1 = "lasso", step2 = "rtree", calibrate, tree_out;
  std::uint64_t analyze_seed = 1;
  int analyze_workers = 1;
  bool as_json = false;
  analyze->add_option("--data", data_path)->required();
  analyze->add_option("--treatment", treatment);
  analyze->add_option("--outcome", outcome);
  analyze->add_option("--step1", step1, "lasso, forest, mars or superlearner");
  analyze->add_option("--step2", step2, "none, linear, rtree or ctree");
  analyze->add_option("--calibrate", calibrate, "M,alpha");
  analyze->add_option("--seed", analyze_seed);
  analyze->add_option("--workers", analyze_workers);
  analyze->add_option("--tree-out", tree_out, "write the subgroup tree as JSON");
  analyze->add_flag("--json", as_json);

  auto* export_tree = app.add_subcommand("export-tree", "convert a tree JSON file");
  std::string tree_in, format = "dot";
  export_tree->add_option("--in", tree_in)->required();
  export_tree->add_option("--format", format)->check(CLI::IsMember({"dot", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*simulate) {
      vtwins::ScenarioConfig sc;
      sc.linearity = option_value([&] { return vtwins::linearity_from_name(sim_linearity); });
      sc.structure = option_value([&] { return vtwins::structure_from_name(sim_structure); });
      sc.teh = !sim_no_teh;
      sc.n_train = sim_n;
      sc.n_test = sim_test;
      sc.seed = sim_seed;
      vtwins::write_simulation(vtwins::generate(sc), sim_out);
      std::cout << "wrote " << sim_out << '\n';
      return kOk;
    }
    if (*bench) {
      vtwins::BenchmarkConfig config = vtwins::load_config(config_path);
      if (replicates > 0) config.replicates = replicates;
      if (workers > 0) config.workers = workers;
      if (bench_seed) config.seed = *bench_seed;
      if (!bench_out.empty()) config.output_dir = bench_out;
      vtwins::validate_config(config);
      const auto table = vtwins::run_benchmark(config);
      vtwins::render_report(table, config.output_dir);
      std::cout << vtwins::results_markdown(table);
      return table.partial() ? kPartial : kOk;
    }
    if (*analyze) {
      const auto schema = vtwins::infer_schema(data_path, treatment, outcome);
      const auto data = vtwins::load_csv(data_path, schema);
      vtwins::VtSpec spec = option_value([&] { return vtwins::method_from_names(step1, step2); });
      spec.seed = analyze_seed;
      std::optional<vtwins::CalibrationRequest> cal;
      if (!calibrate.empty()) cal = option_value([&] { return parse_calibration(calibrate); });
      const auto report = vtwins::analyze(data, spec, cal, analyze_workers);
      std::cout << (as_json ? report.to_json() + "\n" : report.to_text());
      if (!tree_out.empty()) {
        if (report.tree_json.empty()) throw vtwins::Error("step 2 model is not a tree");
        std::ofstream(tree_out) << report.tree_json << '\n';
      }
      return kOk;
    }
    if (*export_tree) {
      std::vector<std::string> names;
      const auto tree = vtwins::tree_from_json(read_text(tree_in), &names);
      std::cout << (format == "dot" ? vtwins::tree_to_dot(tree, names) : vtwins::tree_to_json(tree, names) + "\n");
      return kOk;
    }
  } catch (const vtwins::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kOk;
}
