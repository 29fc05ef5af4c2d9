#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "quantbench/dataset.hpp"
#include "quantbench/evaluation.hpp"
#include "quantbench/report_io.hpp"

namespace fs = std::filesystem;
using namespace quantbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct RunConfig {
  std::vector<fs::path> datasets;
  std::vector<std::string> methods = {"cc", "acc", "pcc", "pacc", "sld", "hdy", "mlpe"};
  std::string loss = "ae";
  double step = 0.05;
  std::size_t m = 25;
  std::size_t q = 100;
  std::size_t validation_m = 5;
  std::size_t min_df = 5;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::size_t ensemble_n = 50;
  std::size_t ensemble_q = 1000;
  fs::path output = "out";
};

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

RunConfig read_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open config: " + file.string());
  RunConfig cfg;
  const fs::path dir = file.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t sep = stripped.find('=');
    if (sep == std::string::npos) sep = stripped.find(' ');
    if (sep == std::string::npos)
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": expected 'key value'");
    const std::string key = trim(stripped.substr(0, sep));
    const std::string value = trim(stripped.substr(sep + 1));
    if (key == "dataset") {
      fs::path p = value;
      cfg.datasets.push_back(p.is_absolute() ? p : dir / p);
    } else if (key == "methods") {
      cfg.methods.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.methods.push_back(trim(tok));
    } else if (key == "loss") {
      cfg.loss = value;
    } else if (key == "step") {
      cfg.step = std::stod(value);
    } else if (key == "m") {
      cfg.m = std::stoull(value);
    } else if (key == "q") {
      cfg.q = std::stoull(value);
    } else if (key == "validation_m") {
      cfg.validation_m = std::stoull(value);
    } else if (key == "min_df") {
      cfg.min_df = std::stoull(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "jobs") {
      cfg.jobs = std::stoi(value);
    } else if (key == "ensemble_n") {
      cfg.ensemble_n = std::stoull(value);
    } else if (key == "ensemble_q") {
      cfg.ensemble_q = std::stoull(value);
    } else if (key == "output") {
      fs::path p = value;
      cfg.output = p.is_absolute() ? p : dir / p;
    } else {
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": unknown key '" + key +
                       "'");
    }
  }
  if (cfg.datasets.empty()) throw ParseError(file.string() + ": no datasets declared");
  return cfg;
}

int cmd_convert(const std::vector<fs::path>& inputs, const std::string& name,
                const fs::path& out_dir, const std::optional<fs::path>& label_map) {
  if (inputs.size() != 3) {
    std::cerr << "convert expects exactly three inputs: train validation test\n";
    return kExitUsage;
  }
  const DatasetBundle bundle =
      load_dataset(inputs[0], inputs[1], inputs[2], name, label_map);
  fs::create_directories(out_dir);
  save_collection(out_dir / (name + ".train.txt"), bundle.train);
  save_collection(out_dir / (name + ".validation.txt"), bundle.validation);
  save_collection(out_dir / (name + ".test.txt"), bundle.test);
  std::ofstream manifest(out_dir / (name + ".manifest"));
  if (!manifest) throw std::runtime_error("cannot write manifest");
  manifest << "name " << name << '\n'
           << "train " << name << ".train.txt\n"
           << "validation " << name << ".validation.txt\n"
           << "test " << name << ".test.txt\n";
  std::cout << "converted " << name << ": train=" << bundle.train.size()
            << " validation=" << bundle.validation.size() << " test=" << bundle.test.size()
            << '\n';
  return kExitOk;
}

int cmd_run(const fs::path& config_path, const std::vector<std::string>& method_override,
            const std::string& loss_override, std::optional<std::uint64_t> seed_override,
            std::optional<int> jobs_override) {
  RunConfig cfg = read_config(config_path);
  if (!method_override.empty()) cfg.methods = method_override;
  if (!loss_override.empty()) cfg.loss = loss_override;
  if (seed_override) cfg.seed = *seed_override;
  if (jobs_override) cfg.jobs = *jobs_override;
  if (const char* env_seed = std::getenv("QUANTBENCH_SEED"))
    cfg.seed = std::stoull(env_seed);

  std::vector<Method> methods;
  for (const auto& name : cfg.methods) methods.push_back(method_from_name(name));
  const Loss loss = loss_from_name(cfg.loss);

  RunPlan plan;
  plan.grid_step = cfg.step;
  plan.test_plan = SamplingPlan{cfg.m, cfg.q, 0, ReplacementPolicy::kAuto};
  plan.validation_plan = SamplingPlan{cfg.validation_m, cfg.q, 0, ReplacementPolicy::kAuto};
  plan.min_df = cfg.min_df;
  plan.ensemble = EnsembleParams{cfg.ensemble_n, cfg.ensemble_q};
  plan.jobs = cfg.jobs;

  RunMetadata meta;
  meta.seed = cfg.seed;
  meta.loss = loss;
  meta.grid_step = cfg.step;
  meta.m = cfg.m;
  meta.q = cfg.q;
  meta.validation_m = cfg.validation_m;
  meta.min_df = cfg.min_df;
  meta.jobs = cfg.jobs;

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ExperimentRecord> records;
  std::size_t failures = 0;
  for (const auto& manifest : cfg.datasets) {
    const DatasetBundle raw = load_manifest(manifest);
    const DatasetBundle bundle = feature_select(raw, cfg.min_df);
    std::cout << "dataset " << bundle.name << ": train=" << bundle.train.size()
              << " validation=" << bundle.validation.size() << " test=" << bundle.test.size()
              << '\n';
    std::vector<MethodRunInfo> infos;
    auto ds_records = run_experiment(bundle, methods, loss, plan, cfg.seed, &infos);
    for (const auto& info : infos) {
      if (info.ok) {
        std::cout << "  " << info.method << ": best_C=" << info.best_C << " ("
                  << info.selection_seconds + info.evaluation_seconds << "s)\n";
      } else {
        ++failures;
        std::cerr << "  " << info.method << " FAILED: " << info.error << '\n';
      }
    }
    records.insert(records.end(), std::make_move_iterator(ds_records.begin()),
                   std::make_move_iterator(ds_records.end()));
    meta.per_dataset.emplace_back(bundle.name, std::move(infos));
  }
  meta.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (records.empty()) {
    std::cerr << "error: no method produced records\n";
    return kExitRuntime;
  }

  fs::create_directories(cfg.output);
  write_records_csv(cfg.output / "records.csv", records);
  {
    std::ofstream out(cfg.output / "metadata.json");
    write_metadata_json(out, meta);
  }
  {
    // effective configuration after overrides, so the run directory is
    // self-describing and reproducible on its own
    std::ofstream out(cfg.output / "run.config");
    for (const auto& d : cfg.datasets) out << "dataset " << d.string() << '\n';
    out << "methods ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
      out << (i ? "," : "") << cfg.methods[i];
    out << "\nloss " << cfg.loss << "\nstep " << cfg.step << "\nm " << cfg.m << "\nq " << cfg.q
        << "\nvalidation_m " << cfg.validation_m << "\nmin_df " << cfg.min_df << "\nseed "
        << cfg.seed << "\njobs " << cfg.jobs << "\nensemble_n " << cfg.ensemble_n
        << "\nensemble_q " << cfg.ensemble_q << "\noutput " << cfg.output.string() << '\n';
  }
  // Reports are regenerated from the file so that `run` and a later `report`
  // produce identical artifacts.
  const auto reread = read_records_csv(cfg.output / "records.csv");
  write_report_files(cfg.output, reread, loss);
  std::cout << "wrote " << records.size() << " records to "
            << (cfg.output / "records.csv").string() << '\n';
  return kExitOk;
}

int cmd_report(const fs::path& records_path, const std::string& measure,
               std::optional<fs::path> out_dir) {
  const auto records = read_records_csv(records_path);
  const fs::path dir = out_dir ? *out_dir : records_path.parent_path();
  write_report_files(dir, records, loss_from_name(measure));
  std::cout << "reports written to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantbench: class-prevalence estimation benchmark harness"};
  app.require_subcommand(1);

  auto* convert = app.add_subcommand("convert", "normalize vector files and write a manifest");
  std::vector<fs::path> convert_inputs;
  std::string convert_name = "dataset";
  fs::path convert_out = ".";
  std::string convert_label_map;
  convert->add_option("inputs", convert_inputs, "train, validation, test files")->expected(3);
  convert->add_option("--name", convert_name, "dataset name");
  convert->add_option("--out", convert_out, "output directory");
  convert->add_option("--label-map", convert_label_map, "sidecar label map file");

  auto* run = app.add_subcommand("run", "run the evaluation protocol from a config file");
  fs::path run_config;
  std::vector<std::string> run_methods;
  std::string run_loss;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_jobs;
  run->add_option("--config", run_config, "run configuration file")->required();
  run->add_option("--methods", run_methods, "methods to run (comma separated)")
      ->delimiter(',');
  run->add_option("--loss", run_loss, "model-selection and report loss: ae|rae");
  run->add_option("--seed", run_seed, "seed override");
  run->add_option("--jobs", run_jobs, "worker threads (0 = hardware)");

  auto* report = app.add_subcommand("report", "rebuild report files from records.csv");
  fs::path report_records;
  std::string report_measure = "ae";
  std::optional<fs::path> report_out;
  report->add_option("--records", report_records, "records.csv path")->required();
  report->add_option("--measure", report_measure, "ae|rae");
  report->add_option("--out", report_out, "output directory (default: records directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (convert->parsed()) {
      std::optional<fs::path> label_map;
      if (!convert_label_map.empty()) label_map = convert_label_map;
      return cmd_convert(convert_inputs, convert_name, convert_out, label_map);
    }
    if (run->parsed())
      return cmd_run(run_config, run_methods, run_loss, run_seed, run_jobs);
    if (report->parsed()) return cmd_report(report_records, report_measure, report_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
