// maskbf: runs the optimised-mask beamformer experiments and writes their
// result tables.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "maskbf/error.hpp"
#include "maskbf/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mask-based beamformer experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string dataset_root;
  std::string gradient;
  long long seed = -1;
  int iters = -1;
  int scenes = -1;
  int threads = -1;
  bool full_framing = false;
  bool traces = false;

  for (const char* name : {"exp1", "exp2", "exp3"}) {
    auto* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--dataset-root", dataset_root, "CHiME-style dataset root (else $MASKBF_DATASET_ROOT)");
    sub->add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--gradient", gradient, "fd | analytic")->check(CLI::IsMember({"fd", "analytic"}));
    sub->add_option("--iters", iters, "optimizer iterations per bin")->check(CLI::NonNegativeNumber);
    sub->add_option("--scenes", scenes, "number of synthetic scenes")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sub->add_flag("--full-framing", full_framing, "use 1024/256 framing");
    sub->add_flag("--traces", traces, "write per-bin optimizer traces");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto file = maskbf::KeyValueConfig::load(config_path);
    maskbf::ExperimentConfig config = maskbf::ExperimentConfig::from_config(file);
    config.experiment = app.get_subcommands().front()->get_name();
    config.out_dir = out_dir;
    if (!dataset_root.empty()) {
      config.dataset_root = dataset_root;
    } else if (!config.dataset_root) {
      if (const char* env = std::getenv("MASKBF_DATASET_ROOT"); env && *env) config.dataset_root = env;
    }
    if (seed >= 0) config.seed = config.optimizer.seed = static_cast<std::uint64_t>(seed);
    if (!gradient.empty()) config.optimizer.gradient_mode = maskbf::parse_gradient_mode(gradient);
    if (iters >= 0) config.optimizer.iterations = iters;
    if (scenes > 0) config.num_scenes = scenes;
    if (threads >= 0) config.threads = threads;
    if (full_framing) config.use_full_framing();
    if (traces) config.write_traces = true;

    const maskbf::ExperimentResult result = maskbf::run_experiment(config);
    maskbf::emit_report(result, config.out_dir);
    std::cout << maskbf::results_table(result);
    return result.gates_passed() ? 0 : 1;
  } catch (const maskbf::Error& e) {
    std::cerr << "maskbf: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "maskbf: unexpected error: " << e.what() << "\n";
    return 3;
  }
}
