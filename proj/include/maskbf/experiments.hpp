#pragma once

// End-to-end runs of the three mask/beamformer studies: peak performance
// with optimised masks (exp1), cross-method mask transfer (exp2) and oracle
// ratio masks versus optimised masks (exp3).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskbf/beamformers.hpp"
#include "maskbf/config.hpp"
#include "maskbf/mask_optimizer.hpp"
#include "maskbf/scene_gen.hpp"

namespace maskbf {

struct ExperimentConfig {
  std::string experiment = "exp1";

  // Synthetic suite.
  int num_scenes = 10;
  int n_mics = 4;
  double duration = 2.0;
  double noise_level = 0.5;
  double diffuse_level = 0.22;
  StftConfig stft{256, 64, WindowKind::Hann};

  // Real data; when set the run is informational (no gates).
  std::optional<std::filesystem::path> dataset_root;
  ChimeLayout layout;
  int max_utterances = 0;  // 0 = all
  std::optional<int> ref_mic;  // default 0 synthetic, 4 dataset

  std::vector<MethodId> methods{MethodId::MaxSnr, MethodId::MaxSor, MethodId::MinNor, MethodId::MaskMwf};
  std::vector<double> bg_multipliers{1.0, 2.0, 4.0};
  OptimizerConfig optimizer;
  std::filesystem::path out_dir = "maskbf_out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  bool write_traces = false;

  bool synthetic() const { return !dataset_root.has_value(); }
  int reference_mic() const { return ref_mic.value_or(synthetic() ? 0 : 4); }

  /// Switches to the 1024/256 framing used for full-size data.
  void use_full_framing() { stft = {1024, 256, WindowKind::Hann}; }

  /// Canonical text of every field that influences optimised masks.
  std::string fingerprint() const;
  /// FNV-1a 64 of fingerprint(), as 16 hex digits.
  std::string checksum() const;

  void validate() const;

  static ExperimentConfig from_config(const KeyValueConfig& config);
};

struct ResultRow {
  std::string scene;
  double bg_multiplier = 1;
  std::string method;      // beamformer that produced the output
  std::string mask;        // Optimized, IRM(b=1), ..., none
  std::string provenance;  // method that produced the mask [+ conversion rule]
  double sdr_db = 0;
  double si_sdr_db = 0;
  double mse = 0;
  int iterations = 0;
};

struct GateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<GateResult> gates;
  bool informational = false;  // real-data run, gates not enforced
  std::vector<std::string> notes;

  /// True when every gate passed, or when the run is informational.
  bool gates_passed() const;
};

/// One (scene, multiplier) case, materialised on demand.
struct SceneCase {
  std::string scene;
  double bg_multiplier = 1;
  std::string key() const;  // "<scene>_x<multiplier>"
};

std::vector<SceneCase> enumerate_cases(const ExperimentConfig& config);
Scene load_case(const ExperimentConfig& config, const SceneCase& c);

struct Evaluation {
  double sdr_db = 0, si_sdr_db = 0, mse = 0;
  Eigen::VectorXd mse_per_bin;
};

/// Filter estimation, ideal scaling, inverse STFT and SDR against the
/// reference-mic target of the scene.
Evaluation evaluate(const Scene& scene, MethodId method, const MaskSet& masks, double loading);

ExperimentResult run_exp1(const ExperimentConfig& config);
ExperimentResult run_exp2(const ExperimentConfig& config);
ExperimentResult run_exp3(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Optimised masks persisted by exp1 for one case and method. Throws
/// InvalidConfig when the stored checksum does not match `config`.
MaskSet load_optimized_masks(const ExperimentConfig& config, const SceneCase& c, MethodId method);
bool has_optimized_masks(const ExperimentConfig& config);

/// Writes <exp>_results.csv, <exp>_summary.json and <exp>_tables.txt into
/// the output directory.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

std::string results_csv(const ExperimentResult& result);
std::string results_table(const ExperimentResult& result);

}  // namespace maskbf
