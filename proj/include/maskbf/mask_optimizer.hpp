#pragma once

// Oracle search for the mask set that minimises the mean squared error
// between the ideally scaled beamformer output and the reference-mic target,
// subject to m >= 0 and <m^2>_t = 1 per frequency bin. The objective is
// separable over bins, so every routine works bin by bin.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maskbf/beamformers.hpp"
#include "maskbf/masks.hpp"
#include "maskbf/scene_gen.hpp"

namespace maskbf {

enum class GradientMode { FiniteDifference, Analytic };

std::string_view to_string(GradientMode mode);
GradientMode parse_gradient_mode(std::string_view name);  // "fd" | "analytic"

struct OptimizerConfig {
  int iterations = 500;
  double step_size = 0.01;
  GradientMode gradient_mode = GradientMode::Analytic;
  double fd_step = 1e-5;
  double early_stop_rel = 1e-8;
  int early_stop_window = 20;
  double loading = kDefaultLoading;
  std::uint64_t seed = 0;
  double init_noise = 0.0;  // uniform jitter amplitude added to the initial masks

  void validate() const;
};

/// Everything the per-bin objective needs: observation statistics, the
/// reference-mic target and its cross-correlation with the observation.
struct BinProblem {
  BinData data;
  Eigen::VectorXcd target;  // s_k(t)
  int ref_mic = 0;
  Eigen::VectorXcd cross;   // <x s_k^*>
  double target_power = 0;  // <|s_k|^2>

  BinProblem(Eigen::MatrixXcd x, Eigen::VectorXcd target_ref, int ref_mic, double loading);
  int frames() const { return data.frames(); }
};

using MaskRowRef = Eigen::Ref<const Eigen::ArrayXd>;

/// <|s_k - gamma w^H x|^2>_t with the ideal gamma, in closed form:
/// P - |c^H w|^2 / (w^H Phi_x w). Equals P for a zero filter.
double bin_objective(const BinProblem& p, const Eigen::VectorXcd& w);

/// Filter of `method` for one bin from its masks (unused roles may be empty).
Eigen::VectorXcd bin_filter(MethodId method, const BinProblem& p, const MaskRowRef& ms,
                            const MaskRowRef& mn);

/// Objective of one bin; a singular bin scores as a zero filter.
double bin_objective(MethodId method, const BinProblem& p, const MaskRowRef& ms, const MaskRowRef& mn);

struct BinGradient {
  Eigen::ArrayXd ms;  // empty when the method does not use m_s
  Eigen::ArrayXd mn;
  bool used_fallback = false;  // analytic path degenerate, FD used instead
};

BinGradient bin_gradient_fd(MethodId method, const BinProblem& p, const MaskRowRef& ms,
                            const MaskRowRef& mn, double step);
/// Closed-form adjoint through covariance assembly, loaded solve or GEV and
/// ideal scaling. Falls back to FD when the selected eigenvalue is repeated.
BinGradient bin_gradient_analytic(MethodId method, const BinProblem& p, const MaskRowRef& ms,
                                  const MaskRowRef& mn, double fd_step);

struct ObjectiveValue {
  Eigen::VectorXd per_bin;
  double fullband = 0;  // sum over bins
};

/// Full pipeline objective: method filter, apply_filter, ideal_scale, MSE.
ObjectiveValue objective(MethodId method, const MaskSet& masks, const Spectrogram& x,
                         const Spectrogram& s, int ref_mic, double loading = kDefaultLoading);

struct MaskGradient {
  MaskSet grad;  // same roles as the method consumes
  std::vector<std::string> warnings;
};

MaskGradient gradient(MethodId method, const MaskSet& masks, const Spectrogram& x,
                      const Spectrogram& s, int ref_mic, const OptimizerConfig& config);

struct OptimizationTrace {
  MethodId method = MethodId::MaskMwf;
  MaskSet masks;  // best masks found, constraint-projected
  /// Per bin: objective of the current iterate after projection, index 0 is
  /// the initial mask.
  std::vector<std::vector<double>> current;
  /// Per bin: best-so-far objective, non-increasing.
  std::vector<std::vector<double>> best;
  std::vector<double> fullband;  // sum over bins of best-so-far per iteration
  int iterations = 0;            // max iterations executed over bins
  std::vector<std::string> warnings;

  Eigen::VectorXd initial_objective() const;
  Eigen::VectorXd final_objective() const;
};

/// Projected normalised gradient descent, independently per bin, starting
/// from `init` (projected first). Deterministic for a fixed config.
OptimizationTrace optimize(MethodId method, const Spectrogram& x, const Spectrogram& s,
                           int ref_mic, const MaskSet& init, const OptimizerConfig& config);

/// Builds the initial masks of the requested kind from the scene's
/// ground truth (Optimized falls back to IRM(1)) and runs optimize().
OptimizationTrace optimize(MethodId method, const Scene& scene, MaskKind init,
                           const OptimizerConfig& config);

/// Oracle masks of a kind for a scene, restricted to the roles of `method`.
MaskSet initial_masks(MethodId method, const Scene& scene, MaskKind kind);

/// CSV with header "iteration,bin,objective" (best-so-far values).
void write_trace_csv(const std::filesystem::path& path, const OptimizationTrace& trace);

}  // namespace maskbf
