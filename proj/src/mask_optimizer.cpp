#include "maskbf/mask_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

using cd = std::complex<double>;

// Matrices a method's filter is built from. Kept so that finite
// differences can perturb one frame's contribution without reassembly.
struct Assembled {
  HermitianMatrix a, b;
  Eigen::VectorXcd rhs;
};

Assembled assemble(MethodId method, const BinProblem& p, const MaskRowRef& ms, const MaskRowRef& mn) {
  const BinData& d = p.data;
  Assembled out;
  switch (method) {
    case MethodId::MaskMwf:
      out.rhs = d.x * (ms.cast<cd>() * d.x.row(p.ref_mic).transpose().conjugate().array()).matrix() /
                double(d.frames());
      break;
    case MethodId::IdealMwf:
      out.rhs = p.cross;
      break;
    case MethodId::MaxSnr:
      out.a = loaded_masked_covariance(d, ms);
      out.b = loaded_masked_covariance(d, mn);
      break;
    case MethodId::MaxSor:
      out.a = loaded_masked_covariance(d, ms);
      out.b = loaded(d.phi_x, d.loading);
      break;
    case MethodId::MinNor:
      out.a = loaded_masked_covariance(d, mn);
      out.b = loaded(d.phi_x, d.loading);
      break;
  }
  return out;
}

Eigen::VectorXcd filter_from(MethodId method, const BinProblem& p, const Assembled& m) {
  switch (method) {
    case MethodId::MaskMwf:
    case MethodId::IdealMwf: return solve_loaded(p.data.phi_x, m.rhs, p.data.loading);
    case MethodId::MaxSnr:
    case MethodId::MaxSor: return gev_max(m.a, m.b, 0.0).eigenvector;
    case MethodId::MinNor: return gev_min(m.a, m.b, 0.0).eigenvector;
  }
  return {};
}

double objective_from(MethodId method, const BinProblem& p, const Assembled& m) {
  try {
    return bin_objective(p, filter_from(method, p, m));
  } catch (const NumericalError&) {
    return p.target_power;
  }
}

// dJ/d(conj w) of J(w) = P - |c^H w|^2 / (w^H R w).
Eigen::VectorXcd objective_cogradient(const BinProblem& p, const Eigen::VectorXcd& w) {
  const Eigen::VectorXcd rw = p.data.phi_x * w;
  const double b = w.dot(rw).real();
  if (!(b > 0)) return Eigen::VectorXcd::Zero(w.size());
  const cd cw = p.cross.dot(w);  // c^H w
  const double a = std::norm(cw);
  return -(p.cross * cw * b - a * rw) / (b * b);
}

void check_roles(MethodId method, const BinProblem& p, const MaskRowRef& ms, const MaskRowRef& mn) {
  if (uses_target_mask(method) && ms.size() != p.frames())
    throw InvalidInput(std::string(to_string(method)) + ": m_s missing or wrong length");
  if (uses_interference_mask(method) && mn.size() != p.frames())
    throw InvalidInput(std::string(to_string(method)) + ": m_n missing or wrong length");
}

const Eigen::ArrayXd kEmptyRow;

Eigen::ArrayXd row_of(const std::optional<MaskArray>& m, int f) {
  return m ? Eigen::ArrayXd(m->row(f).transpose()) : Eigen::ArrayXd();
}

}  // namespace

std::string_view to_string(GradientMode mode) {
  return mode == GradientMode::Analytic ? "analytic" : "fd";
}

GradientMode parse_gradient_mode(std::string_view name) {
  if (name == "fd" || name == "FiniteDifference") return GradientMode::FiniteDifference;
  if (name == "analytic" || name == "Analytic") return GradientMode::Analytic;
  throw InvalidConfig("unknown gradient mode '" + std::string(name) + "' (fd|analytic)");
}

void OptimizerConfig::validate() const {
  if (iterations < 1) throw InvalidConfig("optimizer: iterations must be >= 1");
  if (!(step_size > 0)) throw InvalidConfig("optimizer: step_size must be > 0");
  if (!(fd_step > 0)) throw InvalidConfig("optimizer: fd_step must be > 0");
  if (early_stop_window < 1) throw InvalidConfig("optimizer: early_stop_window must be >= 1");
  if (!(loading >= 0)) throw InvalidConfig("optimizer: loading must be >= 0");
  if (!(init_noise >= 0)) throw InvalidConfig("optimizer: init_noise must be >= 0");
}

BinProblem::BinProblem(Eigen::MatrixXcd x, Eigen::VectorXcd target_ref, int k, double loading)
    : data(std::move(x), loading), target(std::move(target_ref)), ref_mic(k) {
  if (target.size() != data.frames()) throw InvalidInput("target length != frame count");
  if (k < 0 || k >= data.channels()) throw InvalidInput("ref_mic out of range");
  const double frames = std::max(1, data.frames());
  cross = data.x * target.conjugate() / frames;
  target_power = target.squaredNorm() / frames;
}

double bin_objective(const BinProblem& p, const Eigen::VectorXcd& w) {
  const double b = w.dot(p.data.phi_x * w).real();
  if (!(b > 0)) return p.target_power;
  const double a = std::norm(p.cross.dot(w));
  return std::max(0.0, p.target_power - a / b);
}

Eigen::VectorXcd bin_filter(MethodId method, const BinProblem& p, const MaskRowRef& ms, const MaskRowRef& mn) {
  check_roles(method, p, ms, mn);
  return filter_from(method, p, assemble(method, p, ms, mn));
}

double bin_objective(MethodId method, const BinProblem& p, const MaskRowRef& ms, const MaskRowRef& mn) {
  check_roles(method, p, ms, mn);
  return objective_from(method, p, assemble(method, p, ms, mn));
}

BinGradient bin_gradient_fd(MethodId method, const BinProblem& p, const MaskRowRef& ms,
                            const MaskRowRef& mn, double step) {
  check_roles(method, p, ms, mn);
  const BinData& d = p.data;
  const int frames = p.frames();
  const Assembled base = assemble(method, p, ms, mn);
  const double inv_t = 1.0 / frames;
  const double diag_load = d.loading * d.tau * inv_t;

  // Central difference on one mask entry: only frame t's contribution moves.
  auto diff = [&](int t, bool target_role) {
    Assembled plus = base, minus = base;
    if (method == MethodId::MaskMwf) {
      const Eigen::VectorXcd delta = d.x.col(t) * std::conj(d.x(p.ref_mic, t)) * (step * inv_t);
      plus.rhs += delta;
      minus.rhs -= delta;
    } else {
      HermitianMatrix delta = d.x.col(t) * d.x.col(t).adjoint() * inv_t;
      delta.diagonal().array() += diag_load;
      delta *= step;
      // MaxSnr: m_n lives in the right-hand matrix.
      const bool in_b = method == MethodId::MaxSnr && !target_role;
      (in_b ? plus.b : plus.a) += delta;
      (in_b ? minus.b : minus.a) -= delta;
    }
    return (objective_from(method, p, plus) - objective_from(method, p, minus)) / (2 * step);
  };

  BinGradient g;
  if (uses_target_mask(method)) {
    g.ms.resize(frames);
    for (int t = 0; t < frames; ++t) g.ms(t) = diff(t, true);
  }
  if (uses_interference_mask(method)) {
    g.mn.resize(frames);
    for (int t = 0; t < frames; ++t) g.mn(t) = diff(t, false);
  }
  return g;
}

BinGradient bin_gradient_analytic(MethodId method, const BinProblem& p, const MaskRowRef& ms,
                                  const MaskRowRef& mn, double fd_step) {
  check_roles(method, p, ms, mn);
  const BinData& d = p.data;
  const double frames = p.frames();
  const Assembled m = assemble(method, p, ms, mn);
  BinGradient g;

  if (method == MethodId::IdealMwf) return g;

  if (method == MethodId::MaskMwf) {
    // w = A^{-1} r(m), dr/dm_t = x_t conj(x_k,t) / T.
    const Eigen::VectorXcd w = solve_loaded(d.phi_x, m.rhs, d.loading);
    const Eigen::VectorXcd h = solve_loaded(d.phi_x, objective_cogradient(p, w), d.loading);
    const Eigen::RowVectorXcd hx = h.adjoint() * d.x;
    g.ms = (2.0 / frames) *
           (hx.transpose().array() * d.x.row(p.ref_mic).transpose().conjugate().array()).real();
    return g;
  }

  // Eigenvector perturbation: dv_j = sum_{i != j} v_i v_i^H (dA - l_j dB) v_j / (l_j - l_i)
  // plus a component along v_j that the scale-free objective ignores.
  const auto dec = gev_decompose(m.a, m.b, 0.0);
  const Eigen::Index n = dec.eigenvalues.size();
  const Eigen::Index j = method == MethodId::MinNor ? 0 : n - 1;
  const Eigen::MatrixXcd& v = dec.eigenvectors;
  const double lj = dec.eigenvalues(j);
  const double scale = dec.eigenvalues.cwiseAbs().maxCoeff();

  const Eigen::VectorXcd cog = objective_cogradient(p, v.col(j));
  Eigen::VectorXcd kappa = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == j) continue;
    const double gap = lj - dec.eigenvalues(i);
    if (std::abs(gap) <= 1e-10 * scale) {
      g = bin_gradient_fd(method, p, ms, mn, fd_step);
      g.used_fallback = true;
      return g;
    }
    kappa(i) = cog.dot(v.col(i)) / gap;  // g^H v_i / (l_j - l_i)
  }
  const Eigen::MatrixXcd z = v.adjoint() * d.x;  // z(i, t) = v_i^H x_t
  // Diagonal load contributes eps*tau*v_i^H v_j per frame.
  const cd load_term = d.loading * d.tau * (kappa.transpose() * (v.adjoint() * v.col(j)))(0);
  const Eigen::ArrayXcd q =
      (kappa.transpose() * z).transpose().array() * z.row(j).transpose().conjugate().array() + load_term;
  const Eigen::ArrayXd base = (2.0 / frames) * q.real();

  switch (method) {
    case MethodId::MaxSnr:
      g.ms = base;
      g.mn = -lj * base;
      break;
    case MethodId::MaxSor: g.ms = base; break;
    case MethodId::MinNor: g.mn = base; break;
    default: break;
  }
  return g;
}

ObjectiveValue objective(MethodId method, const MaskSet& masks, const Spectrogram& x,
                         const Spectrogram& s, int ref_mic, double loading) {
  if (!x.same_shape(s)) throw InvalidInput("objective: x and s shapes differ");
  const BeamformerFilter filter = estimate_filter(method, x, masks, &s, ref_mic, loading);
  const Eigen::MatrixXcd target = s.channel(ref_mic);
  const ScaledOutput out = ideal_scale(apply_filter(filter, x), target);
  ObjectiveValue v;
  v.per_bin = (target - out.y).cwiseAbs2().rowwise().mean();
  v.fullband = v.per_bin.sum();
  return v;
}

MaskGradient gradient(MethodId method, const MaskSet& masks, const Spectrogram& x,
                      const Spectrogram& s, int ref_mic, const OptimizerConfig& config) {
  masks.validate();
  if (uses_target_mask(method) && !masks.has_ms()) throw InvalidInput("gradient: m_s required");
  if (uses_interference_mask(method) && !masks.has_mn()) throw InvalidInput("gradient: m_n required");
  MaskGradient out;
  if (uses_target_mask(method)) out.grad.ms = MaskArray::Zero(x.num_bins(), x.num_frames());
  if (uses_interference_mask(method)) out.grad.mn = MaskArray::Zero(x.num_bins(), x.num_frames());
  for (int f = 0; f < x.num_bins(); ++f) {
    const BinProblem p(x.bin(f), s.bin(f).row(ref_mic).transpose(), ref_mic, config.loading);
    const Eigen::ArrayXd ms = row_of(masks.ms, f), mn = row_of(masks.mn, f);
    BinGradient g;
    try {
      g = config.gradient_mode == GradientMode::Analytic
              ? bin_gradient_analytic(method, p, ms, mn, config.fd_step)
              : bin_gradient_fd(method, p, ms, mn, config.fd_step);
    } catch (const NumericalError& e) {
      out.warnings.push_back("bin " + std::to_string(f) + ": " + e.what());
      continue;
    }
    if (g.used_fallback) out.warnings.push_back("bin " + std::to_string(f) + ": analytic gradient fell back to FD");
    if (out.grad.ms && g.ms.size()) out.grad.ms->row(f) = g.ms.transpose();
    if (out.grad.mn && g.mn.size()) out.grad.mn->row(f) = g.mn.transpose();
  }
  return out;
}

Eigen::VectorXd OptimizationTrace::initial_objective() const {
  Eigen::VectorXd v(best.size());
  for (std::size_t f = 0; f < best.size(); ++f) v(f) = best[f].empty() ? 0.0 : best[f].front();
  return v;
}

Eigen::VectorXd OptimizationTrace::final_objective() const {
  Eigen::VectorXd v(best.size());
  for (std::size_t f = 0; f < best.size(); ++f) v(f) = best[f].empty() ? 0.0 : best[f].back();
  return v;
}

OptimizationTrace optimize(MethodId method, const Spectrogram& x, const Spectrogram& s, int ref_mic,
                           const MaskSet& init, const OptimizerConfig& config) {
  config.validate();
  if (method == MethodId::IdealMwf) throw InvalidInput("optimize: IdealMwf has no masks");
  if (!x.same_shape(s)) throw InvalidInput("optimize: x and s shapes differ");
  const bool use_s = uses_target_mask(method), use_n = uses_interference_mask(method);
  if ((use_s && !init.has_ms()) || (use_n && !init.has_mn()))
    throw InvalidInput("optimize: initial masks lack a role required by " + std::string(to_string(method)));

  const int bins = x.num_bins(), frames = x.num_frames();
  OptimizationTrace trace;
  trace.method = method;
  if (use_s) trace.masks.ms = MaskArray(bins, frames);
  if (use_n) trace.masks.mn = MaskArray(bins, frames);
  trace.current.resize(bins);
  trace.best.resize(bins);

  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  auto start_row = [&](const std::optional<MaskArray>& m, int f) {
    // Seeded per bin and role so bins stay independent of each other.
    std::mt19937_64 rng(config.seed * 1000003ull + static_cast<std::uint64_t>(f) * 2 + (&m == &init.mn));
    Eigen::ArrayXd row = m->row(f).transpose();
    if (row.size() != frames) throw InvalidInput("optimize: initial mask shape mismatch");
    if (config.init_noise > 0)
      for (auto& v : row) v += config.init_noise * jitter(rng);
    project_row(row);
    return row;
  };

  for (int f = 0; f < bins; ++f) {
    const BinProblem p(x.bin(f), s.bin(f).row(ref_mic).transpose(), ref_mic, config.loading);
    Eigen::ArrayXd ms = use_s ? start_row(init.ms, f) : Eigen::ArrayXd();
    Eigen::ArrayXd mn = use_n ? start_row(init.mn, f) : Eigen::ArrayXd();
    Eigen::ArrayXd best_ms = ms, best_mn = mn;
    double current = bin_objective(method, p, ms, mn);
    double best = current;
    auto& cur_hist = trace.current[f];
    auto& best_hist = trace.best[f];
    cur_hist.push_back(current);
    best_hist.push_back(best);

    // Nothing to extract: any mask is optimal.
    const bool silent = !(p.target_power > 0);
    for (int it = 1; it <= config.iterations && !silent; ++it) {
      BinGradient g;
      try {
        g = config.gradient_mode == GradientMode::Analytic
                ? bin_gradient_analytic(method, p, ms, mn, config.fd_step)
                : bin_gradient_fd(method, p, ms, mn, config.fd_step);
      } catch (const NumericalError& e) {
        trace.warnings.push_back("bin " + std::to_string(f) + " iteration " + std::to_string(it) +
                                 ": " + e.what());
        break;
      }
      if (g.used_fallback && trace.warnings.size() < 1000)
        trace.warnings.push_back("bin " + std::to_string(f) + " iteration " + std::to_string(it) +
                                 ": analytic gradient fell back to FD");
      double norm = 0;
      if (use_s) norm = std::max(norm, g.ms.abs().maxCoeff());
      if (use_n) norm = std::max(norm, g.mn.abs().maxCoeff());
      if (!(norm > 0) || !std::isfinite(norm)) break;

      const double scale = config.step_size / norm;
      if (use_s) {
        ms -= scale * g.ms;
        project_row(ms);
      }
      if (use_n) {
        mn -= scale * g.mn;
        project_row(mn);
      }
      current = bin_objective(method, p, ms, mn);
      if (current < best) {
        best = current;
        best_ms = ms;
        best_mn = mn;
      }
      cur_hist.push_back(current);
      best_hist.push_back(best);

      const int w = config.early_stop_window;
      if (it >= w) {
        const double before = best_hist[best_hist.size() - 1 - w];
        if (before - best <= config.early_stop_rel * before) break;
      }
    }
    if (use_s) trace.masks.ms->row(f) = best_ms.transpose();
    if (use_n) trace.masks.mn->row(f) = best_mn.transpose();
    trace.iterations = std::max(trace.iterations, static_cast<int>(best_hist.size()) - 1);
  }

  trace.fullband.assign(trace.iterations + 1, 0.0);
  for (int f = 0; f < bins; ++f) {
    const auto& h = trace.best[f];
    for (int it = 0; it <= trace.iterations; ++it)
      trace.fullband[it] += h[std::min<std::size_t>(it, h.size() - 1)];
  }
  return trace;
}

MaskSet initial_masks(MethodId method, const Scene& scene, MaskKind kind) {
  MaskSet full;
  switch (kind.type) {
    case MaskKind::Type::Irm: full = irm(scene.s_spec, scene.n_spec, scene.ref_mic, kind.beta); break;
    case MaskKind::Type::Optimized: full = irm(scene.s_spec, scene.n_spec, scene.ref_mic, 1.0); break;
    case MaskKind::Type::Smm: full = smm(scene.s_spec, scene.n_spec, scene.ref_mic); break;
    case MaskKind::Type::Uniform: {
      const MaskArray ones = uniform_mask(scene.x_spec.num_bins(), scene.x_spec.num_frames());
      full = {ones, ones};
      break;
    }
  }
  MaskSet out;
  if (uses_target_mask(method)) out.ms = std::move(full.ms);
  if (uses_interference_mask(method)) out.mn = std::move(full.mn);
  return out;
}

OptimizationTrace optimize(MethodId method, const Scene& scene, MaskKind init, const OptimizerConfig& config) {
  return optimize(method, scene.x_spec, scene.s_spec, scene.ref_mic, initial_masks(method, scene, init), config);
}

void write_trace_csv(const std::filesystem::path& path, const OptimizationTrace& trace) {
  std::ofstream os(path);
  if (!os) throw InvalidInput(path.string() + ": cannot open for writing");
  os << "iteration,bin,objective\n";
  os.precision(17);
  for (std::size_t f = 0; f < trace.best.size(); ++f)
    for (std::size_t it = 0; it < trace.best[f].size(); ++it)
      os << it << ',' << f << ',' << trace.best[f][it] << '\n';
}

}  // namespace maskbf
