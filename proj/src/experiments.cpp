#include "maskbf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "maskbf/container.hpp"
#include "maskbf/error.hpp"
#include "maskbf/metrics.hpp"

namespace maskbf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thresholds of the gated synthetic-suite checks.
constexpr double kPeakToleranceDb = 0.3;
constexpr double kUpperBoundRelTol = 1e-9;
constexpr double kConversionToleranceDb = 1e-6;
constexpr double kTransferFraction = 0.8;
constexpr double kOptimizerToleranceDb = 0.05;
constexpr double kIrmMedianGapDb = 0.2;
constexpr double kIrmEquivalenceDb = 1e-9;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

fs::path mask_dir(const ExperimentConfig& config) { return config.out_dir / "masks"; }
fs::path manifest_path(const ExperimentConfig& config) { return mask_dir(config) / "manifest.json"; }

fs::path mask_file(const ExperimentConfig& config, const SceneCase& c, MethodId method, const char* role) {
  return mask_dir(config) / (c.key() + "_" + std::string(to_string(method)) + "." + role + ".bin");
}

ResultRow make_row(const SceneCase& c, MethodId method, const std::string& mask, const std::string& provenance,
                   const Evaluation& e, int iterations) {
  return {c.scene, c.bg_multiplier, std::string(to_string(method)), mask, provenance, e.sdr_db, e.si_sdr_db,
          e.mse, iterations};
}

Eigen::VectorXd target_power_per_bin(const Scene& scene) {
  return scene.s_spec.channel(scene.ref_mic).cwiseAbs2().rowwise().mean();
}

std::vector<double> distinct_multipliers(const std::vector<ResultRow>& rows) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.bg_multiplier) == out.end()) out.push_back(r.bg_multiplier);
  return out;
}

void require_methods(const ExperimentConfig& config, const std::vector<MethodId>& needed, const char* who) {
  for (auto m : needed)
    if (std::find(config.methods.begin(), config.methods.end(), m) == config.methods.end())
      throw InvalidConfig(std::string(who) + " requires method " + std::string(to_string(m)) +
                          " in the methods list");
}

// Optimised masks must exist before exp2/exp3; produce them if absent.
void ensure_optimized_masks(const ExperimentConfig& config, ExperimentResult& result) {
  if (has_optimized_masks(config)) return;
  ExperimentConfig exp1 = config;
  exp1.experiment = "exp1";
  const ExperimentResult produced = run_exp1(exp1);
  emit_report(produced, config.out_dir);
  result.notes.push_back("optimised masks were missing; ran exp1 first");
}

// Groups rows per case in enumeration order.
template <typename PerCase>
std::vector<ResultRow> collect(const ExperimentConfig& config, const std::vector<SceneCase>& cases, PerCase body) {
  std::vector<std::vector<ResultRow>> per_case(cases.size());
  parallel_for(cases.size(), config.threads, [&](std::size_t i) { per_case[i] = body(cases[i]); });
  std::vector<ResultRow> rows;
  for (auto& v : per_case) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace

// ---------------------------------------------------------------- config

std::string ExperimentConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "scenes=" << num_scenes << ";mics=" << n_mics << ";duration=" << duration << ";noise=" << noise_level
     << ";diffuse=" << diffuse_level << ";stft=" << stft.window_len << "/" << stft.hop_len << "/"
     << static_cast<int>(stft.window) << ";dataset=" << (dataset_root ? dataset_root->string() : "")
     << ";clean=" << layout.clean_dir << ";noise_dir=" << layout.noise_dir << ";max_utt=" << max_utterances
     << ";ref=" << reference_mic() << ";methods=";
  for (auto m : methods) os << to_string(m) << ",";
  os << ";mult=";
  for (double b : bg_multipliers) os << b << ",";
  const auto& o = optimizer;
  os << ";iters=" << o.iterations << ";step=" << o.step_size << ";grad=" << to_string(o.gradient_mode)
     << ";fd=" << o.fd_step << ";stop=" << o.early_stop_rel << "/" << o.early_stop_window << ";load=" << o.loading
     << ";oseed=" << o.seed << ";jitter=" << o.init_noise << ";seed=" << seed;
  return os.str();
}

std::string ExperimentConfig::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : fingerprint()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  if (experiment != "exp1" && experiment != "exp2" && experiment != "exp3")
    throw InvalidConfig("experiment must be exp1, exp2 or exp3");
  if (synthetic() && num_scenes < 1) throw InvalidConfig("num_scenes must be >= 1");
  if (n_mics < 1) throw InvalidConfig("n_mics must be >= 1");
  if (methods.empty()) throw InvalidConfig("methods list is empty");
  for (auto m : methods)
    if (m == MethodId::IdealMwf) throw InvalidConfig("IdealMwf is always evaluated; do not list it in methods");
  if (bg_multipliers.empty()) throw InvalidConfig("bg_multipliers list is empty");
  for (double b : bg_multipliers)
    if (!(b > 0)) throw InvalidConfig("bg_multipliers must be > 0");
  stft.validate();
  optimizer.validate();
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& c) {
  ExperimentConfig cfg;
  cfg.experiment = c.get_string("experiment", cfg.experiment);
  cfg.num_scenes = static_cast<int>(c.get_int("num_scenes", cfg.num_scenes));
  cfg.n_mics = static_cast<int>(c.get_int("n_mics", cfg.n_mics));
  cfg.duration = c.get_double("duration", cfg.duration);
  cfg.noise_level = c.get_double("noise_level", cfg.noise_level);
  cfg.diffuse_level = c.get_double("diffuse_level", cfg.diffuse_level);
  if (c.get_bool("full_framing", false)) cfg.use_full_framing();
  cfg.stft.window_len = static_cast<int>(c.get_int("stft_window", cfg.stft.window_len));
  cfg.stft.hop_len = static_cast<int>(c.get_int("stft_hop", cfg.stft.hop_len));
  if (auto root = c.get("dataset_root"); root && !root->empty()) cfg.dataset_root = *root;
  cfg.layout.clean_dir = c.get_string("clean_dir", cfg.layout.clean_dir);
  cfg.layout.noise_dir = c.get_string("noise_dir", cfg.layout.noise_dir);
  cfg.max_utterances = static_cast<int>(c.get_int("max_utterances", cfg.max_utterances));
  if (c.has("ref_mic")) cfg.ref_mic = static_cast<int>(c.get_int("ref_mic", 0));
  if (c.has("methods")) {
    cfg.methods.clear();
    for (const auto& name : c.get_list("methods")) {
      try {
        cfg.methods.push_back(parse_method(name));
      } catch (const InvalidInput& e) {
        throw InvalidConfig(std::string("methods: ") + e.what());
      }
    }
  }
  if (c.has("bg_multipliers")) cfg.bg_multipliers = c.get_double_list("bg_multipliers");
  auto& o = cfg.optimizer;
  o.iterations = static_cast<int>(c.get_int("iterations", o.iterations));
  o.step_size = c.get_double("step_size", o.step_size);
  if (c.has("gradient")) o.gradient_mode = parse_gradient_mode(*c.get("gradient"));
  o.fd_step = c.get_double("fd_step", o.fd_step);
  o.early_stop_rel = c.get_double("early_stop_rel", o.early_stop_rel);
  o.early_stop_window = static_cast<int>(c.get_int("early_stop_window", o.early_stop_window));
  o.loading = c.get_double("loading", o.loading);
  o.init_noise = c.get_double("init_noise", o.init_noise);
  cfg.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(cfg.seed)));
  o.seed = cfg.seed;
  cfg.threads = static_cast<int>(c.get_int("threads", cfg.threads));
  cfg.write_traces = c.get_bool("write_traces", cfg.write_traces);
  if (auto out = c.get("out"); out) cfg.out_dir = *out;
  cfg.validate();
  return cfg;
}

bool ExperimentResult::gates_passed() const {
  if (informational) return true;
  return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
}

std::string SceneCase::key() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_x%g", bg_multiplier);
  return scene + buf;
}

// ---------------------------------------------------------------- cases

std::vector<SceneCase> enumerate_cases(const ExperimentConfig& config) {
  std::vector<std::string> scenes;
  if (config.synthetic()) {
    for (int i = 0; i < config.num_scenes; ++i)
      scenes.push_back(suite_scene_spec(i, config.seed, config.n_mics, config.duration, config.stft).label);
  } else {
    scenes = list_chime_utterances(*config.dataset_root, config.layout);
    if (scenes.empty())
      throw DatasetError((*config.dataset_root / config.layout.clean_dir).string() + ": no *.CH1.wav stems");
    if (config.max_utterances > 0 && static_cast<int>(scenes.size()) > config.max_utterances)
      scenes.resize(config.max_utterances);
  }
  std::vector<SceneCase> cases;
  for (const auto& s : scenes)
    for (double b : config.bg_multipliers) cases.push_back({s, b});
  return cases;
}

Scene load_case(const ExperimentConfig& config, const SceneCase& c) {
  if (!config.synthetic())
    return load_chime_scene(*config.dataset_root, c.scene, c.bg_multiplier, config.stft, config.reference_mic(),
                            config.layout);
  for (int i = 0; i < config.num_scenes; ++i) {
    SceneSpec spec = suite_scene_spec(i, config.seed, config.n_mics, config.duration, config.stft);
    if (spec.label != c.scene) continue;
    spec.bg_multiplier = c.bg_multiplier;
    spec.noise_level = config.noise_level;
    spec.diffuse_level = config.diffuse_level;
    spec.ref_mic = config.reference_mic();
    return synth_scene(spec);
  }
  throw InvalidInput("unknown scene " + c.scene);
}

Evaluation evaluate(const Scene& scene, MethodId method, const MaskSet& masks, double loading) {
  const BeamformerFilter filter = estimate_filter(method, scene.x_spec, masks, &scene.s_spec, scene.ref_mic, loading);
  const Eigen::MatrixXcd target = scene.s_spec.channel(scene.ref_mic);
  const ScaledOutput out = ideal_scale(apply_filter(filter, scene.x_spec), target);
  const Eigen::VectorXd estimate = istft_channel(out.y, scene.x_spec);
  const Eigen::VectorXd reference = scene.s.samples.row(scene.ref_mic).transpose();
  const TfMse mse = mse_tf(target, out.y);
  return {sdr_db(reference, estimate), si_sdr_db(reference, estimate), mse.fullband, mse.per_bin};
}

// ---------------------------------------------------------------- masks on disk

bool has_optimized_masks(const ExperimentConfig& config) { return fs::exists(manifest_path(config)); }

MaskSet load_optimized_masks(const ExperimentConfig& config, const SceneCase& c, MethodId method) {
  std::ifstream in(manifest_path(config));
  if (!in) throw InvalidConfig(manifest_path(config).string() + ": no optimised masks; run exp1 first");
  const json manifest = json::parse(in);
  const std::string stored = manifest.value("checksum", "");
  if (stored != config.checksum())
    throw InvalidConfig("optimised masks in " + mask_dir(config).string() + " were produced by a different config (" +
                        stored + " != " + config.checksum() + "); rerun exp1 or use another --out");
  MaskSet masks;
  if (uses_target_mask(method)) masks.ms = read_real_container(mask_file(config, c, method, "ms"));
  if (uses_interference_mask(method)) masks.mn = read_real_container(mask_file(config, c, method, "mn"));
  return masks;
}

// ---------------------------------------------------------------- exp1

ExperimentResult run_exp1(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.experiment = "exp1";
  result.informational = !config.synthetic();
  fs::create_directories(mask_dir(config));
  fs::remove(manifest_path(config));

  const auto cases = enumerate_cases(config);
  struct CaseStats {
    std::vector<ResultRow> rows;
    double input_snr = 0;
    double worst_bound_margin = 0;  // max over bins of (J_ideal - J_method) / P_f
    std::string worst_where;
    std::vector<std::string> warnings;
  };
  std::vector<CaseStats> stats(cases.size());

  parallel_for(cases.size(), config.threads, [&](std::size_t i) {
    const SceneCase& c = cases[i];
    const Scene scene = load_case(config, c);
    CaseStats& st = stats[i];
    st.input_snr = snr_db(scene.s.samples.row(scene.ref_mic).transpose(), scene.n.samples.row(scene.ref_mic).transpose());
    const Eigen::VectorXd power = target_power_per_bin(scene);

    const Evaluation ideal = evaluate(scene, MethodId::IdealMwf, {}, config.optimizer.loading);
    st.rows.push_back(make_row(c, MethodId::IdealMwf, "none", "none", ideal, 0));

    for (MethodId m : config.methods) {
      const OptimizationTrace trace = optimize(m, scene, MaskKind::optimized(), config.optimizer);
      if (trace.masks.ms)
        write_container(mask_file(config, c, m, "ms"), *trace.masks.ms, c.key() + ":" + std::string(to_string(m)) + ":m_s");
      if (trace.masks.mn)
        write_container(mask_file(config, c, m, "mn"), *trace.masks.mn, c.key() + ":" + std::string(to_string(m)) + ":m_n");
      if (config.write_traces) {
        fs::create_directories(config.out_dir / "traces");
        write_trace_csv(config.out_dir / "traces" / (c.key() + "_" + std::string(to_string(m)) + ".csv"), trace);
      }
      const Evaluation e = evaluate(scene, m, trace.masks, config.optimizer.loading);
      st.rows.push_back(make_row(c, m, "Optimized", std::string(to_string(m)), e, trace.iterations));
      for (Eigen::Index f = 0; f < power.size(); ++f) {
        if (!(power(f) > 0)) continue;
        const double margin = (ideal.mse_per_bin(f) - e.mse_per_bin(f)) / power(f);
        if (margin > st.worst_bound_margin) {
          st.worst_bound_margin = margin;
          st.worst_where = c.key() + " " + std::string(to_string(m)) + " bin " + std::to_string(f);
        }
      }
      for (const auto& w : trace.warnings) st.warnings.push_back(c.key() + " " + std::string(to_string(m)) + ": " + w);
    }
  });

  json manifest;
  manifest["checksum"] = config.checksum();
  manifest["fingerprint"] = config.fingerprint();
  for (const auto& c : cases) manifest["cases"].push_back(c.key());
  for (auto m : config.methods) manifest["methods"].push_back(std::string(to_string(m)));
  std::ofstream(manifest_path(config)) << manifest.dump(2) << '\n';

  double worst_margin = 0;
  std::string worst_where = "-";
  std::map<double, std::vector<double>> snr_by_mult;
  std::vector<std::string> warnings;
  for (const auto& st : stats) {
    result.rows.insert(result.rows.end(), st.rows.begin(), st.rows.end());
    snr_by_mult[st.rows.front().bg_multiplier].push_back(st.input_snr);
    if (st.worst_bound_margin > worst_margin) {
      worst_margin = st.worst_bound_margin;
      worst_where = st.worst_where;
    }
    warnings.insert(warnings.end(), st.warnings.begin(), st.warnings.end());
  }
  for (const auto& [mult, snrs] : snr_by_mult) {
    double mean = 0;
    for (double s : snrs) mean += s / snrs.size();
    result.notes.push_back("mean input SNR at reference mic, x" + fmt("%g", mult) + ": " + fmt("%.3f", mean) + " dB");
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(warnings.size(), 5); ++i)
    result.notes.push_back("optimizer warning: " + warnings[i]);
  if (warnings.size() > 5) result.notes.push_back(std::to_string(warnings.size() - 5) + " more optimizer warnings");

  // Mean SDR of each optimised method against the ideal MWF, per multiplier.
  for (double mult : config.bg_multipliers) {
    auto mean_sdr = [&](const std::string& method) {
      double acc = 0;
      int n = 0;
      for (const auto& r : result.rows)
        if (r.method == method && r.bg_multiplier == mult) acc += r.sdr_db, ++n;
      return n ? acc / n : 0.0;
    };
    const double ideal = mean_sdr("IdealMwf");
    for (MethodId m : config.methods) {
      const double v = mean_sdr(std::string(to_string(m)));
      GateResult g;
      g.name = "peak-equivalence " + std::string(to_string(m)) + " x" + fmt("%g", mult);
      g.passed = std::abs(v - ideal) <= kPeakToleranceDb;
      g.detail = "mean SDR " + fmt("%.4f", v) + " dB vs IdealMwf " + fmt("%.4f", ideal) + " dB (tol " +
                 fmt("%.2f", kPeakToleranceDb) + ")";
      result.gates.push_back(g);
    }
  }
  result.gates.push_back({"ideal-mwf-upper-bound", worst_margin <= kUpperBoundRelTol,
                          "max per-bin (J_ideal - J_method)/P_bin = " + fmt("%.3e", worst_margin) + " at " +
                              worst_where + " (tol 1e-9)"});
  return result;
}

// ---------------------------------------------------------------- exp2

ExperimentResult run_exp2(const ExperimentConfig& config) {
  config.validate();
  require_methods(config, {MethodId::MaxSnr, MethodId::MaxSor, MethodId::MinNor, MethodId::MaskMwf}, "exp2");
  ExperimentResult result;
  result.experiment = "exp2";
  result.informational = !config.synthetic();
  ensure_optimized_masks(config, result);
  const double eps = config.optimizer.loading;
  const auto cases = enumerate_cases(config);

  result.rows = collect(config, cases, [&](const SceneCase& c) {
    const Scene scene = load_case(config, c);
    const MaskSet snr = load_optimized_masks(config, c, MethodId::MaxSnr);
    const MaskSet sor = load_optimized_masks(config, c, MethodId::MaxSor);
    const MaskSet nor = load_optimized_masks(config, c, MethodId::MinNor);
    const MaskSet mwf = load_optimized_masks(config, c, MethodId::MaskMwf);
    std::vector<ResultRow> rows;
    auto add = [&](MethodId dest, const MaskSet& masks, const std::string& mask, const std::string& provenance) {
      rows.push_back(make_row(c, dest, mask, provenance, evaluate(scene, dest, masks, eps), 0));
    };
    // Destination methods with their own optimised masks.
    add(MethodId::MaxSor, sor, "Optimized", "MaxSor");
    add(MethodId::MinNor, nor, "Optimized", "MinNor");
    add(MethodId::MaskMwf, mwf, "Optimized", "MaskMwf");
    // The six transfers.
    add(MethodId::MaxSor, MaskSet{snr.ms, {}}, "m_s", "MaxSnr");
    add(MethodId::MinNor, MaskSet{{}, snr.mn}, "m_n", "MaxSnr");
    add(MethodId::MinNor, MaskSet{{}, mn_from_ms(*sor.ms)}, "m_s+mn_from_ms", "MaxSor");
    add(MethodId::MaxSor, MaskSet{ms_from_mn(*nor.mn), {}}, "m_n+ms_from_mn", "MinNor");
    add(MethodId::MaskMwf, MaskSet{sor.ms, {}}, "m_s", "MaxSor");
    add(MethodId::MaxSor, MaskSet{mwf.ms, {}}, "m_s", "MaskMwf");
    return rows;
  });

  // Per-case lookups for the gates.
  std::map<std::pair<std::string, double>, std::vector<const ResultRow*>> by_case;
  for (const auto& r : result.rows) by_case[{r.scene, r.bg_multiplier}].push_back(&r);
  auto sdr = [&](const std::vector<const ResultRow*>& rows, const char* method, const char* mask, const char* prov) {
    for (const auto* r : rows)
      if (r->method == method && r->mask == mask && r->provenance == prov) return r->sdr_db;
    throw InvalidInput("exp2: missing row");
  };

  double worst_dest = 0, worst_src = 0, worst_snr_excess = -1e300;
  std::map<double, std::pair<int, int>> degrade_sor_to_mwf, degrade_mwf_to_sor;  // (degraded, total)
  for (const auto& [key, rows] : by_case) {
    const double own_sor = sdr(rows, "MaxSor", "Optimized", "MaxSor");
    const double own_nor = sdr(rows, "MinNor", "Optimized", "MinNor");
    const double own_mwf = sdr(rows, "MaskMwf", "Optimized", "MaskMwf");
    const double sor_to_nor = sdr(rows, "MinNor", "m_s+mn_from_ms", "MaxSor");
    const double nor_to_sor = sdr(rows, "MaxSor", "m_n+ms_from_mn", "MinNor");
    worst_dest = std::max({worst_dest, std::abs(sor_to_nor - own_nor), std::abs(nor_to_sor - own_sor)});
    worst_src = std::max({worst_src, std::abs(sor_to_nor - own_sor), std::abs(nor_to_sor - own_nor)});
    worst_snr_excess = std::max(worst_snr_excess, sdr(rows, "MaxSor", "m_s", "MaxSnr") - own_sor);
    auto& a = degrade_sor_to_mwf[key.second];
    a.first += sdr(rows, "MaskMwf", "m_s", "MaxSor") < own_mwf;
    a.second += 1;
    auto& b = degrade_mwf_to_sor[key.second];
    b.first += sdr(rows, "MaxSor", "m_s", "MaskMwf") < own_sor;
    b.second += 1;
  }
  result.gates.push_back({"convertibility (destination's own optimum)", worst_dest <= kConversionToleranceDb,
                          "max |SDR(converted) - SDR(destination optimised)| = " + fmt("%.3e", worst_dest) +
                              " dB (tol 1e-6)"});
  result.gates.push_back({"convertibility (source's optimum, filter equivalence)", worst_src <= kConversionToleranceDb,
                          "max |SDR(converted) - SDR(source optimised)| = " + fmt("%.3e", worst_src) +
                              " dB (tol 1e-6)"});
  for (const auto& [label, table] : {std::pair{"MaxSor->MaskMwf", &degrade_sor_to_mwf},
                                     std::pair{"MaskMwf->MaxSor", &degrade_mwf_to_sor}}) {
    for (const auto& [mult, counts] : *table) {
      const bool ok = counts.first >= std::ceil(kTransferFraction * counts.second - 1e-9);
      result.gates.push_back({std::string("non-transferability ") + label + " x" + fmt("%g", mult), ok,
                              std::to_string(counts.first) + "/" + std::to_string(counts.second) +
                                  " scenes below the destination's optimised SDR (need >= 80%)"});
    }
  }
  result.gates.push_back({"MaxSnr->MaxSor never beats MaxSor optimum", worst_snr_excess <= kOptimizerToleranceDb,
                          "max SDR excess " + fmt("%.4f", worst_snr_excess) + " dB (tol 0.05)"});
  return result;
}

// ---------------------------------------------------------------- exp3

ExperimentResult run_exp3(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.experiment = "exp3";
  result.informational = !config.synthetic();
  ensure_optimized_masks(config, result);
  const double eps = config.optimizer.loading;
  const auto cases = enumerate_cases(config);
  const std::vector<MaskKind> kinds{MaskKind::irm(1.0), MaskKind::irm(0.5), MaskKind::smm()};

  result.rows = collect(config, cases, [&](const SceneCase& c) {
    const Scene scene = load_case(config, c);
    std::vector<ResultRow> rows;
    for (MethodId m : config.methods) {
      const MaskSet opt = load_optimized_masks(config, c, m);
      rows.push_back(make_row(c, m, "Optimized", std::string(to_string(m)), evaluate(scene, m, opt, eps), 0));
      for (const auto& kind : kinds)
        rows.push_back(make_row(c, m, kind.label(), "oracle",
                                evaluate(scene, m, initial_masks(m, scene, kind), eps), 0));
    }
    return rows;
  });

  std::vector<double> gaps;
  double worst_excess = -1e300;
  std::string worst_where = "-";
  std::map<std::pair<std::string, double>, std::vector<double>> irm1;
  for (const auto& r : result.rows) {
    if (r.mask == "Optimized") continue;
    double own = 0;
    for (const auto& o : result.rows)
      if (o.scene == r.scene && o.bg_multiplier == r.bg_multiplier && o.method == r.method && o.mask == "Optimized")
        own = o.sdr_db;
    gaps.push_back(own - r.sdr_db);
    if (r.sdr_db - own > worst_excess) {
      worst_excess = r.sdr_db - own;
      worst_where = r.scene + "_x" + fmt("%g", r.bg_multiplier) + " " + r.method + " " + r.mask;
    }
    if (r.mask == "IRM(b=1)" && (r.method == "MaxSnr" || r.method == "MaxSor" || r.method == "MinNor"))
      irm1[{r.scene, r.bg_multiplier}].push_back(r.sdr_db);
  }
  std::sort(gaps.begin(), gaps.end());
  const double median = gaps.empty() ? 0.0
                        : gaps.size() % 2 ? gaps[gaps.size() / 2]
                                          : 0.5 * (gaps[gaps.size() / 2 - 1] + gaps[gaps.size() / 2]);
  double irm_spread = 0;
  for (const auto& [key, v] : irm1)
    irm_spread = std::max(irm_spread, *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()));

  result.gates.push_back({"oracle masks never beat optimised masks", worst_excess <= 0.0,
                          "max SDR(oracle) - SDR(optimised) = " + fmt("%.4f", worst_excess) + " dB at " + worst_where});
  result.gates.push_back({"median oracle-mask gap", median >= kIrmMedianGapDb,
                          "median gap " + fmt("%.4f", median) + " dB over " + std::to_string(gaps.size()) +
                              " rows (need >= 0.2)"});
  if (!irm1.empty())
    result.gates.push_back({"IRM(b=1) equivalence MaxSnr/MaxSor/MinNor", irm_spread <= kIrmEquivalenceDb,
                            "max spread " + fmt("%.3e", irm_spread) + " dB (tol 1e-9)"});
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "exp1") return run_exp1(config);
  if (config.experiment == "exp2") return run_exp2(config);
  if (config.experiment == "exp3") return run_exp3(config);
  throw InvalidConfig("unknown experiment '" + config.experiment + "'");
}

// ---------------------------------------------------------------- reports

std::string results_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "scene,bg_multiplier,method,mask,provenance,sdr_db,si_sdr_db,mse,iterations\n";
  char buf[256];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof buf, "%s,%g,%s,%s,%s,%.6f,%.6f,%.9e,%d\n", r.scene.c_str(), r.bg_multiplier,
                  r.method.c_str(), r.mask.c_str(), r.provenance.c_str(), r.sdr_db, r.si_sdr_db, r.mse, r.iterations);
    os << buf;
  }
  return os.str();
}

namespace {

struct Cell {
  std::string method, mask, provenance;
};

std::vector<Cell> row_groups(const std::vector<ResultRow>& rows) {
  std::vector<Cell> out;
  for (const auto& r : rows) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Cell& c) {
      return c.method == r.method && c.mask == r.mask && c.provenance == r.provenance;
    });
    if (!seen) out.push_back({r.method, r.mask, r.provenance});
  }
  return out;
}

struct Mean {
  double sdr = 0, si_sdr = 0, mse = 0;
  int count = 0;
};

Mean mean_of(const std::vector<ResultRow>& rows, const Cell& cell, double mult) {
  Mean m;
  for (const auto& r : rows) {
    if (r.method != cell.method || r.mask != cell.mask || r.provenance != cell.provenance || r.bg_multiplier != mult)
      continue;
    m.sdr += r.sdr_db;
    m.si_sdr += r.si_sdr_db;
    m.mse += r.mse;
    ++m.count;
  }
  if (m.count) m.sdr /= m.count, m.si_sdr /= m.count, m.mse /= m.count;
  return m;
}

}  // namespace

std::string results_table(const ExperimentResult& result) {
  const auto mults = distinct_multipliers(result.rows);
  std::ostringstream os;
  os << "Mean SDR [dB], " << result.experiment << (result.informational ? " (informational)" : "") << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %-18s %-10s |", "mask from", "mask", "applied to");
  os << buf;
  for (double m : mults) {
    std::snprintf(buf, sizeof buf, " %9s", ("x" + fmt("%g", m)).c_str());
    os << buf;
  }
  os << "\n" << std::string(44 + 10 * mults.size(), '-') << "\n";
  for (const auto& cell : row_groups(result.rows)) {
    std::snprintf(buf, sizeof buf, "%-12s %-18s %-10s |", cell.provenance.c_str(), cell.mask.c_str(), cell.method.c_str());
    os << buf;
    for (double m : mults) {
      std::snprintf(buf, sizeof buf, " %9.3f", mean_of(result.rows, cell, m).sdr);
      os << buf;
    }
    os << "\n";
  }
  if (!result.gates.empty()) {
    os << "\nChecks" << (result.informational ? " (not enforced on real data)" : "") << ":\n";
    for (const auto& g : result.gates) os << (g.passed ? "  PASS  " : "  FAIL  ") << g.name << ": " << g.detail << "\n";
  }
  for (const auto& n : result.notes) os << "note: " << n << "\n";
  return os.str();
}

void emit_report(const ExperimentResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string stem = result.experiment;
  std::ofstream(out_dir / (stem + "_results.csv")) << results_csv(result);
  std::ofstream(out_dir / (stem + "_tables.txt")) << results_table(result);

  json summary;
  summary["experiment"] = result.experiment;
  summary["informational"] = result.informational;
  summary["gates_passed"] = result.gates_passed();
  const auto mults = distinct_multipliers(result.rows);
  for (const auto& cell : row_groups(result.rows)) {
    for (double m : mults) {
      const Mean mean = mean_of(result.rows, cell, m);
      summary["cells"].push_back({{"method", cell.method},
                                  {"mask", cell.mask},
                                  {"provenance", cell.provenance},
                                  {"bg_multiplier", m},
                                  {"mean_sdr_db", mean.sdr},
                                  {"mean_si_sdr_db", mean.si_sdr},
                                  {"mean_mse", mean.mse},
                                  {"count", mean.count}});
    }
  }
  for (const auto& g : result.gates)
    summary["gates"].push_back({{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
  summary["notes"] = result.notes;
  std::ofstream(out_dir / (stem + "_summary.json")) << summary.dump(2) << '\n';
}

}  // namespace maskbf
