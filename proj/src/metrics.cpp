#include "maskbf/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

double ratio_db(double signal, double residual) {
  if (residual < 1e-10 * signal) return kMetricCapDb;
  return 10.0 * std::log10(signal / residual);
}

void check_same_length(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw InvalidInput("metric: reference and estimate lengths differ");
}

Eigen::VectorXd mono(const TimeSignal& s) {
  if (s.channels() != 1) throw InvalidInput("metric: expected a single-channel signal");
  return s.samples.row(0).transpose();
}

}  // namespace

double sdr_db(const Eigen::Ref<const Eigen::VectorXd>& reference, const Eigen::Ref<const Eigen::VectorXd>& estimate) {
  check_same_length(reference.size(), estimate.size());
  const double energy = reference.squaredNorm();
  if (!(energy > 0)) throw InvalidInput("sdr: zero reference energy");
  return ratio_db(energy, (reference - estimate).squaredNorm());
}

double sdr_db(const TimeSignal& reference, const TimeSignal& estimate) {
  return sdr_db(mono(reference), mono(estimate));
}

double si_sdr_db(const Eigen::Ref<const Eigen::VectorXd>& reference, const Eigen::Ref<const Eigen::VectorXd>& estimate) {
  check_same_length(reference.size(), estimate.size());
  const double energy = estimate.squaredNorm();
  const double alpha = energy > 0 ? reference.dot(estimate) / energy : 0.0;
  return sdr_db(reference, alpha * estimate);
}

double si_sdr_db(const TimeSignal& reference, const TimeSignal& estimate) {
  return si_sdr_db(mono(reference), mono(estimate));
}

double snr_db(const Eigen::Ref<const Eigen::VectorXd>& target, const Eigen::Ref<const Eigen::VectorXd>& noise) {
  check_same_length(target.size(), noise.size());
  const double energy = target.squaredNorm();
  if (!(energy > 0)) throw InvalidInput("snr: zero target energy");
  return ratio_db(energy, noise.squaredNorm());
}

double snr_db(const TimeSignal& target, const TimeSignal& noise) { return snr_db(mono(target), mono(noise)); }

TfMse mse_tf(const Eigen::MatrixXcd& reference, const Eigen::MatrixXcd& estimate) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols())
    throw InvalidInput("mse_tf: shape mismatch");
  TfMse out;
  const Eigen::MatrixXd err = (reference - estimate).cwiseAbs2();
  out.per_bin = reference.cols() > 0 ? Eigen::VectorXd(err.rowwise().mean())
                                     : Eigen::VectorXd::Zero(reference.rows());
  out.fullband = err.size() > 0 ? err.mean() : 0.0;
  return out;
}

std::string to_json(const MetricReport& report) {
  nlohmann::json j;
  j["sdr_db"] = report.sdr_db;
  j["si_sdr_db"] = report.si_sdr_db;
  j["snr_db"] = report.snr_db;
  j["mse"] = report.mse;
  if (report.mse_per_bin.size() > 0)
    j["mse_per_bin"] = std::vector<double>(report.mse_per_bin.begin(), report.mse_per_bin.end());
  return j.dump();
}

std::string csv_header() { return "sdr_db,si_sdr_db,snr_db,mse"; }

std::string to_csv_row(const MetricReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.9g", report.sdr_db, report.si_sdr_db,
                report.snr_db, report.mse);
  return buf;
}

}  // namespace maskbf
