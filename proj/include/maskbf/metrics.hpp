#pragma once

#include <string>

#include <Eigen/Dense>

#include "maskbf/tf_transform.hpp"

namespace maskbf {

/// Returned when the residual is below 1e-10 of the reference energy.
inline constexpr double kMetricCapDb = 100.0;

struct MetricReport {
  double sdr_db = 0;
  double si_sdr_db = 0;
  double snr_db = 0;  // input SNR of the observation, when known
  double mse = 0;     // fullband TF-domain MSE
  Eigen::VectorXd mse_per_bin;
};

/// 10 log10(sum s^2 / sum (s - y)^2).
double sdr_db(const Eigen::Ref<const Eigen::VectorXd>& reference, const Eigen::Ref<const Eigen::VectorXd>& estimate);
double sdr_db(const TimeSignal& reference, const TimeSignal& estimate);

/// SDR of the estimate after its least-squares scalar rescaling onto the reference.
double si_sdr_db(const Eigen::Ref<const Eigen::VectorXd>& reference, const Eigen::Ref<const Eigen::VectorXd>& estimate);
double si_sdr_db(const TimeSignal& reference, const TimeSignal& estimate);

/// 10 log10(sum s^2 / sum n^2).
double snr_db(const Eigen::Ref<const Eigen::VectorXd>& target, const Eigen::Ref<const Eigen::VectorXd>& noise);
double snr_db(const TimeSignal& target, const TimeSignal& noise);

struct TfMse {
  Eigen::VectorXd per_bin;  // <|s - y|^2>_t
  double fullband = 0;      // mean over all cells
};

/// Both arguments bins x frames.
TfMse mse_tf(const Eigen::MatrixXcd& reference, const Eigen::MatrixXcd& estimate);

std::string to_json(const MetricReport& report);
/// "sdr_db,si_sdr_db,snr_db,mse"
std::string csv_header();
std::string to_csv_row(const MetricReport& report);

}  // namespace maskbf
