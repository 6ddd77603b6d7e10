#pragma once

// Binary container: "MBFC" magic, u32 version, u32 dtype (1 = float64,
// 2 = complex128), u32 rank, u32 label length, label bytes, u64 dims[rank],
// then the row-major little-endian payload. Round trips are bit exact.

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "maskbf/masks.hpp"

namespace maskbf {

void write_container(const std::filesystem::path& path, const Eigen::ArrayXXd& data,
                     const std::string& label = {});
void write_container(const std::filesystem::path& path, const Eigen::MatrixXcd& data,
                     const std::string& label = {});

Eigen::ArrayXXd read_real_container(const std::filesystem::path& path, std::string* label = nullptr);
Eigen::MatrixXcd read_complex_container(const std::filesystem::path& path,
                                        std::string* label = nullptr);

/// rows = frequency bins, columns = frames, 17 significant digits.
void write_mask_csv(const std::filesystem::path& path, const MaskArray& mask);
MaskArray read_mask_csv(const std::filesystem::path& path);

}  // namespace maskbf
