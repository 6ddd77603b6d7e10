#include "maskbf/container.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "maskbf/error.hpp"

namespace maskbf {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kReal = 1;
constexpr std::uint32_t kComplex = 2;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw InvalidInput(path.string() + ": truncated container");
  return v;
}

void write_header(std::ostream& os, std::uint32_t dtype, const std::string& label,
                  std::uint64_t rows, std::uint64_t cols) {
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, dtype);
  put<std::uint32_t>(os, 2);
  put(os, static_cast<std::uint32_t>(label.size()));
  os.write(label.data(), static_cast<std::streamsize>(label.size()));
  put(os, rows);
  put(os, cols);
}

struct Header {
  std::uint32_t dtype;
  std::string label;
  std::uint64_t rows, cols;
};

Header read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw InvalidInput(path.string() + ": not a container file");
  if (get<std::uint32_t>(is, path) != kVersion) throw InvalidInput(path.string() + ": bad version");
  Header h;
  h.dtype = get<std::uint32_t>(is, path);
  if (get<std::uint32_t>(is, path) != 2) throw InvalidInput(path.string() + ": expected rank 2");
  h.label.resize(get<std::uint32_t>(is, path));
  if (!is.read(h.label.data(), static_cast<std::streamsize>(h.label.size())))
    throw InvalidInput(path.string() + ": truncated label");
  h.rows = get<std::uint64_t>(is, path);
  h.cols = get<std::uint64_t>(is, path);
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput(path.string() + ": cannot open for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput(path.string() + ": cannot open");
  return is;
}

}  // namespace

void write_container(const std::filesystem::path& path, const Eigen::ArrayXXd& data,
                     const std::string& label) {
  auto os = open_out(path);
  write_header(os, kReal, label, data.rows(), data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c) put(os, data(r, c));
}

void write_container(const std::filesystem::path& path, const Eigen::MatrixXcd& data,
                     const std::string& label) {
  auto os = open_out(path);
  write_header(os, kComplex, label, data.rows(), data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      put(os, data(r, c).real());
      put(os, data(r, c).imag());
    }
  }
}

Eigen::ArrayXXd read_real_container(const std::filesystem::path& path, std::string* label) {
  auto is = open_in(path);
  const Header h = read_header(is, path);
  if (h.dtype != kReal) throw InvalidInput(path.string() + ": expected real payload");
  Eigen::ArrayXXd out(h.rows, h.cols);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = get<double>(is, path);
  if (label) *label = h.label;
  return out;
}

Eigen::MatrixXcd read_complex_container(const std::filesystem::path& path, std::string* label) {
  auto is = open_in(path);
  const Header h = read_header(is, path);
  if (h.dtype != kComplex) throw InvalidInput(path.string() + ": expected complex payload");
  Eigen::MatrixXcd out(h.rows, h.cols);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double re = get<double>(is, path);
      const double im = get<double>(is, path);
      out(r, c) = {re, im};
    }
  }
  if (label) *label = h.label;
  return out;
}

void write_mask_csv(const std::filesystem::path& path, const MaskArray& mask) {
  std::ofstream os(path);
  if (!os) throw InvalidInput(path.string() + ": cannot open for writing");
  char buf[32];
  for (Eigen::Index f = 0; f < mask.rows(); ++f) {
    for (Eigen::Index t = 0; t < mask.cols(); ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", mask(f, t));
      if (t) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

MaskArray read_mask_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput(path.string() + ": cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput(path.string() + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidInput(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  MaskArray out(static_cast<Eigen::Index>(rows.size()),
                rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index f = 0; f < out.rows(); ++f)
    for (Eigen::Index t = 0; t < out.cols(); ++t) out(f, t) = rows[f][t];
  return out;
}

}  // namespace maskbf
