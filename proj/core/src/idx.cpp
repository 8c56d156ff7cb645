// SPDX-License-Identifier: Apache-2.0
#include "hfl/idx.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <vector>

#include "hfl/error.hpp"

namespace hfl {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ConfigError(path + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  return in;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes, const std::string& path) {
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (here < 0 || end < here || static_cast<std::size_t>(end - here) < bytes) {
    throw ConfigError(path + ": truncated IDX payload");
  }
  std::vector<unsigned char> buf(bytes);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
    throw ConfigError(path + ": truncated IDX payload");
  }
  return buf;
}

}  // namespace

Eigen::MatrixXd read_idx_images(const std::string& path) {
  auto in = open(path);
  if (read_be32(in, path) != 0x00000803) throw ConfigError(path + ": not an IDX3 unsigned-byte file");
  const std::size_t n = read_be32(in, path);
  const std::size_t rows = read_be32(in, path);
  const std::size_t cols = read_be32(in, path);
  const auto buf = read_payload(in, n * rows * cols, path);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows * cols));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = buf[k++] / 255.0;
  }
  return out;
}

Eigen::VectorXd read_idx_labels(const std::string& path) {
  auto in = open(path);
  if (read_be32(in, path) != 0x00000801) throw ConfigError(path + ": not an IDX1 unsigned-byte file");
  const std::size_t n = read_be32(in, path);
  const auto buf = read_payload(in, n, path);
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = buf[i];
  return out;
}

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  Dataset d{read_idx_images(images_path), read_idx_labels(labels_path)};
  if (d.x.rows() != d.y.size()) throw ConfigError("idx: image and label counts differ");
  return d;
}

}  // namespace hfl
