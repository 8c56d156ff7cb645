// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <Eigen/Dense>

#include "hfl/learner.hpp"

namespace hfl {

/// Reads an IDX3 image file (magic 0x00000803) into one row per image with
/// pixels scaled to [0,1]. Throws ConfigError on malformed input.
Eigen::MatrixXd read_idx_images(const std::string& path);
/// Reads an IDX1 label file (magic 0x00000801).
Eigen::VectorXd read_idx_labels(const std::string& path);
/// Pairs an image and a label file; throws ConfigError on a count mismatch.
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

}  // namespace hfl
