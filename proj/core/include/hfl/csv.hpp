// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hfl {

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double value);
std::string format_number(std::size_t value);

/// Joins already-formatted cells with commas; cells containing commas or
/// quotes are quoted.
std::string csv_line(const std::vector<std::string>& cells);

/// Writes `contents` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace hfl
