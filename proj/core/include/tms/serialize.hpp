#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tms/matrix.hpp"
#include "tms/tape.hpp"

namespace tms {

/// Binary weight container:
///
///   "TMS1"                      4 bytes magic
///   u32 count
///   count x {
///     u32 name_len, name bytes (UTF-8)
///     u32 rows, u32 cols
///     rows*cols x f64           row-major
///   }
///
/// All integers and floats are little-endian.
struct NamedArray {
  std::string name;
  Matrix value;
};

void write_tms1(const std::filesystem::path& path, std::span<const Parameter* const> params);
/// Throws FormatError on bad magic, truncation, or duplicate names.
std::vector<NamedArray> read_tms1(const std::filesystem::path& path);

}  // namespace tms
