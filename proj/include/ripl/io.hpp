#pragma once

// Matrix file formats and atomic file output.
//
// Binary layout (little-endian):
//   "RIPL"  u8 version (=1)  u8 normalization (0 raw, 1 row-normalized)
//   u32 rows  u32 cols  rows*cols f64, row-major
// CSV layout: one matrix row per line, entries printed with 17 significant
// digits.

#include <cstdint>
#include <filesystem>
#include <string>

#include "ripl/ensembles.hpp"

namespace ripl::io {

inline constexpr std::uint8_t kMatrixFormatVersion = 1;

std::string matrix_to_csv(const MeasurementMatrix& m);
std::string matrix_to_binary(const MeasurementMatrix& m);

MeasurementMatrix matrix_from_csv(const std::string& text);
MeasurementMatrix matrix_from_binary(const std::string& bytes);

// Dispatches on the "RIPL" magic; anything else is parsed as CSV.
MeasurementMatrix read_matrix(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// "%.17g"
std::string format_double(double v);

}  // namespace ripl::io
