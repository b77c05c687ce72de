#include "ripl/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "ripl/errors.hpp"

namespace ripl::io {

namespace {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "binary matrix format assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("binary matrix: truncated file");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_to_csv(const MeasurementMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string matrix_to_binary(const MeasurementMatrix& m) {
  std::string out = "RIPL";
  put_le<std::uint8_t>(out, kMatrixFormatVersion);
  put_le<std::uint8_t>(out, m.normalization() == Normalization::raw ? 0 : 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.row_major()) put_le<double>(out, v);
  return out;
}

MeasurementMatrix matrix_from_binary(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RIPL") != 0)
    throw IoError("binary matrix: bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint8_t>(bytes, pos);
  if (version != kMatrixFormatVersion)
    throw IoError("binary matrix: unsupported version " + std::to_string(version));
  const auto norm = get_le<std::uint8_t>(bytes, pos);
  if (norm > 1) throw IoError("binary matrix: bad normalization tag");
  const auto rows = get_le<std::uint32_t>(bytes, pos);
  const auto cols = get_le<std::uint32_t>(bytes, pos);
  if (rows == 0 || cols == 0) throw IoError("binary matrix: empty shape");
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != pos + count * sizeof(double))
    throw IoError("binary matrix: size does not match header");
  std::vector<double> entries(count);
  for (double& v : entries) v = get_le<double>(bytes, pos);
  return MeasurementMatrix::from_entries(
      rows, cols, std::move(entries),
      norm == 0 ? Normalization::raw : Normalization::row_normalized);
}

MeasurementMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> entries;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t count = 0;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        entries.push_back(std::stod(field, &used));
        if (field.find_first_not_of(" \t\r", used) != std::string::npos)
          throw IoError("csv matrix: bad number '" + field + "'");
      } catch (const std::logic_error&) {
        throw IoError("csv matrix: bad number '" + field + "'");
      }
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw IoError("csv matrix: ragged rows");
    ++rows;
  }
  if (rows == 0 || cols == 0) throw IoError("csv matrix: empty");
  return MeasurementMatrix::from_entries(rows, cols, std::move(entries));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MeasurementMatrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "RIPL") == 0) return matrix_from_binary(bytes);
  return matrix_from_csv(bytes);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace ripl::io
