#include "unrollrisk/regularizer_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "unrollrisk/numeric.hpp"

namespace unrollrisk {

namespace {

constexpr std::array<char, 4> kMagic{'U', 'R', 'L', '1'};

std::uint64_t load_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void store_le(unsigned char* p, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    p[i] = static_cast<unsigned char>(v & 0xFF);
    v >>= 8;
  }
}

}  // namespace

Matrix read_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(parse_double(cell));
      } catch (const std::invalid_argument& e) {
        throw IoError("csv line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("csv line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("csv: no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Regularizer read_regularizer_binary(std::istream& in) {
  std::array<unsigned char, 12> header{};
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size()))
    throw IoError("regularizer binary: truncated header");
  for (std::size_t i = 0; i < kMagic.size(); ++i)
    if (header[i] != static_cast<unsigned char>(kMagic[i])) throw IoError("regularizer binary: bad magic");
  const auto k = static_cast<Eigen::Index>(load_le(header.data() + 4, 2));
  const auto n = static_cast<Eigen::Index>(load_le(header.data() + 6, 2));
  if (k == 0 || n == 0) throw IoError("regularizer binary: zero dimension");
  Matrix r(k, n);
  std::array<unsigned char, 8> word{};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in.read(reinterpret_cast<char*>(word.data()), word.size()))
        throw IoError("regularizer binary: truncated payload");
      r(i, j) = std::bit_cast<double>(load_le(word.data(), 8));
    }
  }
  try {
    return Regularizer(std::move(r));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("regularizer binary: ") + e.what());
  }
}

void write_regularizer_binary(std::ostream& out, const Regularizer& reg) {
  if (reg.n() > 0xFFFF) throw std::invalid_argument("regularizer binary: n exceeds u16 range");
  std::array<unsigned char, 12> header{};
  for (std::size_t i = 0; i < kMagic.size(); ++i) header[i] = static_cast<unsigned char>(kMagic[i]);
  store_le(header.data() + 4, static_cast<std::uint64_t>(reg.k()), 2);
  store_le(header.data() + 6, static_cast<std::uint64_t>(reg.n()), 2);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  std::array<unsigned char, 8> word{};
  for (Eigen::Index i = 0; i < reg.matrix().rows(); ++i) {
    for (Eigen::Index j = 0; j < reg.matrix().cols(); ++j) {
      store_le(word.data(), std::bit_cast<std::uint64_t>(reg.matrix()(i, j)), 8);
      out.write(reinterpret_cast<const char*>(word.data()), word.size());
    }
  }
}

Regularizer load_regularizer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> probe{};
  in.read(probe.data(), probe.size());
  const bool binary = in.gcount() == 4 && probe == kMagic;
  in.clear();
  in.seekg(0);
  if (binary) return read_regularizer_binary(in);
  Matrix m = read_csv_matrix(in);
  try {
    return Regularizer(std::move(m));
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_regularizer(const std::filesystem::path& path, const Regularizer& reg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (path.extension() == ".bin")
    write_regularizer_binary(out, reg);
  else
    write_csv_matrix(out, reg.matrix());
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace unrollrisk
