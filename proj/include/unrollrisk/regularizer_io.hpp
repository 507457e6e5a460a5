#pragma once

#include <filesystem>
#include <iosfwd>

#include "unrollrisk/estimators.hpp"

namespace unrollrisk {

// CSV: one matrix row per line, comma separated, shortest round-trip floats.
Matrix read_csv_matrix(std::istream& in);
void write_csv_matrix(std::ostream& out, const Matrix& m);

// Binary: "URL1", u16 k, u16 n, 4 reserved zero bytes, then k*n little-endian
// f64 in row-major order.
Regularizer read_regularizer_binary(std::istream& in);
void write_regularizer_binary(std::ostream& out, const Regularizer& reg);

// Format chosen by content: files starting with the binary magic are binary, anything else CSV.
Regularizer load_regularizer(const std::filesystem::path& path);
// Binary when the extension is .bin, CSV otherwise.
void save_regularizer(const std::filesystem::path& path, const Regularizer& reg);

}  // namespace unrollrisk
