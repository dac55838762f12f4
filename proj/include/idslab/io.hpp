#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "idslab/coeff.hpp"
#include "idslab/discretize.hpp"
#include "idslab/ids.hpp"

namespace idslab {

// Writes "{method}-{d}d-n{extent}-s{seed}.csv" (columns E,N,stderr) plus a
// JSON sidecar with the run metadata next to it. Returns the CSV path.
std::filesystem::path write_curve_csv(const IdsCurve& curve,
                                      const std::filesystem::path& dir);

// Reads a curve back from write_curve_csv output (values only; metadata stays
// in the sidecar).
IdsCurve read_curve_csv(const std::filesystem::path& csv);

// Field dump, cell values with coordinates: "x,value" (1D) or "x,y,value".
void write_field_csv(const FieldOnGrid& field, std::ostream& out);

// Binary field dump: 16-byte header (magic "IDSF", u16 version, u16 d, u32 m,
// u32 extent), then the cell values as little-endian float64, x-fastest.
void write_field_binary(const FieldOnGrid& field, std::ostream& out);
FieldOnGrid read_field_binary(std::istream& in);

// Sparse dump of the operator: "row,col,re,im" per stored entry.
void write_matrix_csv(const StiffnessMatrix& A, std::ostream& out);

}  // namespace idslab
