#pragma once

#include <filesystem>
#include <iosfwd>

#include "iops/matrix.hpp"

namespace iops {

/// Reads a Matrix Market coordinate file (`real`, `integer` or `pattern`;
/// `general`, `symmetric` or `skew-symmetric`). Indices become 0-based,
/// pattern entries get 1.0, symmetric storage is expanded and duplicate
/// coordinates are summed. The result is canonical.
TripletMatrix load_matrix_market(std::istream& in);
TripletMatrix load_matrix_market(const std::filesystem::path& path);

/// Writes `real general` coordinate form in column-major order.
void write_matrix_market(std::ostream& out, const CscMatrix& m);
void write_matrix_market(const std::filesystem::path& path, const CscMatrix& m);

}  // namespace iops
