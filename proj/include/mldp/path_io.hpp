#pragma once

// Text and binary dumps of paths and controls. Numbers are written with 17
// significant digits so a dump read back reproduces the doubles exactly.

#include <iosfwd>
#include <string>

#include "mldp/evolution.hpp"
#include "mldp/gelfand.hpp"

namespace mldp {

std::string format_double(double x);

/// Header `t,x_1,...,x_n`, one row per time point.
void write_path_csv(std::ostream& os, const PathRecord& path);
void write_path_csv(const std::string& file, const PathRecord& path);
/// The triple fixes the column count; ShapeError on mismatch.
PathRecord read_path_csv(std::istream& is, TriplePtr triple, PathKind kind = PathKind::skeleton);
PathRecord read_path_csv(const std::string& file, TriplePtr triple, PathKind kind = PathKind::skeleton);

/// "MLDP1", u8 kind, u32 rows, u32 dim, f64 left, right, alpha, then rows of
/// (t, x_1..x_n) as little-endian doubles.
void write_path_binary(std::ostream& os, const PathRecord& path);
void write_path_binary(const std::string& file, const PathRecord& path);
PathRecord read_path_binary(std::istream& is);
PathRecord read_path_binary(const std::string& file);

/// Header `t,phi_1,...,phi_m`; row k holds the left endpoint t_k and φ_k, plus
/// a last row at T repeating the final values so the grid is recoverable.
void write_control_csv(std::ostream& os, const ControlPath& control);
void write_control_csv(const std::string& file, const ControlPath& control);
ControlPath read_control_csv(std::istream& is);
ControlPath read_control_csv(const std::string& file);

}  // namespace mldp
