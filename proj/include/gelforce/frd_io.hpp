// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// CalculiX interop: ASCII .frd result reader/writer and .inp deck emitter.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gelforce/fea.hpp"
#include "gelforce/material.hpp"
#include "gelforce/mesh.hpp"

namespace gelforce {

/// One nodal result block, keyed by external node id. Only the first three
/// components of a block are kept.
struct NodalFieldSet {
  int step = 0;
  std::string name;  // "DISP", "FORC"
  double time = 0.0;
  std::map<int, Vec3> values;
};

struct FrdResult {
  std::map<int, Vec3> nodes;  // coordinates from the node block, if present
  std::vector<NodalFieldSet> fields;
  std::vector<std::string> warnings;
};

/// Parses an ASCII .frd file. Node records may use the short (I5) or long
/// (I10) id format as announced by their block header. Result blocks other
/// than DISP and FORC are skipped with a warning. Throws ParseError with the
/// line and column of malformed fixed-width fields or truncated blocks.
FrdResult parse_frd(std::istream& in);
FrdResult parse_frd(std::string_view text);

/// Writes nodes and nodal fields in the long ASCII format (E12.5 values).
void write_frd(std::ostream& out, const FrdResult& result);

/// Converts a solution into DISP and FORC blocks for step `step`.
std::vector<NodalFieldSet> solution_fields(const Mesh& mesh, const Solution& sol, int step = 1);

/// Nodal fields back into a Solution on `mesh`: DISP gives displacements and
/// FORC the reactions of the nodes listed in `bc`.
Solution solution_from_fields(const Mesh& mesh, const BoundaryConditions& bc, const NodalFieldSet& disp,
                              const NodalFieldSet* forc);

struct InpDeckOptions {
  int increments = 5;
  int max_increments = 100;
};

/// Complete static NLGEOM analysis deck for CalculiX: mesh, Neo-Hookean
/// material, boundary conditions and U/RF output requests.
void emit_inp(std::ostream& out, const Mesh& mesh, const Material& mat, const BoundaryConditions& bc,
              const InpDeckOptions& opts = {});
std::string emit_inp(const Mesh& mesh, const Material& mat, const BoundaryConditions& bc,
                     const InpDeckOptions& opts = {});

}  // namespace gelforce
