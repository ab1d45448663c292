#pragma once

#include "femlet/discretization.hpp"
#include "femlet/mesh.hpp"

#include <span>
#include <string>
#include <vector>

namespace femlet {

/// Per-vertex output array; arity 1 (scalar) or 2 (vector, padded with a
/// zero z-component on write).
struct OutputField {
    std::string name;
    std::size_t arity = 1;
    std::vector<double> values;
};

/// Vertex values of an unknown or parameter variable. P2/Q2 edge and center
/// DOFs are dropped.
[[nodiscard]] OutputField make_output_field(const FieldVariable& var);

/// Legacy ASCII VTK unstructured grid, 17 significant digits, LF endings.
[[nodiscard]] std::string format_vtk(const Mesh& mesh, std::span<const OutputField> fields);
void write_vtk(const Mesh& mesh, std::span<const OutputField> fields, const std::string& path);

/// One integer 0/1 vertex array per region, named after the region.
[[nodiscard]] std::string format_region_groups(std::span<const Region> regions);
void save_regions_as_groups(std::span<const Region> regions, const std::string& path);

/// sqrt(int (u_h - exact)^2) over the field's cells with `rule`, which
/// should have order >= 2 * field order. Scalar variables only.
[[nodiscard]] double l2_error(const FieldVariable& var, const PointFunction& exact, const QuadratureRule& rule);

} // namespace femlet
