#include "femlet/io.hpp"

#include "femlet/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace femlet {

namespace {

void append_number(std::string& out, double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_geometry(std::string& out, const Mesh& mesh)
{
    out += "# vtk DataFile Version 2.0\n";
    out += "femlet output\n";
    out += "ASCII\n";
    out += "DATASET UNSTRUCTURED_GRID\n";
    out += "POINTS " + std::to_string(mesh.n_vertices()) + " double\n";
    for (const Point& p : mesh.vertices()) {
        append_number(out, p[0]);
        out += ' ';
        append_number(out, p[1]);
        out += " 0\n";
    }
    const std::size_t npc = mesh.nodes_per_cell();
    out += "\nCELLS " + std::to_string(mesh.n_cells()) + " " + std::to_string(mesh.n_cells() * (npc + 1)) + "\n";
    for (Index c = 0; c < mesh.n_cells(); ++c) {
        out += std::to_string(npc);
        for (const Index v : mesh.cell(c)) {
            out += ' ' + std::to_string(v);
        }
        out += '\n';
    }
    const char* type = mesh.cell_type() == CellType::triangle ? "5\n" : "9\n";
    out += "\nCELL_TYPES " + std::to_string(mesh.n_cells()) + "\n";
    for (Index c = 0; c < mesh.n_cells(); ++c) {
        out += type;
    }
    out += "\nPOINT_DATA " + std::to_string(mesh.n_vertices()) + "\n";
}

void write_text(const std::string& text, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

} // namespace

OutputField make_output_field(const FieldVariable& var)
{
    return {var.name(), var.n_components(), vertex_values(var)};
}

std::string format_vtk(const Mesh& mesh, std::span<const OutputField> fields)
{
    for (const OutputField& f : fields) {
        if (f.arity != 1 && f.arity != 2) {
            throw ArgumentError("output field '" + f.name + "': arity must be 1 or 2");
        }
        if (f.values.size() != mesh.n_vertices() * f.arity) {
            throw ArgumentError("output field '" + f.name + "' does not match the mesh vertex count");
        }
    }
    std::string out;
    append_geometry(out, mesh);
    for (const OutputField& f : fields) {
        if (f.arity == 1) {
            out += "SCALARS " + f.name + " double 1\nLOOKUP_TABLE default\n";
            for (const double v : f.values) {
                append_number(out, v);
                out += '\n';
            }
        } else {
            out += "VECTORS " + f.name + " double\n";
            for (std::size_t i = 0; i < mesh.n_vertices(); ++i) {
                append_number(out, f.values[2 * i]);
                out += ' ';
                append_number(out, f.values[2 * i + 1]);
                out += " 0\n";
            }
        }
    }
    return out;
}

void write_vtk(const Mesh& mesh, std::span<const OutputField> fields, const std::string& path)
{
    write_text(format_vtk(mesh, fields), path);
}

std::string format_region_groups(std::span<const Region> regions)
{
    if (regions.empty()) {
        throw ArgumentError("save_regions_as_groups: no regions given");
    }
    const auto& mesh = regions.front().mesh;
    for (const Region& r : regions) {
        if (!r.mesh || r.mesh != mesh) {
            throw ArgumentError("save_regions_as_groups: region '" + r.name + "' lives on a different mesh");
        }
    }
    std::string out;
    append_geometry(out, *mesh);
    for (const Region& r : regions) {
        out += "SCALARS " + r.name + " int 1\nLOOKUP_TABLE default\n";
        for (Index v = 0; v < mesh->n_vertices(); ++v) {
            out += r.contains_vertex(v) ? "1\n" : "0\n";
        }
    }
    return out;
}

void save_regions_as_groups(std::span<const Region> regions, const std::string& path)
{
    write_text(format_region_groups(regions), path);
}

double l2_error(const FieldVariable& var, const PointFunction& exact, const QuadratureRule& rule)
{
    if (var.n_components() != 1) {
        throw ArgumentError("l2_error: scalar variable expected");
    }
    const Field& field = var.field();
    std::vector<Index> local(field.n_cells());
    for (Index k = 0; k < local.size(); ++k) {
        local[k] = k;
    }
    const GeometryData geo = map_geometry(field.mesh(), field.cells(), rule);
    const auto uh = eval_variable_at_qp(var, local, rule);
    double sum = 0.0;
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const std::size_t at = geo.at(k, q);
            const double e = uh[at] - exact(geo.points[at]);
            sum += geo.weights[q] * geo.det[at] * e * e;
        }
    }
    return std::sqrt(sum);
}

} // namespace femlet
