#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace femlet {

using Index = std::size_t;
using Point = std::array<double, 2>;

enum class CellType { triangle, quad };

/// Vertices per cell: 3 for triangles, 4 for quads.
[[nodiscard]] std::size_t vertices_per_cell(CellType type);

/// Two-dimensional single-cell-type mesh.
///
/// Construction validates connectivity: indices in range, no repeated
/// vertex within a cell, and strictly positive signed area (cells must be
/// listed counter-clockwise). Immutable afterwards.
class Mesh {
public:
    Mesh(std::vector<Point> vertices, std::vector<Index> connectivity, CellType type);

    [[nodiscard]] int dim() const { return 2; }
    [[nodiscard]] CellType cell_type() const { return type_; }
    [[nodiscard]] std::size_t n_vertices() const { return vertices_.size(); }
    [[nodiscard]] std::size_t n_cells() const { return connectivity_.size() / nodes_per_cell_; }
    [[nodiscard]] std::size_t nodes_per_cell() const { return nodes_per_cell_; }

    [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
    [[nodiscard]] const Point& vertex(Index i) const { return vertices_[i]; }
    [[nodiscard]] std::span<const Index> cell(Index c) const
    {
        return {connectivity_.data() + c * nodes_per_cell_, nodes_per_cell_};
    }
    [[nodiscard]] const std::vector<Index>& connectivity() const { return connectivity_; }

    /// Signed area of cell c (shoelace formula).
    [[nodiscard]] double cell_area(Index c) const;

    friend bool operator==(const Mesh&, const Mesh&) = default;

private:
    std::vector<Point> vertices_;
    std::vector<Index> connectivity_;
    CellType type_;
    std::size_t nodes_per_cell_;
};

/// Mesh edge, vertices sorted ascending.
struct Facet {
    Index a;
    Index b;
    int n_incident = 0;

    [[nodiscard]] bool is_boundary() const { return n_incident == 1; }
    friend bool operator==(const Facet&, const Facet&) = default;
};

/// All distinct edges sorted by (a, b), with incident cell counts.
[[nodiscard]] std::vector<Facet> extract_facets(const Mesh& mesh);

/// Parse the medit-subset ASCII format.
[[nodiscard]] Mesh read_mesh(std::string_view text);
[[nodiscard]] Mesh read_mesh_file(const std::string& path);
[[nodiscard]] std::string write_mesh(const Mesh& mesh);
void write_mesh_file(const Mesh& mesh, const std::string& path);

/// Structured tensor grid on [lo, hi] with n[0] x n[1] vertices. Triangles
/// split each quad along its lower-left to upper-right diagonal.
[[nodiscard]] Mesh gen_block_mesh(Point lo, Point hi, std::array<std::size_t, 2> n, CellType type);

enum class RegionKind { cell, facet, vertex };

/// Named subset of a mesh. Index sets are sorted ascending.
struct Region {
    std::string name;
    RegionKind kind = RegionKind::cell;
    std::shared_ptr<const Mesh> mesh;
    std::vector<Index> vertices;
    std::vector<Facet> facets;
    std::vector<Index> cells;

    [[nodiscard]] bool contains_vertex(Index v) const;
};

/// Select a region with the `all` | `vertices in <pred>` language, where
/// `<pred>` is a `&`-conjunction of optionally parenthesized `x|y <|> number`
/// comparisons. Comparisons are exact.
[[nodiscard]] Region select_region(std::shared_ptr<const Mesh> mesh, std::string name,
                                   std::string_view expression, RegionKind kind);

[[nodiscard]] RegionKind parse_region_kind(std::string_view text);

} // namespace femlet
