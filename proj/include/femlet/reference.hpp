#pragma once

#include "femlet/mesh.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace femlet {

/// Per-point basis gradients: row i holds (d/dxi, d/deta) of node i.
using GradientTable = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Lagrange reference element.
///
/// Triangle: vertices (0,0), (1,0), (0,1); P2 adds midpoints of edges
/// (0,1), (1,2), (2,0). Quad: the bi-unit square with vertices
/// (-1,-1), (1,-1), (1,1), (-1,1); Q2 adds the four edge midpoints in the
/// same edge order and the center.
struct ReferenceElement {
    CellType geometry;
    int order;
    std::vector<Point> nodes;

    [[nodiscard]] std::size_t n_nodes() const { return nodes.size(); }
};

[[nodiscard]] ReferenceElement make_reference_element(CellType geometry, int order);

/// Values matrix, one row per point, one column per node.
[[nodiscard]] Eigen::MatrixXd eval_basis(const ReferenceElement& elem, std::span<const Point> pts);

/// Reference-space gradients, one table per point.
[[nodiscard]] std::vector<GradientTable> eval_basis_grad(const ReferenceElement& elem,
                                                         std::span<const Point> pts);

struct QuadratureRule {
    CellType geometry;
    int order;
    std::vector<Point> points;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Triangle rules are exact for total degree <= order; quad rules are
/// tensor Gauss-Legendre with ceil((order + 1) / 2) points per axis.
/// Supported orders: 1..5.
[[nodiscard]] QuadratureRule quad_rule(CellType geometry, int order);

/// Isoparametric (order-1) mapping data for a batch of cells. Entries are
/// stored cell-major: index = k * n_qp + q for the k-th requested cell.
struct GeometryData {
    std::vector<Index> cells;
    std::size_t n_qp = 0;
    std::vector<double> weights;
    std::vector<Eigen::Matrix2d> jacobian;
    std::vector<Eigen::Matrix2d> inverse_jacobian;
    std::vector<double> det;
    std::vector<Point> points;

    [[nodiscard]] std::size_t n_cells() const { return cells.size(); }
    [[nodiscard]] std::size_t at(std::size_t k, std::size_t q) const { return k * n_qp + q; }
};

/// Throws DegenerateCellError when det J <= 0 at any quadrature point.
[[nodiscard]] GeometryData map_geometry(const Mesh& mesh, std::span<const Index> cells,
                                        const QuadratureRule& rule);

} // namespace femlet
