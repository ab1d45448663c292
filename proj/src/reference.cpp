#include "femlet/reference.hpp"

#include "femlet/error.hpp"

#include <array>
#include <cmath>
#include <string>

namespace femlet {

namespace {

// Q2 node layout as (i, j) indices into the 1D nodes {-1, 0, 1} -> {0, 1, 2}.
constexpr std::array<std::array<int, 2>, 9> q2_index = {{
    {0, 0}, {2, 0}, {2, 2}, {0, 2}, // vertices
    {1, 0}, {2, 1}, {1, 2}, {0, 1}, // edges (0,1) (1,2) (2,3) (3,0)
    {1, 1},                         // center
}};

constexpr std::array<std::array<int, 2>, 4> q1_sign = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

// 1D quadratic Lagrange polynomials on nodes -1, 0, 1 and their derivatives.
std::array<double, 3> lagrange3(double t)
{
    return {0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)};
}

std::array<double, 3> lagrange3_d(double t)
{
    return {t - 0.5, -2.0 * t, t + 0.5};
}

void check_element(const ReferenceElement& elem)
{
    if (elem.order != 1 && elem.order != 2) {
        throw ArgumentError("reference element order must be 1 or 2");
    }
}

} // namespace

ReferenceElement make_reference_element(CellType geometry, int order)
{
    ReferenceElement elem{geometry, order, {}};
    check_element(elem);
    if (geometry == CellType::triangle) {
        elem.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
        if (order == 2) {
            elem.nodes.insert(elem.nodes.end(), {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}});
        }
    } else {
        elem.nodes = {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}};
        if (order == 2) {
            elem.nodes.insert(elem.nodes.end(),
                              {{0.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, 0.0}});
        }
    }
    return elem;
}

Eigen::MatrixXd eval_basis(const ReferenceElement& elem, std::span<const Point> pts)
{
    check_element(elem);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(elem.n_nodes()));
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const double x = pts[p][0];
        const double y = pts[p][1];
        auto row = values.row(static_cast<Eigen::Index>(p));
        if (elem.geometry == CellType::triangle) {
            const double l0 = 1.0 - x - y;
            if (elem.order == 1) {
                row << l0, x, y;
            } else {
                row << l0 * (2.0 * l0 - 1.0), x * (2.0 * x - 1.0), y * (2.0 * y - 1.0), 4.0 * l0 * x,
                    4.0 * x * y, 4.0 * y * l0;
            }
        } else if (elem.order == 1) {
            for (int i = 0; i < 4; ++i) {
                row(i) = 0.25 * (1.0 + q1_sign[i][0] * x) * (1.0 + q1_sign[i][1] * y);
            }
        } else {
            const auto lx = lagrange3(x);
            const auto ly = lagrange3(y);
            for (int i = 0; i < 9; ++i) {
                row(i) = lx[q2_index[i][0]] * ly[q2_index[i][1]];
            }
        }
    }
    return values;
}

std::vector<GradientTable> eval_basis_grad(const ReferenceElement& elem, std::span<const Point> pts)
{
    check_element(elem);
    const auto n = static_cast<Eigen::Index>(elem.n_nodes());
    std::vector<GradientTable> grads;
    grads.reserve(pts.size());
    for (const Point& pt : pts) {
        const double x = pt[0];
        const double y = pt[1];
        GradientTable g(n, 2);
        if (elem.geometry == CellType::triangle) {
            if (elem.order == 1) {
                g << -1.0, -1.0, 1.0, 0.0, 0.0, 1.0;
            } else {
                const double l0 = 1.0 - x - y;
                g << 1.0 - 4.0 * l0, 1.0 - 4.0 * l0,  //
                    4.0 * x - 1.0, 0.0,               //
                    0.0, 4.0 * y - 1.0,               //
                    4.0 * (l0 - x), -4.0 * x,         //
                    4.0 * y, 4.0 * x,                 //
                    -4.0 * y, 4.0 * (l0 - y);
            }
        } else if (elem.order == 1) {
            for (int i = 0; i < 4; ++i) {
                const double sx = q1_sign[i][0];
                const double sy = q1_sign[i][1];
                g(i, 0) = 0.25 * sx * (1.0 + sy * y);
                g(i, 1) = 0.25 * (1.0 + sx * x) * sy;
            }
        } else {
            const auto lx = lagrange3(x);
            const auto ly = lagrange3(y);
            const auto dx = lagrange3_d(x);
            const auto dy = lagrange3_d(y);
            for (int i = 0; i < 9; ++i) {
                g(i, 0) = dx[q2_index[i][0]] * ly[q2_index[i][1]];
                g(i, 1) = lx[q2_index[i][0]] * dy[q2_index[i][1]];
            }
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

namespace {

void add_orbit(QuadratureRule& rule, double a, double weight)
{
    const double b = 1.0 - 2.0 * a;
    rule.points.insert(rule.points.end(), {{a, a}, {a, b}, {b, a}});
    rule.weights.insert(rule.weights.end(), {weight, weight, weight});
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
    switch (n) {
    case 1:
        x = {0.0};
        w = {2.0};
        break;
    case 2: {
        const double a = 1.0 / std::sqrt(3.0);
        x = {-a, a};
        w = {1.0, 1.0};
        break;
    }
    case 3: {
        const double a = std::sqrt(0.6);
        x = {-a, 0.0, a};
        w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        break;
    }
    default:
        throw ArgumentError("unsupported Gauss-Legendre point count");
    }
}

} // namespace

QuadratureRule quad_rule(CellType geometry, int order)
{
    if (order < 1 || order > 5) {
        throw ArgumentError("quadrature order " + std::to_string(order) + " is not supported (1..5)");
    }
    QuadratureRule rule{geometry, order, {}, {}};
    if (geometry == CellType::quad) {
        std::vector<double> x;
        std::vector<double> w;
        gauss_legendre((order + 2) / 2, x, w);
        for (std::size_t j = 0; j < x.size(); ++j) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                rule.points.push_back({x[i], x[j]});
                rule.weights.push_back(w[i] * w[j]);
            }
        }
        return rule;
    }

    if (order == 1) {
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {0.5};
    } else if (order == 2) {
        add_orbit(rule, 1.0 / 6.0, 1.0 / 6.0);
    } else if (order <= 4) {
        add_orbit(rule, 0.44594849091596488632, 0.11169079483900573285);
        add_orbit(rule, 0.091576213509770743460, 0.054975871827660933819);
    } else {
        const double s15 = std::sqrt(15.0);
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {9.0 / 80.0};
        add_orbit(rule, (6.0 - s15) / 21.0, (155.0 - s15) / 2400.0);
        add_orbit(rule, (6.0 + s15) / 21.0, (155.0 + s15) / 2400.0);
    }
    return rule;
}

GeometryData map_geometry(const Mesh& mesh, std::span<const Index> cells, const QuadratureRule& rule)
{
    if (rule.geometry != mesh.cell_type()) {
        throw ArgumentError("map_geometry: quadrature geometry does not match the mesh cell type");
    }
    const auto elem = make_reference_element(mesh.cell_type(), 1);
    const auto grads = eval_basis_grad(elem, rule.points);
    const auto values = eval_basis(elem, rule.points);
    const std::size_t n_qp = rule.size();

    GeometryData geo;
    geo.cells.assign(cells.begin(), cells.end());
    geo.n_qp = n_qp;
    geo.weights = rule.weights;
    const std::size_t total = cells.size() * n_qp;
    geo.jacobian.resize(total);
    geo.inverse_jacobian.resize(total);
    geo.det.resize(total);
    geo.points.resize(total);

    Eigen::Matrix<double, Eigen::Dynamic, 2> coords(static_cast<Eigen::Index>(elem.n_nodes()), 2);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto nodes = mesh.cell(cells[k]);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Point& p = mesh.vertex(nodes[i]);
            coords(static_cast<Eigen::Index>(i), 0) = p[0];
            coords(static_cast<Eigen::Index>(i), 1) = p[1];
        }
        for (std::size_t q = 0; q < n_qp; ++q) {
            const std::size_t at = geo.at(k, q);
            // J(a, b) = sum_i x_i[a] dphi_i/dxi_b
            const Eigen::Matrix2d jac = coords.transpose() * grads[q];
            const double det = jac.determinant();
            if (!(det > 0.0)) {
                throw DegenerateCellError("cell " + std::to_string(cells[k])
                                          + ": non-positive Jacobian determinant");
            }
            geo.jacobian[at] = jac;
            geo.det[at] = det;
            geo.inverse_jacobian[at] = jac.inverse();
            const Eigen::RowVector2d x = values.row(static_cast<Eigen::Index>(q)) * coords;
            geo.points[at] = {x(0), x(1)};
        }
    }
    return geo;
}

} // namespace femlet
