#include "femlet/error.hpp"
#include "femlet/terms.hpp"

#include "support/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace femlet;

namespace {

/// Ten disjoint random affine cells (triangles, or parallelograms for quads).
Mesh random_cells(CellType type, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point> pts;
    std::vector<Index> conn;
    while (conn.size() < 10 * vertices_per_cell(type)) {
        const Point o{u(rng) * 5, u(rng) * 5};
        const Point a{1.0 + 0.5 * u(rng), 0.5 * u(rng)};
        const Point b{0.5 * u(rng), 1.0 + 0.5 * u(rng)};
        if (a[0] * b[1] - a[1] * b[0] < 0.2) {
            continue;
        }
        const Index base = pts.size();
        pts.push_back(o);
        pts.push_back({o[0] + a[0], o[1] + a[1]});
        if (type == CellType::quad) {
            pts.push_back({o[0] + a[0] + b[0], o[1] + a[1] + b[1]});
        }
        pts.push_back({o[0] + b[0], o[1] + b[1]});
        for (Index i = 0; i < vertices_per_cell(type); ++i) {
            conn.push_back(base + i);
        }
    }
    return {pts, conn, type};
}

std::vector<Index> iota(std::size_t n)
{
    std::vector<Index> v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = i;
    }
    return v;
}

struct Setup {
    QuadratureRule rule;
    GeometryData geo;
    std::vector<GradientTable> grads;
    Eigen::MatrixXd basis;
};

Setup setup(const Mesh& mesh, int order, int quad_order)
{
    const auto elem = make_reference_element(mesh.cell_type(), order);
    auto rule = quad_rule(mesh.cell_type(), quad_order);
    auto geo = map_geometry(mesh, iota(mesh.n_cells()), rule);
    auto grads = eval_basis_grad(elem, rule.points);
    auto basis = eval_basis(elem, rule.points);
    return {std::move(rule), std::move(geo), std::move(grads), std::move(basis)};
}

Mesh reference_triangle()
{
    return {{{0, 0}, {1, 0}, {0, 1}}, {0, 1, 2}, CellType::triangle};
}

} // namespace

TEST(LaplaceKernel, ReferenceTriangle)
{
    const Mesh ref = reference_triangle();
    const auto s = setup(ref, 1, 2);
    const ElementBatch k = laplace_kernel(s.geo, s.grads);
    const double expected[3][3] = {{1, -0.5, -0.5}, {-0.5, 0.5, 0}, {-0.5, 0, 0.5}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(k(0, i, j), expected[i][j], 1e-14);
        }
    }
    const Mesh scaled({{0, 0}, {2, 0}, {0, 2}}, {0, 1, 2}, CellType::triangle);
    const auto s2 = setup(scaled, 1, 2);
    const ElementBatch k2 = laplace_kernel(s2.geo, s2.grads);
    for (std::size_t i = 0; i < k.values.size(); ++i) {
        EXPECT_NEAR(k2.values[i], k.values[i], 1e-14);
    }
}

TEST(LaplaceKernel, MatchesOracleSymmetricZeroRowSum)
{
    for (const CellType type : {CellType::triangle, CellType::quad}) {
        for (const int order : {1, 2}) {
            const Mesh mesh = random_cells(type, 17 + order);
            const auto s = setup(mesh, order, 4);
            const ElementBatch k = laplace_kernel(s.geo, s.grads, 1.5);
            const oracle::Element elem(type, order);
            for (Index c = 0; c < mesh.n_cells(); ++c) {
                const Eigen::MatrixXd ref = oracle::laplace_cell(mesh, c, elem, 1.5);
                for (std::size_t i = 0; i < k.n_rows; ++i) {
                    double row = 0.0;
                    for (std::size_t j = 0; j < k.n_cols; ++j) {
                        EXPECT_NEAR(k(c, i, j), ref(i, j), 1e-13);
                        EXPECT_NEAR(k(c, i, j), k(c, j, i), 1e-13);
                        row += k(c, i, j);
                    }
                    EXPECT_NEAR(row, 0.0, 1e-13);
                }
            }
        }
    }
}

TEST(LinElasticKernel, VoigtStiffness)
{
    Eigen::Matrix3d expected;
    expected << 20, 10, 0, 10, 20, 0, 0, 0, 5;
    EXPECT_EQ(isotropic_stiffness(10.0, 5.0), expected);
}

TEST(LinElasticKernel, MatchesOracleAndNullSpace)
{
    for (const CellType type : {CellType::triangle, CellType::quad}) {
        for (const int order : {1, 2}) {
            const Mesh mesh = random_cells(type, 5 + order);
            const auto s = setup(mesh, order, 4);
            const ElementBatch k = lin_elastic_iso_kernel(s.geo, s.grads, 10.0, 5.0);
            const oracle::Element elem(type, order);
            const auto n = static_cast<Eigen::Index>(k.n_rows);
            for (Index c = 0; c < mesh.n_cells(); ++c) {
                const Eigen::MatrixXd ref = oracle::elasticity_cell(mesh, c, elem, 10.0, 5.0);
                Eigen::MatrixXd ke(n, n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index j = 0; j < n; ++j) {
                        ke(i, j) = k(c, i, j);
                        EXPECT_NEAR(ke(i, j), ref(i, j), 1e-12 * std::max(1.0, std::abs(ref(i, j))));
                    }
                }
                EXPECT_LT((ke - ke.transpose()).cwiseAbs().maxCoeff(), 1e-13);

                const auto coords = oracle::cell_node_coords(mesh, c, elem);
                Eigen::VectorXd tx(n), ty(n), rot(n);
                for (Eigen::Index a = 0; a < n / 2; ++a) {
                    const Point& x = coords[static_cast<std::size_t>(a)];
                    tx.segment<2>(2 * a) << 1, 0;
                    ty.segment<2>(2 * a) << 0, 1;
                    rot.segment<2>(2 * a) << -x[1], x[0];
                }
                EXPECT_LT((ke * tx).cwiseAbs().maxCoeff(), 1e-12);
                EXPECT_LT((ke * ty).cwiseAbs().maxCoeff(), 1e-12);
                EXPECT_LT((ke * rot).cwiseAbs().maxCoeff(), 1e-11);

                const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ke);
                const double scale = eig.eigenvalues().maxCoeff();
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (i < 3) {
                        EXPECT_LT(std::abs(eig.eigenvalues()[i]) / scale, 1e-10);
                    } else {
                        EXPECT_GT(eig.eigenvalues()[i] / scale, 1e-10);
                    }
                }
            }
        }
    }
}

TEST(LinElasticKernel, RejectsNonFiniteParameters)
{
    const Mesh ref = reference_triangle();
    const auto s = setup(ref, 1, 2);
    EXPECT_THROW(static_cast<void>(lin_elastic_iso_kernel(s.geo, s.grads, std::nan(""), 5.0)), ArgumentError);
    EXPECT_THROW(static_cast<void>(lin_elastic_iso_kernel(s.geo, s.grads, 1.0, INFINITY)), ArgumentError);
}

TEST(BiotKernel, ReferenceTriangleExamples)
{
    const Mesh ref = reference_triangle();
    const auto s = setup(ref, 1, 2);
    const std::vector<double> ones(s.rule.size(), 1.0);
    const std::vector<double> twos(s.rule.size(), 2.0);
    const ElementBatch f = biot_vector_kernel(s.geo, s.grads, {1, 1, 0}, ones);
    const double fx[3] = {-0.5, 0.5, 0.0};
    const double fy[3] = {-0.5, 0.0, 0.5};
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(f(0, 2 * i), fx[i], 1e-15);
        EXPECT_NEAR(f(0, 2 * i + 1), fy[i], 1e-15);
    }
    const ElementBatch g = biot_vector_kernel(s.geo, s.grads, {0.5, 0.5, 0}, twos);
    EXPECT_EQ(g.values, f.values);

    // Translation test modes see no strain.
    double sx = 0.0;
    double sy = 0.0;
    for (int i = 0; i < 3; ++i) {
        sx += f(0, 2 * i);
        sy += f(0, 2 * i + 1);
    }
    EXPECT_NEAR(sx, 0.0, 1e-15);
    EXPECT_NEAR(sy, 0.0, 1e-15);
}

TEST(BiotKernel, MatrixMatchesVectorAndOracle)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::array<double, 3> alpha{0.7, -0.3, 0.4};
    for (const CellType type : {CellType::triangle, CellType::quad}) {
        const Mesh mesh = random_cells(type, 29);
        const auto vec = setup(mesh, 1, 4);
        const auto sca = setup(mesh, 2, 4);
        const ElementBatch c = biot_matrix_kernel(vec.geo, vec.grads, alpha, sca.basis);
        const oracle::Element ve(type, 1);
        const oracle::Element se(type, 2);
        const std::size_t m = sca.basis.cols();
        for (Index k = 0; k < mesh.n_cells(); ++k) {
            const Eigen::MatrixXd ref = oracle::biot_cell(mesh, k, ve, se, alpha);
            for (std::size_t i = 0; i < c.n_rows; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    EXPECT_NEAR(c(k, i, j), ref(i, j), 1e-13);
                }
            }
        }

        // Vector mode with t interpolated from random nodal values.
        std::vector<double> nodal(mesh.n_cells() * m);
        for (double& x : nodal) {
            x = u(rng);
        }
        std::vector<double> t_qp(mesh.n_cells() * vec.rule.size());
        for (Index k = 0; k < mesh.n_cells(); ++k) {
            for (std::size_t q = 0; q < vec.rule.size(); ++q) {
                for (std::size_t j = 0; j < m; ++j) {
                    t_qp[k * vec.rule.size() + q] += sca.basis(q, j) * nodal[k * m + j];
                }
            }
        }
        const ElementBatch f = biot_vector_kernel(vec.geo, vec.grads, alpha, t_qp);
        for (Index k = 0; k < mesh.n_cells(); ++k) {
            for (std::size_t i = 0; i < c.n_rows; ++i) {
                double ct = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    ct += c(k, i, j) * nodal[k * m + j];
                }
                EXPECT_NEAR(ct, f(k, i), 1e-13);
            }
        }
    }
}

TEST(SourceKernel, Examples)
{
    const Mesh ref = reference_triangle();
    const auto s = setup(ref, 1, 2);
    const ElementBatch one = source_kernel(s.geo, s.basis, PointFunction([](const Point&) { return 1.0; }));
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(one(0, i), 1.0 / 6.0, 1e-15);
    }
    const ElementBatch zero = source_kernel(s.geo, s.basis, PointFunction([](const Point&) { return 0.0; }));
    for (const double v : zero.values) {
        EXPECT_EQ(v, 0.0);
    }
    const ElementBatch three = source_kernel(s.geo, s.basis, PointFunction([](const Point&) { return 3.0; }));
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(three(0, i), 3.0 * one(0, i), 1e-15);
    }
}

TEST(SourceKernel, MatchesOracle)
{
    const auto f = [](const Point& x) { return 1.0 + x[0] - 2.0 * x[1]; };
    for (const CellType type : {CellType::triangle, CellType::quad}) {
        for (const int order : {1, 2}) {
            const Mesh mesh = random_cells(type, 41 + order);
            const auto s = setup(mesh, order, 4);
            const ElementBatch b = source_kernel(s.geo, s.basis, PointFunction(f));
            const oracle::Element elem(type, order);
            for (Index c = 0; c < mesh.n_cells(); ++c) {
                const Eigen::VectorXd ref = oracle::source_cell(mesh, c, elem, f);
                for (std::size_t i = 0; i < b.n_rows; ++i) {
                    EXPECT_NEAR(b(c, i), ref[i], 1e-13);
                }
            }
        }
    }
}

TEST(ParseTermSpec, Examples)
{
    const TermSpec lap = parse_term_spec("dw_laplace(s, t)");
    EXPECT_EQ(lap.name, "dw_laplace");
    EXPECT_EQ(lap.variables(), (std::vector<std::string>{"s", "t"}));
    EXPECT_TRUE(lap.materials().empty());

    const TermSpec biot = parse_term_spec("dw_biot(m.alpha, v, t)");
    ASSERT_EQ(biot.materials().size(), 1u);
    EXPECT_EQ(biot.materials()[0].name, "m");
    EXPECT_EQ(biot.materials()[0].param, "alpha");
    EXPECT_EQ(biot.variables(), (std::vector<std::string>{"v", "t"}));

    EXPECT_THROW(static_cast<void>(parse_term_spec("dw_unknown(v)")), ParseError);
    EXPECT_THROW(static_cast<void>(parse_term_spec("dw_laplace(s)")), ParseError);
    EXPECT_THROW(static_cast<void>(parse_term_spec("dw_biot(v, m.alpha, t)")), ParseError);
    EXPECT_THROW(static_cast<void>(parse_term_spec("dw_lin_elastic_iso(m.lam, v, u)")), ParseError);
    EXPECT_THROW(static_cast<void>(parse_term_spec("dw_laplace(s, t")), ParseError);
}
