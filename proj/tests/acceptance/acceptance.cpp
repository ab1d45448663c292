// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include "femlet/error.hpp"
#include "femlet/problem.hpp"

#include "support/oracle.hpp"
#include "support/problems.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace femlet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
        }
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += what + (ok ? "" : " [failed]");
    }
};

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

double max_abs(const Eigen::MatrixXd& m)
{
    return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

ProblemDefinition temperature_from_file()
{
    return load_problem_file((fs::path(FEMLET_TEST_DATA_DIR) / "temperature.json").string());
}

Outcome temperature_example()
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    ProblemDefinition pb = temperature_from_file();
    static_cast<void>(pb.solve());
    const double elapsed = seconds_since(t0);
    const auto& t = pb.variables().at("t").data();
    const auto& nodes = pb.field("temperature")->node_coords();
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        err = std::max(err, std::abs(t[i] - (20.0 + 10.0 * nodes[i][0])));
    }
    out.require(pb.mesh().n_vertices() == 17 * 17, "17x17 vertex grid");
    out.require(err <= 1e-9, "max|T-(20+10x)| = " + num(err));
    out.require(elapsed < 2.0, "runtime " + num(elapsed) + " s");
    return out;
}

Outcome single_newton_iteration()
{
    Outcome out;
    ProblemDefinition pb = temperature_from_file();
    const ProblemSolution sol = pb.solve();
    const SolveStatus& st = sol.blocks.at(0).status;
    out.require(st.converged, "converged");
    out.require(st.iterations == 1, "iterations = " + std::to_string(st.iterations));
    out.require(st.final_residual <= 1e-10, "residual = " + num(st.final_residual));
    return out;
}

Outcome thermoelasticity()
{
    Outcome out;
    const auto mesh = fixtures::square_mesh(11);
    const fixtures::ThermoResult script = fixtures::solve_thermo_script(mesh);
    const fixtures::ThermoResult sequence = fixtures::solve_thermo_sequence(mesh);
    const double dt = fixtures::max_abs_diff(script.t, sequence.t);
    const double du = fixtures::max_abs_diff(script.u, sequence.u);
    out.require(dt <= 1e-12 && du <= 1e-12, "sequence vs script: dT " + num(dt) + ", du " + num(du));
    out.require(fixtures::max_abs(sequence.u) > 1e-3, "nontrivial displacement " + num(fixtures::max_abs(sequence.u)));

    fixtures::ThermoConfig uniform;
    uniform.t_left = uniform.t_right = uniform.t0;
    const double u0 = fixtures::max_abs(fixtures::solve_thermo_sequence(mesh, uniform).u);
    out.require(u0 <= 1e-10, "T = T0 gives max|u| = " + num(u0));
    return out;
}

std::vector<std::shared_ptr<const Mesh>> small_meshes()
{
    std::vector<std::shared_ptr<const Mesh>> out;
    out.push_back(std::make_shared<const Mesh>(
        Mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0, 1, 2, 0, 2, 3}, CellType::triangle)));
    out.push_back(std::make_shared<const Mesh>(gen_block_mesh({-1, -1}, {1, 1}, {3, 3}, CellType::triangle)));
    {
        const Mesh base = gen_block_mesh({0, 0}, {1, 1}, {3, 3}, CellType::triangle);
        std::vector<Point> pts = base.vertices();
        pts[4] = {0.57, 0.38};
        out.push_back(std::make_shared<const Mesh>(Mesh(pts, base.connectivity(), CellType::triangle)));
    }
    out.push_back(std::make_shared<const Mesh>(gen_block_mesh({0, 0}, {2, 1}, {3, 2}, CellType::quad)));
    {
        const Mesh base = gen_block_mesh({0, 0}, {1, 1}, {3, 3}, CellType::quad);
        std::vector<Point> pts = base.vertices();
        for (Point& p : pts) {
            p = {1.1 * p[0] + 0.3 * p[1], -0.25 * p[0] + 0.8 * p[1]};
        }
        out.push_back(std::make_shared<const Mesh>(Mesh(pts, base.connectivity(), CellType::quad)));
    }
    return out;
}

ProblemDefinition small_problem(std::shared_ptr<const Mesh> mesh, int t_order, int u_order)
{
    ProblemDefinition pb("oracle", mesh);
    pb.add_region(select_region(mesh, "Omega", "all", RegionKind::cell));
    auto ft = std::make_shared<const Field>(build_field_dofs("temperature", pb.region("Omega"), t_order, ValueKind::scalar));
    auto fu = std::make_shared<const Field>(build_field_dofs("displacement", pb.region("Omega"), u_order, ValueKind::vector));
    pb.add_field(ft);
    pb.add_field(fu);
    pb.add_variable(FieldVariable("t", VariableRole::unknown, ft, 1));
    pb.add_variable(FieldVariable("s", VariableRole::test, ft, 1, "t"));
    pb.add_variable(FieldVariable("u", VariableRole::unknown, fu, 2));
    pb.add_variable(FieldVariable("v", VariableRole::test, fu, 2, "u"));
    pb.add_material(Material("m", {{"lam", 10.0}, {"mu", 5.0}, {"val", 2.5},
                                   {"alpha", std::array<double, 3>{0.6, -0.2, 0.35}}}));
    pb.add_integral("i", 4);
    return pb;
}

Outcome dense_oracle()
{
    Outcome out;
    double lap = 0.0;
    double ela = 0.0;
    double biot = 0.0;
    std::size_t cases = 0;
    for (const auto& mesh : small_meshes()) {
        for (const int order : {1, 2}) {
            ++cases;
            {
                ProblemDefinition pb = small_problem(mesh, order, 1);
                pb.set_equations({Equation("lap", make_term("dw_laplace(m.val, s, t)", "i", "Omega"))});
                const Eigen::MatrixXd k = pb.assemble().matrix.to_dense();
                const oracle::Element e(mesh->cell_type(), order);
                const auto& nodes = pb.field("temperature")->node_coords();
                const Eigen::MatrixXd ref = oracle::dense_global(*mesh, nodes, 1, e, nodes, 1, e, [&](Index c) {
                    return oracle::laplace_cell(*mesh, c, e, 2.5);
                });
                lap = std::max(lap, max_abs(k - ref));
            }
            {
                ProblemDefinition pb = small_problem(mesh, 1, order);
                pb.set_equations({Equation("ela", make_term("dw_lin_elastic_iso(m.lam, m.mu, v, u)", "i", "Omega"))});
                const Eigen::MatrixXd k = pb.assemble().matrix.to_dense();
                const oracle::Element e(mesh->cell_type(), order);
                const auto& nodes = pb.field("displacement")->node_coords();
                const Eigen::MatrixXd ref = oracle::dense_global(*mesh, nodes, 2, e, nodes, 2, e, [&](Index c) {
                    return oracle::elasticity_cell(*mesh, c, e, 10.0, 5.0);
                });
                ela = std::max(ela, max_abs(k - ref) / max_abs(ref));
            }
            {
                ProblemDefinition pb = small_problem(mesh, order, 1);
                pb.set_equations({Equation("temperature", make_term("dw_laplace(s, t)", "i", "Omega")),
                                  Equation("coupled", make_term("dw_lin_elastic_iso(m.lam, m.mu, v, u)", "i", "Omega")
                                                          - make_term("dw_biot(m.alpha, v, t)", "i", "Omega"))});
                const Eigen::MatrixXd k = pb.assemble().matrix.to_dense();
                const DofLayout& layout = pb.layout();
                const oracle::Element ue(mesh->cell_type(), 1);
                const oracle::Element te(mesh->cell_type(), order);
                const Eigen::MatrixXd ref = oracle::dense_global(
                    *mesh, pb.field("displacement")->node_coords(), 2, ue, pb.field("temperature")->node_coords(), 1,
                    te, [&](Index c) { return oracle::biot_cell(*mesh, c, ue, te, {0.6, -0.2, 0.35}); });
                const Eigen::MatrixXd ut = k.block(static_cast<Eigen::Index>(layout.offset_of("u")),
                                                   static_cast<Eigen::Index>(layout.offset_of("t")), ref.rows(),
                                                   ref.cols());
                biot = std::max(biot, max_abs(ut + ref));
            }
        }
    }
    out.require(lap <= 1e-12, "Laplace " + num(lap));
    out.require(ela <= 1e-12, "elasticity (relative) " + num(ela));
    out.require(biot <= 1e-12, "Biot " + num(biot));
    out.detail += "; " + std::to_string(cases) + " mesh/order cases";
    return out;
}

/// L2 errors of -lap(u) = f with u = sin(pi x) sin(pi y) on [0,1]^2.
std::vector<double> mms_errors(int order, const std::vector<std::size_t>& sizes)
{
    using std::numbers::pi;
    const PointFunction exact = [](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    const PointFunction source = [exact](const Point& x) { return 2.0 * pi * pi * exact(x); };
    std::vector<double> errors;
    for (const std::size_t n : sizes) {
        const auto mesh = fixtures::square_mesh(n, CellType::triangle, 0.0, 1.0);
        ProblemDefinition pb("mms", mesh);
        pb.add_region(select_region(mesh, "Omega", "all", RegionKind::cell));
        pb.add_region(select_region(mesh, "Gamma", "all", RegionKind::facet));
        auto field = std::make_shared<const Field>(build_field_dofs("u", pb.region("Omega"), order, ValueKind::scalar));
        pb.add_field(field);
        pb.add_variable(FieldVariable("u", VariableRole::unknown, field, 1));
        pb.add_variable(FieldVariable("w", VariableRole::test, field, 1, "u"));
        pb.add_material(Material("mat", {{"f", source}}));
        pb.add_integral("i", 5);
        pb.set_equations({Equation("poisson", make_term("dw_laplace(w, u)", "i", "Omega")
                                                  - make_term("dw_volume_lvf(mat.f, w)", "i", "Omega"))});
        pb.time_update({{"zero", pb.region("Gamma"), {{"u.0", 0.0}}}});
        static_cast<void>(pb.solve());
        errors.push_back(l2_error(pb.variables().at("u"), exact, quad_rule(CellType::triangle, 5)));
    }
    return errors;
}

Outcome convergence_rates()
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> sizes{9, 17, 33};
    for (const auto& [order, bound] : {std::pair{1, 3.6}, std::pair{2, 7.0}}) {
        const auto e = mms_errors(order, sizes);
        const double r1 = e[0] / e[1];
        const double r2 = e[1] / e[2];
        out.require(r1 >= bound && r2 >= bound,
                    "P" + std::to_string(order) + " ratios " + num(r1) + ", " + num(r2) + " (>= " + num(bound) + ")");
    }
    const double elapsed = seconds_since(t0);
    out.require(elapsed < 10.0, "runtime " + num(elapsed) + " s");
    return out;
}

/// Elasticity with boundary values from a linear displacement field and no
/// body force; returns the max interior nodal error.
double patch_error(std::shared_ptr<const Mesh> mesh, int order)
{
    const PointFunction ux = [](const Point& x) { return 0.01 + 0.2 * x[0] - 0.07 * x[1]; };
    const PointFunction uy = [](const Point& x) { return -0.03 + 0.05 * x[0] + 0.13 * x[1]; };
    ProblemDefinition pb("patch", mesh);
    pb.add_region(select_region(mesh, "Omega", "all", RegionKind::cell));
    pb.add_region(select_region(mesh, "Gamma", "all", RegionKind::facet));
    auto field = std::make_shared<const Field>(build_field_dofs("displacement", pb.region("Omega"), order, ValueKind::vector));
    pb.add_field(field);
    pb.add_variable(FieldVariable("u", VariableRole::unknown, field, 2));
    pb.add_variable(FieldVariable("v", VariableRole::test, field, 2, "u"));
    pb.add_material(Material("m", {{"lam", 10.0}, {"mu", 5.0}}));
    pb.add_integral("i", 4);
    pb.set_equations({Equation("balance", make_term("dw_lin_elastic_iso(m.lam, m.mu, v, u)", "i", "Omega"))});
    pb.time_update({{"strain", pb.region("Gamma"), {{"u.0", ux}, {"u.1", uy}}}});
    static_cast<void>(pb.solve());

    const auto& u = pb.variables().at("u").data();
    const auto& fixed = pb.fixed_dofs();
    const auto& nodes = field->node_coords();
    double err = 0.0;
    std::size_t interior = 0;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (fixed.contains(2 * n)) {
            continue;
        }
        ++interior;
        err = std::max({err, std::abs(u[2 * n] - ux(nodes[n])), std::abs(u[2 * n + 1] - uy(nodes[n]))});
    }
    return interior ? err : INFINITY;
}

std::shared_ptr<const Mesh> jittered(CellType type, unsigned seed)
{
    const Mesh base = gen_block_mesh({0, 0}, {2, 1}, {7, 5}, type);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(-0.04, 0.04);
    std::vector<Point> pts = base.vertices();
    for (Point& p : pts) {
        const bool boundary = p[0] < 1e-9 || p[0] > 2 - 1e-9 || p[1] < 1e-9 || p[1] > 1 - 1e-9;
        if (!boundary) {
            p = {p[0] + d(rng), p[1] + d(rng)};
        }
    }
    return std::make_shared<const Mesh>(Mesh(pts, base.connectivity(), type));
}

Outcome patch_test()
{
    Outcome out;
    for (const CellType type : {CellType::triangle, CellType::quad}) {
        for (const int order : {1, 2}) {
            const double err = patch_error(jittered(type, 17), order);
            out.require(err <= 1e-10, std::string(type == CellType::triangle ? "triangle" : "quad") + " P"
                                          + std::to_string(order) + " " + num(err));
        }
    }
    return out;
}

Outcome kernel_hand_oracles()
{
    Outcome out;
    const auto mesh = std::make_shared<const Mesh>(Mesh({{0, 0}, {1, 0}, {0, 1}}, {0, 1, 2}, CellType::triangle));
    ProblemDefinition pb = small_problem(mesh, 1, 1);
    pb.set_equations({Equation("lap", make_term("dw_laplace(s, t)", "i", "Omega"))});
    const Eigen::MatrixXd k = pb.assemble().matrix.to_dense();
    Eigen::Matrix3d expected;
    expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    const double dk = max_abs(k - expected);
    out.require(dk <= 1e-14, "reference Laplace " + num(dk));

    Eigen::Matrix3d d;
    d << 20, 10, 0, 10, 20, 0, 0, 0, 5;
    out.require(isotropic_stiffness(10.0, 5.0) == d, "Voigt D exact");
    return out;
}

std::vector<Point> random_reference_points(CellType geometry, std::size_t n, std::mt19937& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts;
    while (pts.size() < n) {
        const double x = u(rng);
        const double y = u(rng);
        if (geometry == CellType::quad) {
            pts.push_back({2 * x - 1, 2 * y - 1});
        } else if (x + y < 1.0) {
            pts.push_back({x, y});
        }
    }
    return pts;
}

double monomial_integral(CellType geometry, int a, int b)
{
    const auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) {
            f *= i;
        }
        return f;
    };
    if (geometry == CellType::triangle) {
        return fact(a) * fact(b) / fact(a + b + 2);
    }
    const auto line = [](int p) { return p % 2 ? 0.0 : 2.0 / (p + 1); };
    return line(a) * line(b);
}

Outcome basis_and_quadrature()
{
    Outcome out;
    std::mt19937 rng(23);
    double pu = 0.0;
    double gs = 0.0;
    double fd = 0.0;
    double mono = 0.0;
    const double h = 1e-6;
    for (const CellType geometry : {CellType::triangle, CellType::quad}) {
        for (const int order : {1, 2}) {
            const auto elem = make_reference_element(geometry, order);
            const auto pts = random_reference_points(geometry, 40, rng);
            const Eigen::MatrixXd phi = eval_basis(elem, pts);
            const auto grads = eval_basis_grad(elem, pts);
            for (std::size_t q = 0; q < pts.size(); ++q) {
                pu = std::max(pu, std::abs(phi.row(static_cast<Eigen::Index>(q)).sum() - 1.0));
                gs = std::max({gs, std::abs(grads[q].col(0).sum()), std::abs(grads[q].col(1).sum())});
                for (int dim = 0; dim < 2; ++dim) {
                    std::array<Point, 2> pm{pts[q], pts[q]};
                    pm[0][dim] += h;
                    pm[1][dim] -= h;
                    const Eigen::MatrixXd f = eval_basis(elem, pm);
                    for (Eigen::Index i = 0; i < f.cols(); ++i) {
                        fd = std::max(fd, std::abs((f(0, i) - f(1, i)) / (2 * h) - grads[q](i, dim)));
                    }
                }
            }
        }
        for (int order = 1; order <= 5; ++order) {
            const auto rule = quad_rule(geometry, order);
            for (int a = 0; a <= order; ++a) {
                for (int b = 0; b <= order; ++b) {
                    if (geometry == CellType::triangle && a + b > order) {
                        continue;
                    }
                    double value = 0.0;
                    for (std::size_t q = 0; q < rule.size(); ++q) {
                        value += rule.weights[q] * std::pow(rule.points[q][0], a) * std::pow(rule.points[q][1], b);
                    }
                    mono = std::max(mono, std::abs(value - monomial_integral(geometry, a, b)));
                }
            }
        }
    }
    out.require(pu <= 1e-13, "partition of unity " + num(pu));
    out.require(gs <= 1e-12, "gradient sum " + num(gs));
    out.require(fd <= 1e-6, "finite differences " + num(fd));
    out.require(mono <= 1e-13, "monomial exactness " + num(mono));
    return out;
}

Outcome equation_ordering()
{
    Outcome out;
    fixtures::ThermoConfig cfg;
    ProblemDefinition pb = fixtures::thermo_base(fixtures::square_mesh(3), cfg, true);
    pb.set_equations({fixtures::elasticity_equation(), fixtures::temperature_equation()});
    const auto blocks = order_equation_blocks(pb.equations(), pb.variables());
    std::string order;
    for (const auto& b : blocks) {
        for (const std::size_t i : b) {
            order += (order.empty() ? "" : ", ") + pb.equations()[i].name();
        }
    }
    out.require(order == "temperature, elasticity", "order [" + order + "]");

    bool cyclic = false;
    try {
        static_cast<void>(order_equation_blocks(pb.equations(), pb.variables(), {{"temperature", {"elasticity"}}}));
    } catch (const CyclicDependencyError&) {
        cyclic = true;
    }
    out.require(cyclic, "cycle raises CyclicDependencyError");
    return out;
}

Outcome formats()
{
    Outcome out;
    const fs::path dir = fs::temp_directory_path() / "femlet_acceptance";
    fs::create_directories(dir);
    const fs::path vtk = dir / "temperature.vtk";
    fs::remove(vtk);
    const std::string cmd = "'" + std::string(FEMLET_CLI) + "' solve '"
                            + (fs::path(FEMLET_TEST_DATA_DIR) / "temperature.json").string() + "' -o '" + vtk.string()
                            + "' > '" + (dir / "cli.log").string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    out.require(code == 0, "CLI exit " + std::to_string(code));
    const bool same = fs::exists(vtk) && read_text(vtk) == read_text(fs::path(FEMLET_TEST_DATA_DIR) / "temperature_golden.vtk");
    out.require(same, "VTK matches golden byte for byte");

    const AssembledSystem file = temperature_from_file().assemble();
    const AssembledSystem script = fixtures::temperature_script_problem().assemble();
    out.require(file.matrix == script.matrix && file.rhs == script.rhs, "file and script matrices bitwise identical");
    return out;
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"temperature example", temperature_example},
        {"single Newton iteration", single_newton_iteration},
        {"thermoelasticity pipeline", thermoelasticity},
        {"dense-oracle equivalence", dense_oracle},
        {"convergence rates", convergence_rates},
        {"patch test", patch_test},
        {"kernel hand oracles", kernel_hand_oracles},
        {"quadrature and basis suite", basis_and_quadrature},
        {"equation-sequence ordering", equation_ordering},
        {"formats", formats},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        failed += outcome.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, outcome.pass ? "PASS" : "FAIL", criteria[i].first,
                    outcome.detail.c_str());
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
