#include "femlet/solvers.hpp"

#include "femlet/error.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <queue>
#include <type_traits>

namespace femlet {

namespace {

double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (const double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

double norm_inf(std::span<const double> v)
{
    double m = 0.0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void check_square(const CsrMatrix& m, std::size_t n_rhs)
{
    if (m.rows != m.cols || m.rows != n_rhs) {
        throw ArgumentError("linear solve: matrix must be square and match the right-hand side");
    }
}

} // namespace

std::vector<double> solve_direct(const CsrMatrix& matrix, std::span<const double> rhs)
{
    check_square(matrix, rhs.size());
    const auto n = static_cast<Eigen::Index>(matrix.rows);
    if (n == 0) {
        return {};
    }
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(matrix.nnz());
    double scale = 0.0;
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t p = matrix.row_ptr[i]; p < matrix.row_ptr[i + 1]; ++p) {
            entries.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(matrix.col_idx[p]),
                                 matrix.values[p]);
            scale = std::max(scale, std::abs(matrix.values[p]));
        }
    }
    if (scale == 0.0) {
        throw SingularMatrixError("solve_direct: zero matrix");
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.setPivotThreshold(1.0);
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SingularMatrixError("solve_direct: factorization failed (" + lu.lastErrorMessage() + ")");
    }
    // U's diagonal is stored in the supernodal L factor.
    const auto& factor = lu.matrixL().m_mapL;
    using FactorIterator = std::remove_cvref_t<decltype(factor)>::InnerIterator;
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = 0.0;
        for (FactorIterator it(factor, j); it; ++it) {
            if (it.index() == j) {
                pivot = it.value();
                break;
            }
        }
        if (!(std::abs(pivot) > 1e-14 * scale)) {
            throw SingularMatrixError("solve_direct: pivot " + std::to_string(pivot) + " in column "
                                      + std::to_string(j) + " is numerically zero");
        }
    }
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    const Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw SingularMatrixError("solve_direct: numerically singular matrix");
    }
    std::vector<double> out(x.data(), x.data() + n);
    const auto ax = matrix.multiply(out);
    double err = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        err = std::max(err, std::abs(ax[i] - rhs[i]));
    }
    if (err > 1e-10 * std::max(1.0, norm_inf(rhs))) {
        throw SingularMatrixError("solve_direct: residual " + std::to_string(err)
                                  + " exceeds tolerance, matrix is numerically singular");
    }
    return out;
}

CgResult solve_cg(const CsrMatrix& matrix, std::span<const double> rhs, double tol, std::size_t max_iter)
{
    check_square(matrix, rhs.size());
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t p = matrix.row_ptr[i]; p < matrix.row_ptr[i + 1]; ++p) {
            const double a = matrix.values[p];
            const double at = matrix.at(matrix.col_idx[p], i);
            if (std::abs(a - at) > 1e-12 * std::max(1.0, std::abs(a))) {
                throw ArgumentError("solve_cg: matrix is not symmetric");
            }
        }
    }
    const std::size_t n = rhs.size();
    CgResult res;
    res.x.assign(n, 0.0);
    const double b_norm = norm2(rhs);
    if (b_norm == 0.0) {
        res.converged = true;
        return res;
    }
    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> p = r;
    double rr = dot(r, r);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const auto ap = matrix.multiply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw IndefiniteMatrixError("solve_cg: non-positive curvature p^T A p = " + std::to_string(pap));
        }
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res.iterations = it + 1;
        const double rr_new = dot(r, r);
        if (std::sqrt(rr_new) <= tol * b_norm) {
            res.converged = true;
            res.residual_norm = std::sqrt(rr_new);
            return res;
        }
        const double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    res.residual_norm = std::sqrt(rr);
    return res;
}

void NewtonParams::validate() const
{
    if (i_max < 1) {
        throw ArgumentError("newton: i_max must be at least 1");
    }
    if (!(eps_a > 0.0)) {
        throw ArgumentError("newton: eps_a must be positive");
    }
    if (!(eps_r >= 0.0)) {
        throw ArgumentError("newton: eps_r must be non-negative");
    }
    if (!(ls_red > 0.0 && ls_red < 1.0)) {
        throw ArgumentError("newton: ls_red must lie in (0, 1)");
    }
}

NewtonResult newton_solve(const ResidualFn& residual, const TangentFn& tangent, std::vector<double> u0,
                          const NewtonParams& params, const LinearSolver& linear_solver)
{
    params.validate();
    NewtonResult out;
    out.u = std::move(u0);
    SolveStatus& st = out.status;

    std::vector<double> r = residual(out.u);
    double r_norm = norm2(r);
    st.initial_residual = st.final_residual = r_norm;
    auto converged = [&](double norm) { return norm <= params.eps_a || norm <= params.eps_r * st.initial_residual; };
    if (r_norm <= params.eps_a) {
        st.converged = true;
        return out;
    }

    for (std::size_t it = 0; it < params.i_max; ++it) {
        std::vector<double> neg_r(r.size());
        std::transform(r.begin(), r.end(), neg_r.begin(), [](double v) { return -v; });
        const std::vector<double> du = linear_solver(tangent(out.u), neg_r);

        NewtonIteration rec;
        rec.residual_before = r_norm;
        double alpha = 1.0;
        std::vector<double> trial(out.u.size());
        std::vector<double> r_trial;
        double trial_norm = 0.0;
        bool accepted = false;
        for (std::size_t ls = 0; ls <= params.ls_max; ++ls) {
            for (std::size_t i = 0; i < trial.size(); ++i) {
                trial[i] = out.u[i] + alpha * du[i];
            }
            r_trial = residual(trial);
            trial_norm = norm2(r_trial);
            if (trial_norm < r_norm) {
                rec.ls_steps = ls;
                accepted = true;
                break;
            }
            alpha *= params.ls_red;
        }
        if (!accepted) {
            st.diverged = true;
            return out;
        }
        out.u.swap(trial);
        r.swap(r_trial);
        r_norm = trial_norm;
        rec.step_length = alpha;
        rec.residual_after = r_norm;
        st.history.push_back(rec);
        st.iterations = it + 1;
        st.final_residual = r_norm;
        if (converged(r_norm)) {
            st.converged = true;
            return out;
        }
    }
    return out;
}

StationaryResult stationary_solve(std::span<const Equation> equations, const AssemblyContext& ctx,
                                  const DofLayout& layout, const FixedDofs& fixed, const NewtonParams& params,
                                  const LinearSolver& linear_solver)
{
    // Every in-scope term is linear, so one assembly serves all iterations.
    const AssembledSystem sys = assemble_system(equations, ctx, layout);
    const ReducedSystem red = reduce_system(sys.matrix, sys.rhs, fixed);

    const ResidualFn residual = [&](std::span<const double> u_free) {
        const auto full = red.recover(u_free);
        auto r = sys.matrix.multiply(full);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] -= sys.rhs[i];
        }
        return red.restrict(r);
    };
    const TangentFn tangent = [&](std::span<const double>) { return red.matrix; };

    NewtonResult nr = newton_solve(residual, tangent, std::vector<double>(red.free_dofs.size(), 0.0), params,
                                   linear_solver);
    return {red.recover(nr.u), std::move(nr.status)};
}

std::vector<DependencyEdge> equation_dependencies(std::span<const Equation> equations, const Variables& variables,
                                                  const std::map<std::string, std::vector<std::string>>& depends_on)
{
    std::vector<std::string> unknowns;
    for (const Equation& eq : equations) {
        const std::string& u = variables.at(eq.test_variable()).primary_var_name();
        if (std::find(unknowns.begin(), unknowns.end(), u) != unknowns.end()) {
            throw ArgumentError("equation '" + eq.name() + "': unknown '" + u + "' is owned by another equation");
        }
        unknowns.push_back(u);
    }
    auto solver_of = [&](const std::string& unknown) -> std::ptrdiff_t {
        const auto it = std::find(unknowns.begin(), unknowns.end(), unknown);
        return it == unknowns.end() ? -1 : it - unknowns.begin();
    };

    std::vector<DependencyEdge> edges;
    auto add = [&](std::size_t from, std::size_t to) {
        for (const auto& e : edges) {
            if (e.from == from && e.to == to) {
                return;
            }
        }
        edges.push_back({from, to});
    };
    for (std::size_t a = 0; a < equations.size(); ++a) {
        for (const SignedTerm& st : equations[a].terms()) {
            for (const std::string& name : st.term.variables()) {
                const FieldVariable& var = variables.at(name);
                std::ptrdiff_t b = -1;
                if (var.role() == VariableRole::unknown) {
                    b = solver_of(var.name());
                } else if (var.role() == VariableRole::parameter && var.source()) {
                    b = solver_of(var.source()->variable);
                }
                if (b >= 0 && static_cast<std::size_t>(b) != a) {
                    add(a, static_cast<std::size_t>(b));
                }
            }
        }
        if (const auto it = depends_on.find(equations[a].name()); it != depends_on.end()) {
            for (const std::string& dep : it->second) {
                const auto pos = std::find_if(equations.begin(), equations.end(),
                                              [&](const Equation& e) { return e.name() == dep; });
                if (pos == equations.end()) {
                    throw ResolutionError("equation '" + equations[a].name() + "' depends on unknown equation '"
                                          + dep + "'");
                }
                const auto b = static_cast<std::size_t>(pos - equations.begin());
                if (b == a) {
                    throw CyclicDependencyError("equation '" + dep + "' depends on itself");
                }
                add(a, b);
            }
        }
    }
    return edges;
}

std::vector<std::vector<std::size_t>> order_equation_blocks(
    std::span<const Equation> equations, const Variables& variables,
    const std::map<std::string, std::vector<std::string>>& depends_on)
{
    const auto edges = equation_dependencies(equations, variables, depends_on);
    const std::size_t n = equations.size();
    std::vector<std::size_t> pending(n, 0);
    std::vector<std::vector<std::size_t>> dependents(n);
    for (const auto& e : edges) {
        ++pending[e.from];
        dependents[e.to].push_back(e.from);
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] == 0) {
            ready.push(i);
        }
    }
    std::vector<std::vector<std::size_t>> blocks;
    while (!ready.empty()) {
        const std::size_t i = ready.top();
        ready.pop();
        blocks.push_back({i});
        for (const std::size_t d : dependents[i]) {
            if (--pending[d] == 0) {
                ready.push(d);
            }
        }
    }
    if (blocks.size() != n) {
        std::string names;
        for (std::size_t i = 0; i < n; ++i) {
            if (pending[i] > 0) {
                names += (names.empty() ? "" : ", ") + equations[i].name();
            }
        }
        throw CyclicDependencyError("cyclic dependency among equations: " + names);
    }
    return blocks;
}

} // namespace femlet
