#pragma once

#include "femlet/assembly.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace femlet {

using LinearSolver = std::function<std::vector<double>(const CsrMatrix&, std::span<const double>)>;

/// Sparse LU with partial pivoting. Throws SingularMatrixError when the
/// factorization fails or the solution misses ||Ax - b||_inf <= 1e-10 max(1, ||b||_inf).
[[nodiscard]] std::vector<double> solve_direct(const CsrMatrix& matrix, std::span<const double> rhs);

struct CgResult {
    std::vector<double> x;
    bool converged = false;
    std::size_t iterations = 0;
    double residual_norm = 0.0;
};

/// Unpreconditioned conjugate gradients, stopping at ||r||_2 <= tol ||b||_2.
/// Throws ArgumentError for a non-symmetric matrix and IndefiniteMatrixError
/// when p^T A p <= 0.
[[nodiscard]] CgResult solve_cg(const CsrMatrix& matrix, std::span<const double> rhs, double tol,
                                std::size_t max_iter);

struct NewtonParams {
    std::size_t i_max = 1;
    double eps_a = 1e-10;
    double eps_r = 1e-8;
    double ls_red = 0.5;
    std::size_t ls_max = 20;

    /// Throws ArgumentError on out-of-range values.
    void validate() const;
};

struct NewtonIteration {
    double residual_before = 0.0;
    double residual_after = 0.0;
    double step_length = 1.0;
    std::size_t ls_steps = 0;
};

struct SolveStatus {
    bool converged = false;
    bool diverged = false;
    std::size_t iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    std::vector<NewtonIteration> history;
};

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;
using TangentFn = std::function<CsrMatrix(std::span<const double>)>;

struct NewtonResult {
    std::vector<double> u;
    SolveStatus status;
};

/// Newton iteration with residual-decrease backtracking (step lengths
/// 1, ls_red, ls_red^2, ...). Non-convergence is reported in the status;
/// linear-solver errors propagate.
[[nodiscard]] NewtonResult newton_solve(const ResidualFn& residual, const TangentFn& tangent,
                                        std::vector<double> u0, const NewtonParams& params,
                                        const LinearSolver& linear_solver = solve_direct);

struct StationaryResult {
    std::vector<double> state;
    SolveStatus status;
};

/// Assemble, reduce by the fixed DOFs, Newton-solve from a zero free state,
/// and recover the full state.
[[nodiscard]] StationaryResult stationary_solve(std::span<const Equation> equations, const AssemblyContext& ctx,
                                                const DofLayout& layout, const FixedDofs& fixed,
                                                const NewtonParams& params,
                                                const LinearSolver& linear_solver = solve_direct);

/// Dependency edge: `from` needs the unknown solved by `to`.
struct DependencyEdge {
    std::size_t from;
    std::size_t to;
};

/// Edges from term arguments (another equation's unknown, or a parameter
/// derived from it) plus explicit `depends_on` declarations.
[[nodiscard]] std::vector<DependencyEdge>
equation_dependencies(std::span<const Equation> equations, const Variables& variables,
                      const std::map<std::string, std::vector<std::string>>& depends_on = {});

/// Topological order of single-equation blocks; ties keep declaration
/// order. Throws CyclicDependencyError for mutually dependent equations.
[[nodiscard]] std::vector<std::vector<std::size_t>>
order_equation_blocks(std::span<const Equation> equations, const Variables& variables,
                      const std::map<std::string, std::vector<std::string>>& depends_on = {});

} // namespace femlet
