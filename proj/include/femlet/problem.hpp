#pragma once

#include "femlet/assembly.hpp"
#include "femlet/discretization.hpp"
#include "femlet/io.hpp"
#include "femlet/mesh.hpp"
#include "femlet/solvers.hpp"

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace femlet {

/// Parsed `term.integral.region(args) [+|- ...] = 0`.
struct EquationSpecDsl {
    std::vector<SignedTerm> terms;

    friend bool operator==(const EquationSpecDsl&, const EquationSpecDsl&) = default;
};

[[nodiscard]] EquationSpecDsl parse_equation_dsl(std::string_view text);
/// Canonical text form; parse_equation_dsl(format_equation_dsl(x)) == x.
[[nodiscard]] std::string format_equation_dsl(const EquationSpecDsl& spec);

struct LinearSolverConfig {
    enum class Kind { direct, cg };
    Kind kind = Kind::direct;
    double tol = 1e-12;
    std::size_t max_iter = 10000;
};

/// Callable for a config. The CG variant throws SolverError when it does
/// not converge.
[[nodiscard]] LinearSolver make_linear_solver(const LinearSolverConfig& config);

struct BlockReport {
    std::vector<std::string> equations;
    SolveStatus status;
};

struct ProblemSolution {
    DofLayout layout;
    std::vector<double> state;
    std::vector<OutputField> outputs;
    std::vector<BlockReport> blocks;
};

/// Owns the named pieces of a problem and runs the equation-sequence solve.
///
/// Typical script flow: register regions, fields, variables, materials and
/// integrals; set_equations(); time_update(ebcs); solve(). A second stage
/// swaps in new equations with set_equations_instance() and new boundary
/// conditions with time_update().
class ProblemDefinition {
public:
    ProblemDefinition(std::string name, std::shared_ptr<const Mesh> mesh);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
    [[nodiscard]] const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

    void add_region(Region region);
    [[nodiscard]] const Region& region(std::string_view name) const;
    /// Regions in registration order.
    [[nodiscard]] std::vector<Region> regions() const;

    void add_field(std::shared_ptr<const Field> field);
    void remove_field(std::string_view name);
    [[nodiscard]] std::shared_ptr<const Field> field(std::string_view name) const;

    void add_variable(FieldVariable var);
    [[nodiscard]] Variables& variables() { return variables_; }
    [[nodiscard]] const Variables& variables() const { return variables_; }

    void add_material(Material material);
    void add_integral(std::string name, int order);

    void set_solvers(std::shared_ptr<const LinearSolverConfig> ls, std::shared_ptr<const NewtonParams> nls);
    [[nodiscard]] const std::shared_ptr<const LinearSolverConfig>& linear_solver() const { return ls_; }
    [[nodiscard]] const std::shared_ptr<const NewtonParams>& nonlinear_solver() const { return nls_; }

    /// Install equations, validate every name they reference, and rebuild the
    /// DOF layout. `depends_on` maps equation names to explicit prerequisites.
    void set_equations(std::vector<Equation> equations, std::map<std::string, std::vector<std::string>> depends_on = {});
    /// Replace the equations; solver configs survive only with keep_solvers,
    /// otherwise they reset to defaults. The active boundary conditions are
    /// cleared because the layout changes.
    void set_equations_instance(std::vector<Equation> equations, bool keep_solvers);
    [[nodiscard]] const std::vector<Equation>& equations() const { return equations_; }
    [[nodiscard]] const DofLayout& layout() const { return layout_; }

    /// Replace (not merge) the active boundary conditions and recompute the
    /// fixed-DOF table.
    void time_update(std::vector<EssentialBC> ebcs);
    [[nodiscard]] const std::vector<EssentialBC>& ebcs() const { return ebcs_; }
    [[nodiscard]] const FixedDofs& fixed_dofs() const { return fixed_; }

    [[nodiscard]] AssembledSystem assemble() const;

    /// Order equations into blocks, solve each with the stationary solver,
    /// and store results in the unknown variables. Throws SolverError when a
    /// block fails to converge.
    ProblemSolution solve();

    /// Output path from the description's options, if any.
    std::string output_path;

private:
    [[nodiscard]] AssemblyContext context() const;
    void validate_equation(const Equation& eq) const;

    std::string name_;
    std::shared_ptr<const Mesh> mesh_;
    std::vector<std::string> region_order_;
    std::map<std::string, Region, std::less<>> regions_;
    std::map<std::string, std::shared_ptr<const Field>, std::less<>> fields_;
    Variables variables_;
    std::map<std::string, Material, std::less<>> materials_;
    std::map<std::string, int, std::less<>> integrals_;
    std::vector<Equation> equations_;
    std::map<std::string, std::vector<std::string>> depends_on_;
    DofLayout layout_;
    std::vector<EssentialBC> ebcs_;
    FixedDofs fixed_;
    std::shared_ptr<const LinearSolverConfig> ls_;
    std::shared_ptr<const NewtonParams> nls_;
};

/// Build a problem from a JSON description document. Relative mesh paths
/// resolve against the current working directory.
[[nodiscard]] ProblemDefinition build_problem_from_description(std::string_view text);
[[nodiscard]] ProblemDefinition load_problem_file(const std::string& path);

} // namespace femlet
