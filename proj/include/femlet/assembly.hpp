#pragma once

#include "femlet/discretization.hpp"
#include "femlet/terms.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace femlet {

struct SignedTerm {
    int sign = 1;
    TermSpec term;

    friend bool operator==(const SignedTerm&, const SignedTerm&) = default;
};

/// Signed sum of terms, built with + and - on TermSpec values.
struct TermSum {
    std::vector<SignedTerm> terms;

    TermSum() = default;
    TermSum(TermSpec term) : terms{{1, std::move(term)}} {} // NOLINT: implicit by intent
};

TermSum operator+(TermSum lhs, const TermSum& rhs);
TermSum operator-(TermSum lhs, const TermSum& rhs);
TermSum operator-(TermSum operand);

/// Residual equation: sum of sign * term = 0. All terms share one test
/// variable.
class Equation {
public:
    Equation(std::string name, TermSum terms);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<SignedTerm>& terms() const { return terms_; }
    [[nodiscard]] const std::string& test_variable() const { return test_; }

private:
    std::string name_;
    std::vector<SignedTerm> terms_;
    std::string test_;
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    [[nodiscard]] std::size_t nnz() const { return values.size(); }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
    [[nodiscard]] Eigen::MatrixXd to_dense() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

/// Duplicates are summed in input order, so the result is bitwise
/// reproducible for a fixed triplet sequence.
[[nodiscard]] CsrMatrix compress_triplets(std::span<const Triplet> triplets, std::size_t rows, std::size_t cols);

/// Name lookups used while evaluating terms.
struct AssemblyContext {
    const Variables& variables;
    const std::map<std::string, Material, std::less<>>& materials;
    const std::map<std::string, int, std::less<>>& integrals;
    const std::map<std::string, Region, std::less<>>& regions;
};

/// Unknowns in equation declaration order (each equation contributes the
/// primary variable of its test variable).
[[nodiscard]] DofLayout make_layout(std::span<const Equation> equations, const Variables& variables);

/// Linear forms K and b such that the residual is K u - b. Matrix-mode
/// contributions whose state variable lies outside the layout act on that
/// variable's current data and land in b.
struct AssembledSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
};

[[nodiscard]] AssembledSystem assemble_system(std::span<const Equation> equations, const AssemblyContext& ctx,
                                              const DofLayout& layout);
[[nodiscard]] CsrMatrix assemble_tangent(std::span<const Equation> equations, const AssemblyContext& ctx,
                                         const DofLayout& layout);
[[nodiscard]] std::vector<double> assemble_residual(std::span<const Equation> equations, const AssemblyContext& ctx,
                                                    const DofLayout& layout, std::span<const double> state);

/// Free-DOF system K_ff u_f = f_f - K_fc u_c.
struct ReducedSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::size_t> free_dofs;
    FixedDofs fixed;
    std::size_t n_total = 0;

    /// Full vector: free values scattered, prescribed values re-inserted.
    [[nodiscard]] std::vector<double> recover(std::span<const double> free_values) const;
    /// Free entries of a full-length vector.
    [[nodiscard]] std::vector<double> restrict(std::span<const double> full) const;
};

/// Throws ArgumentError when every DOF is fixed.
[[nodiscard]] ReducedSystem reduce_system(const CsrMatrix& matrix, std::span<const double> rhs,
                                          const FixedDofs& fixed);

} // namespace femlet
