#pragma once

#include "femlet/discretization.hpp"
#include "femlet/reference.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace femlet {

/// `material.param` (param non-empty) or a plain variable name.
struct TermArg {
    std::string name;
    std::string param;

    [[nodiscard]] bool is_material() const { return !param.empty(); }
    friend bool operator==(const TermArg&, const TermArg&) = default;
};

/// A weak-form term call bound to an integral and a region by name.
struct TermSpec {
    std::string name;
    std::string integral;
    std::string region;
    std::vector<TermArg> args;

    [[nodiscard]] std::vector<TermArg> materials() const;
    [[nodiscard]] std::vector<std::string> variables() const;
    friend bool operator==(const TermSpec&, const TermSpec&) = default;
};

/// Registered argument shape of a term: material argument count range and
/// variable count (test first, then an optional state/parameter).
struct TermSignature {
    std::string_view name;
    std::size_t min_materials;
    std::size_t max_materials;
    std::size_t n_variables;
};

/// Throws ParseError for a name not in the registry.
[[nodiscard]] const TermSignature& lookup_term(std::string_view name);
[[nodiscard]] std::span<const TermSignature> registered_terms();

/// Check argument counts and ordering (materials first) against the
/// registry; throws ParseError.
void check_term_signature(const TermSpec& spec);

/// Parse `name(arg, ...)` and check it against the registry.
[[nodiscard]] TermSpec parse_term_spec(std::string_view text);

/// Library-mode term construction, `Term.new(text, integral, region)`.
[[nodiscard]] TermSpec make_term(std::string_view text, std::string integral, std::string region);

/// Contiguous per-cell contributions. Matrix mode: n_rows x n_cols blocks,
/// row-major. Vector mode: n_cols == 0 and n_rows entries per cell.
struct ElementBatch {
    std::size_t n_cells = 0;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;

    [[nodiscard]] bool is_matrix() const { return n_cols > 0; }
    [[nodiscard]] std::size_t block_size() const { return is_matrix() ? n_rows * n_cols : n_rows; }
    double& operator()(std::size_t k, std::size_t i, std::size_t j)
    {
        return values[k * n_rows * n_cols + i * n_cols + j];
    }
    double operator()(std::size_t k, std::size_t i, std::size_t j) const
    {
        return values[k * n_rows * n_cols + i * n_cols + j];
    }
    double& operator()(std::size_t k, std::size_t i) { return values[k * n_rows + i]; }
    double operator()(std::size_t k, std::size_t i) const { return values[k * n_rows + i]; }
};

/// Voigt isotropic stiffness [[l+2m, l, 0], [l, l+2m, 0], [0, 0, m]].
[[nodiscard]] Eigen::Matrix3d isotropic_stiffness(double lam, double mu);

/// coef * int grad(phi_i) . grad(phi_j).
[[nodiscard]] ElementBatch laplace_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                          double coef = 1.0);

/// int B^T D B with engineering-shear strain [e11, e22, 2 e12]; DOFs
/// interleaved per node.
[[nodiscard]] ElementBatch lin_elastic_iso_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                                  double lam, double mu);

/// Thermal load int t alpha_ij e_ij(v). alpha is [a11, a22, a12] (tensor
/// components, so the shear part enters as 2 a12 e12). t_qp is laid out
/// [cell][qp].
[[nodiscard]] ElementBatch biot_vector_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                              const std::array<double, 3>& alpha, std::span<const double> t_qp);

/// Coupling block C[i, k] = int alpha_ij e_ij(v_i) psi_k against scalar
/// basis values psi (one row per quadrature point).
[[nodiscard]] ElementBatch biot_matrix_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                              const std::array<double, 3>& alpha, const Eigen::MatrixXd& scalar_basis);

/// int f(x) phi_i; f_qp laid out [cell][qp].
[[nodiscard]] ElementBatch source_kernel(const GeometryData& geo, const Eigen::MatrixXd& basis,
                                         std::span<const double> f_qp);
[[nodiscard]] ElementBatch source_kernel(const GeometryData& geo, const Eigen::MatrixXd& basis, const PointFunction& f);

} // namespace femlet
