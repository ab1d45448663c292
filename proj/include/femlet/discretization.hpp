#pragma once

#include "femlet/mesh.hpp"
#include "femlet/reference.hpp"

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace femlet {

enum class ValueKind { scalar, vector };

/// Lagrange approximation space over a cell region.
///
/// DOF nodes are numbered deterministically: region vertices in mesh
/// order, then edges sorted by (min vertex, max vertex) for order 2, then
/// cell centers in region cell order for Q2.
class Field {
public:
    static constexpr Index no_node = std::numeric_limits<Index>::max();

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const Region& region() const { return region_; }
    [[nodiscard]] const Mesh& mesh() const { return *region_.mesh; }
    [[nodiscard]] int order() const { return elem_.order; }
    [[nodiscard]] ValueKind value_kind() const { return kind_; }
    [[nodiscard]] std::size_t n_components() const { return kind_ == ValueKind::scalar ? 1 : 2; }
    [[nodiscard]] const ReferenceElement& reference() const { return elem_; }

    [[nodiscard]] std::size_t n_nodes() const { return coords_.size(); }
    [[nodiscard]] std::size_t n_dofs() const { return n_nodes() * n_components(); }
    [[nodiscard]] std::size_t n_cells() const { return region_.cells.size(); }
    [[nodiscard]] std::size_t nodes_per_cell() const { return elem_.n_nodes(); }

    /// Mesh cell indices, in field-local cell order.
    [[nodiscard]] const std::vector<Index>& cells() const { return region_.cells; }
    /// DOF nodes of the k-th field-local cell, in reference node order.
    [[nodiscard]] std::span<const Index> cell_nodes(Index k) const
    {
        return {conn_.data() + k * nodes_per_cell(), nodes_per_cell()};
    }
    [[nodiscard]] const std::vector<Point>& node_coords() const { return coords_; }
    /// Mesh vertices a node was generated from (1, 2 or 4 of them).
    [[nodiscard]] const std::vector<Index>& node_parents(Index node) const { return parents_[node]; }
    /// DOF node sitting on mesh vertex v, or no_node.
    [[nodiscard]] Index vertex_node(Index v) const { return vertex_node_[v]; }

    friend Field build_field_dofs(std::string name, const Region& region, int order, ValueKind kind);

private:
    Field() = default;

    std::string name_;
    Region region_;
    ValueKind kind_ = ValueKind::scalar;
    ReferenceElement elem_{CellType::triangle, 1, {}};
    std::vector<Point> coords_;
    std::vector<Index> conn_;
    std::vector<std::vector<Index>> parents_;
    std::vector<Index> vertex_node_;
};

[[nodiscard]] Field build_field_dofs(std::string name, const Region& region, int order, ValueKind kind);

enum class VariableRole { unknown, test, parameter };

[[nodiscard]] VariableRole parse_variable_role(std::string_view text);

/// Declares that a parameter variable is filled from an unknown as
/// `data = source + offset` once that unknown has been solved.
struct ParameterSource {
    std::string variable;
    double offset = 0.0;
};

/// Discrete variable on a field. Scalar DOFs are node-major with
/// components interleaved: (node0, c0), (node0, c1), (node1, c0), ...
class FieldVariable {
public:
    FieldVariable(std::string name, VariableRole role, std::shared_ptr<const Field> field,
                  std::size_t n_components, std::string primary_var_name = {});

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] VariableRole role() const { return role_; }
    [[nodiscard]] const Field& field() const { return *field_; }
    [[nodiscard]] const std::shared_ptr<const Field>& field_ptr() const { return field_; }
    [[nodiscard]] std::size_t n_components() const { return n_components_; }
    [[nodiscard]] const std::string& primary_var_name() const { return primary_; }
    [[nodiscard]] std::size_t n_dofs() const { return field_->n_nodes() * n_components_; }

    [[nodiscard]] bool has_data() const { return data_.has_value(); }
    /// Throws ArgumentError when the variable carries no data.
    [[nodiscard]] const std::vector<double>& data() const;
    [[nodiscard]] std::vector<double> operator()() const { return data(); }
    void set_data(std::vector<double> values);

    [[nodiscard]] const std::optional<ParameterSource>& source() const { return source_; }
    void set_source(ParameterSource source);

private:
    std::string name_;
    VariableRole role_;
    std::shared_ptr<const Field> field_;
    std::size_t n_components_;
    std::string primary_;
    std::optional<std::vector<double>> data_;
    std::optional<ParameterSource> source_;
};

/// Insertion-ordered collection of variables, addressed by name.
class Variables {
public:
    void add(FieldVariable var);
    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] FieldVariable& at(std::string_view name);
    [[nodiscard]] const FieldVariable& at(std::string_view name) const;
    [[nodiscard]] auto begin() const { return vars_.begin(); }
    [[nodiscard]] auto end() const { return vars_.end(); }
    [[nodiscard]] auto begin() { return vars_.begin(); }
    [[nodiscard]] auto end() { return vars_.end(); }
    [[nodiscard]] std::size_t size() const { return vars_.size(); }

private:
    std::vector<FieldVariable> vars_;
};

using PointFunction = std::function<double(const Point&)>;
using MaterialParam = std::variant<double, std::array<double, 3>, PointFunction>;

/// Named material parameters: scalars, 2D Voigt columns (11, 22, 12), or
/// scalar functions of position.
class Material {
public:
    Material(std::string name, std::map<std::string, MaterialParam> params);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] bool has(std::string_view key) const;
    [[nodiscard]] double scalar(std::string_view key) const;
    [[nodiscard]] std::array<double, 3> voigt(std::string_view key) const;
    /// Value of a scalar or function parameter at x.
    [[nodiscard]] double value_at(std::string_view key, const Point& x) const;

private:
    [[nodiscard]] const MaterialParam& get(std::string_view key) const;

    std::string name_;
    std::map<std::string, MaterialParam, std::less<>> params_;
};

/// Parsed `<var>.all`, `<var>.<c>` or `<var>.[c1,c2,...]`.
struct DofSpec {
    std::string variable;
    bool all = false;
    std::vector<std::size_t> components;
};

[[nodiscard]] DofSpec parse_dof_spec(std::string_view text);

using BcValue = std::variant<double, PointFunction>;

struct EssentialBC {
    std::string name;
    Region region;
    std::vector<std::pair<std::string, BcValue>> dofs;
};

/// Placement of unknown variables in the global scalar-DOF vector.
struct DofLayout {
    std::vector<std::string> variables;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> sizes;
    std::size_t total = 0;

    void append(const FieldVariable& var);
    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] std::size_t offset_of(std::string_view name) const;
    [[nodiscard]] std::size_t size_of(std::string_view name) const;
};

/// Global scalar-DOF index -> prescribed value.
using FixedDofs = std::map<std::size_t, double>;

/// Later conditions override earlier ones; overrides are reported on std::clog.
[[nodiscard]] FixedDofs resolve_ebcs(std::span<const EssentialBC> conditions, const Variables& variables,
                                     const DofLayout& layout);

/// Field-local cell indices k -> values at rule points, laid out
/// [cell][qp][component].
[[nodiscard]] std::vector<double> eval_variable_at_qp(const FieldVariable& var, std::span<const Index> cells,
                                                      const QuadratureRule& rule);

/// Values of a variable at the mesh vertices, [vertex][component]. Vertices
/// outside the field region get zeros.
[[nodiscard]] std::vector<double> vertex_values(const FieldVariable& var);

} // namespace femlet
