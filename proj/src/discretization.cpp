#include "femlet/discretization.hpp"

#include "femlet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iostream>

namespace femlet {

namespace {

// Local vertex pairs of the edges carrying P2/Q2 edge nodes.
std::vector<std::pair<std::size_t, std::size_t>> cell_edges(CellType type)
{
    if (type == CellType::triangle) {
        return {{0, 1}, {1, 2}, {2, 0}};
    }
    return {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
}

} // namespace

Field build_field_dofs(std::string name, const Region& region, int order, ValueKind kind)
{
    if (region.kind != RegionKind::cell) {
        throw ArgumentError("field '" + name + "': region '" + region.name + "' is not a cell region");
    }
    if (region.cells.empty() || !region.mesh) {
        throw EmptyRegionError("field '" + name + "': region '" + region.name + "' is empty");
    }
    const Mesh& mesh = *region.mesh;

    Field field;
    field.name_ = std::move(name);
    field.region_ = region;
    field.kind_ = kind;
    field.elem_ = make_reference_element(mesh.cell_type(), order);
    field.vertex_node_.assign(mesh.n_vertices(), Field::no_node);

    for (const Index v : region.vertices) {
        field.vertex_node_[v] = field.coords_.size();
        field.coords_.push_back(mesh.vertex(v));
        field.parents_.push_back({v});
    }

    const std::size_t npc = field.elem_.n_nodes();
    field.conn_.assign(region.cells.size() * npc, Field::no_node);
    const std::size_t nv = mesh.nodes_per_cell();
    for (std::size_t k = 0; k < region.cells.size(); ++k) {
        const auto verts = mesh.cell(region.cells[k]);
        for (std::size_t i = 0; i < nv; ++i) {
            field.conn_[k * npc + i] = field.vertex_node_[verts[i]];
        }
    }

    if (order == 2) {
        const auto edges = cell_edges(mesh.cell_type());
        std::vector<std::pair<Index, Index>> keys;
        for (const Index c : region.cells) {
            const auto verts = mesh.cell(c);
            for (const auto& [i, j] : edges) {
                keys.emplace_back(std::min(verts[i], verts[j]), std::max(verts[i], verts[j]));
            }
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        const Index first_edge = field.coords_.size();
        for (const auto& [a, b] : keys) {
            const Point& pa = mesh.vertex(a);
            const Point& pb = mesh.vertex(b);
            field.coords_.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])});
            field.parents_.push_back({a, b});
        }
        for (std::size_t k = 0; k < region.cells.size(); ++k) {
            const auto verts = mesh.cell(region.cells[k]);
            for (std::size_t e = 0; e < edges.size(); ++e) {
                const auto [i, j] = edges[e];
                const std::pair<Index, Index> key{std::min(verts[i], verts[j]), std::max(verts[i], verts[j])};
                const auto it = std::lower_bound(keys.begin(), keys.end(), key);
                field.conn_[k * npc + nv + e] = first_edge + static_cast<Index>(it - keys.begin());
            }
        }
        if (mesh.cell_type() == CellType::quad) {
            for (std::size_t k = 0; k < region.cells.size(); ++k) {
                const auto verts = mesh.cell(region.cells[k]);
                Point center{0.0, 0.0};
                for (const Index v : verts) {
                    center[0] += 0.25 * mesh.vertex(v)[0];
                    center[1] += 0.25 * mesh.vertex(v)[1];
                }
                field.conn_[k * npc + npc - 1] = field.coords_.size();
                field.coords_.push_back(center);
                field.parents_.emplace_back(verts.begin(), verts.end());
            }
        }
    }
    return field;
}

VariableRole parse_variable_role(std::string_view text)
{
    if (text == "unknown") {
        return VariableRole::unknown;
    }
    if (text == "test") {
        return VariableRole::test;
    }
    if (text == "parameter") {
        return VariableRole::parameter;
    }
    throw ParseError("unknown variable role '" + std::string(text) + "'");
}

FieldVariable::FieldVariable(std::string name, VariableRole role, std::shared_ptr<const Field> field,
                             std::size_t n_components, std::string primary_var_name)
    : name_(std::move(name)),
      role_(role),
      field_(std::move(field)),
      n_components_(n_components),
      primary_(std::move(primary_var_name))
{
    if (!field_) {
        throw ArgumentError("variable '" + name_ + "': null field");
    }
    if (n_components_ != field_->n_components()) {
        throw ArgumentError("variable '" + name_ + "': component count does not match field '"
                            + field_->name() + "'");
    }
    if (role_ == VariableRole::test && primary_.empty()) {
        throw ArgumentError("test variable '" + name_ + "' needs a primary variable name");
    }
    if (role_ == VariableRole::unknown) {
        data_ = std::vector<double>(n_dofs(), 0.0);
    }
}

const std::vector<double>& FieldVariable::data() const
{
    if (!data_) {
        throw ArgumentError("variable '" + name_ + "' has no data");
    }
    return *data_;
}

void FieldVariable::set_data(std::vector<double> values)
{
    if (role_ == VariableRole::test) {
        throw ArgumentError("test variable '" + name_ + "' cannot carry data");
    }
    if (values.size() != n_dofs()) {
        throw ArgumentError("variable '" + name_ + "': expected " + std::to_string(n_dofs()) + " values, got "
                            + std::to_string(values.size()));
    }
    data_ = std::move(values);
}

void FieldVariable::set_source(ParameterSource source)
{
    if (role_ != VariableRole::parameter) {
        throw ArgumentError("only parameter variables can be derived from another variable");
    }
    source_ = std::move(source);
}

void Variables::add(FieldVariable var)
{
    if (contains(var.name())) {
        throw ArgumentError("duplicate variable '" + var.name() + "'");
    }
    vars_.push_back(std::move(var));
}

bool Variables::contains(std::string_view name) const
{
    return std::any_of(vars_.begin(), vars_.end(), [&](const FieldVariable& v) { return v.name() == name; });
}

FieldVariable& Variables::at(std::string_view name)
{
    for (auto& v : vars_) {
        if (v.name() == name) {
            return v;
        }
    }
    throw ResolutionError("unknown variable '" + std::string(name) + "'");
}

const FieldVariable& Variables::at(std::string_view name) const
{
    return const_cast<Variables&>(*this).at(name);
}

Material::Material(std::string name, std::map<std::string, MaterialParam> params)
    : name_(std::move(name)), params_(params.begin(), params.end())
{
}

bool Material::has(std::string_view key) const
{
    return params_.find(key) != params_.end();
}

const MaterialParam& Material::get(std::string_view key) const
{
    const auto it = params_.find(key);
    if (it == params_.end()) {
        throw ResolutionError("material '" + name_ + "' has no parameter '" + std::string(key) + "'");
    }
    return it->second;
}

double Material::scalar(std::string_view key) const
{
    const auto* v = std::get_if<double>(&get(key));
    if (!v) {
        throw ArgumentError("material parameter '" + name_ + "." + std::string(key) + "' is not a scalar");
    }
    return *v;
}

std::array<double, 3> Material::voigt(std::string_view key) const
{
    const auto* v = std::get_if<std::array<double, 3>>(&get(key));
    if (!v) {
        throw ArgumentError("material parameter '" + name_ + "." + std::string(key)
                            + "' is not a 3-entry Voigt tensor");
    }
    return *v;
}

double Material::value_at(std::string_view key, const Point& x) const
{
    const auto& param = get(key);
    if (const auto* f = std::get_if<PointFunction>(&param)) {
        return (*f)(x);
    }
    return scalar(key);
}

DofSpec parse_dof_spec(std::string_view text)
{
    const auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) {
        throw ParseError("dof spec '" + std::string(text) + "': expected '<var>.all', '<var>.<c>' or '<var>.[c,...]'");
    }
    DofSpec spec;
    spec.variable = std::string(text.substr(0, dot));
    std::string_view rest = text.substr(dot + 1);
    if (rest == "all") {
        spec.all = true;
        return spec;
    }
    const bool bracketed = rest.front() == '[';
    if (bracketed) {
        if (rest.back() != ']' || rest.size() < 3) {
            throw ParseError("dof spec '" + std::string(text) + "': unterminated component list");
        }
        rest = rest.substr(1, rest.size() - 2);
    }
    while (true) {
        while (!rest.empty() && rest.front() == ' ') {
            rest.remove_prefix(1);
        }
        std::size_t c = 0;
        const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), c);
        if (ec != std::errc{}) {
            throw ParseError("dof spec '" + std::string(text) + "': expected a component index");
        }
        spec.components.push_back(c);
        rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
        while (!rest.empty() && rest.front() == ' ') {
            rest.remove_prefix(1);
        }
        if (rest.empty()) {
            break;
        }
        if (!bracketed || rest.front() != ',') {
            throw ParseError("dof spec '" + std::string(text) + "': unexpected '" + std::string(rest) + "'");
        }
        rest.remove_prefix(1);
    }
    return spec;
}

void DofLayout::append(const FieldVariable& var)
{
    if (contains(var.name())) {
        throw ArgumentError("variable '" + var.name() + "' already in the DOF layout");
    }
    variables.push_back(var.name());
    offsets.push_back(total);
    sizes.push_back(var.n_dofs());
    total += var.n_dofs();
}

bool DofLayout::contains(std::string_view name) const
{
    return std::find(variables.begin(), variables.end(), name) != variables.end();
}

std::size_t DofLayout::offset_of(std::string_view name) const
{
    const auto it = std::find(variables.begin(), variables.end(), name);
    if (it == variables.end()) {
        throw ResolutionError("variable '" + std::string(name) + "' is not an unknown of the system");
    }
    return offsets[static_cast<std::size_t>(it - variables.begin())];
}

std::size_t DofLayout::size_of(std::string_view name) const
{
    const auto it = std::find(variables.begin(), variables.end(), name);
    if (it == variables.end()) {
        throw ResolutionError("variable '" + std::string(name) + "' is not an unknown of the system");
    }
    return sizes[static_cast<std::size_t>(it - variables.begin())];
}

FixedDofs resolve_ebcs(std::span<const EssentialBC> conditions, const Variables& variables,
                       const DofLayout& layout)
{
    FixedDofs fixed;
    for (const EssentialBC& bc : conditions) {
        for (const auto& [text, value] : bc.dofs) {
            const DofSpec spec = parse_dof_spec(text);
            if (!variables.contains(spec.variable)) {
                throw ResolutionError("boundary condition '" + bc.name + "': unknown variable '" + spec.variable + "'");
            }
            const FieldVariable& var = variables.at(spec.variable);
            if (var.role() != VariableRole::unknown) {
                throw ResolutionError("boundary condition '" + bc.name + "': variable '" + spec.variable
                                      + "' is not an unknown");
            }
            std::vector<std::size_t> comps = spec.components;
            if (spec.all) {
                for (std::size_t c = 0; c < var.n_components(); ++c) {
                    comps.push_back(c);
                }
            }
            for (const std::size_t c : comps) {
                if (c >= var.n_components()) {
                    throw ArgumentError("boundary condition '" + bc.name + "': component " + std::to_string(c)
                                        + " out of range for '" + spec.variable + "'");
                }
            }
            const std::size_t offset = layout.offset_of(spec.variable);
            const Field& field = var.field();
            for (Index node = 0; node < field.n_nodes(); ++node) {
                const auto& parents = field.node_parents(node);
                const bool inside = std::all_of(parents.begin(), parents.end(),
                                                [&](Index v) { return bc.region.contains_vertex(v); });
                if (!inside) {
                    continue;
                }
                double v = 0.0;
                if (const auto* constant = std::get_if<double>(&value)) {
                    v = *constant;
                } else {
                    v = std::get<PointFunction>(value)(field.node_coords()[node]);
                }
                for (const std::size_t c : comps) {
                    const std::size_t dof = offset + node * var.n_components() + c;
                    const auto [it, inserted] = fixed.insert_or_assign(dof, v);
                    if (!inserted) {
                        std::clog << "warning: boundary condition '" << bc.name << "' overrides DOF " << dof << "\n";
                    }
                }
            }
        }
    }
    return fixed;
}

std::vector<double> eval_variable_at_qp(const FieldVariable& var, std::span<const Index> cells,
                                        const QuadratureRule& rule)
{
    const auto& data = var.data();
    const Field& field = var.field();
    if (rule.geometry != field.reference().geometry) {
        throw ArgumentError("eval_variable_at_qp: quadrature geometry does not match the field");
    }
    const Eigen::MatrixXd phi = eval_basis(field.reference(), rule.points);
    const std::size_t n_qp = rule.size();
    const std::size_t nc = var.n_components();
    std::vector<double> out(cells.size() * n_qp * nc, 0.0);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto nodes = field.cell_nodes(cells[k]);
        for (std::size_t q = 0; q < n_qp; ++q) {
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const double w = phi(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i));
                for (std::size_t c = 0; c < nc; ++c) {
                    out[(k * n_qp + q) * nc + c] += w * data[nodes[i] * nc + c];
                }
            }
        }
    }
    return out;
}

std::vector<double> vertex_values(const FieldVariable& var)
{
    const auto& data = var.data();
    const Field& field = var.field();
    const std::size_t nc = var.n_components();
    const std::size_t nv = field.mesh().n_vertices();
    std::vector<double> out(nv * nc, 0.0);
    for (Index v = 0; v < nv; ++v) {
        const Index node = field.vertex_node(v);
        if (node == Field::no_node) {
            continue;
        }
        for (std::size_t c = 0; c < nc; ++c) {
            out[v * nc + c] = data[node * nc + c];
        }
    }
    return out;
}

} // namespace femlet
