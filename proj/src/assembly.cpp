#include "femlet/assembly.hpp"

#include "femlet/error.hpp"

#include <algorithm>
#include <numeric>

namespace femlet {

TermSum operator+(TermSum lhs, const TermSum& rhs)
{
    lhs.terms.insert(lhs.terms.end(), rhs.terms.begin(), rhs.terms.end());
    return lhs;
}

TermSum operator-(TermSum operand)
{
    for (auto& t : operand.terms) {
        t.sign = -t.sign;
    }
    return operand;
}

TermSum operator-(TermSum lhs, const TermSum& rhs)
{
    return std::move(lhs) + (-rhs);
}

Equation::Equation(std::string name, TermSum terms) : name_(std::move(name)), terms_(std::move(terms.terms))
{
    if (terms_.empty()) {
        throw ArgumentError("equation '" + name_ + "' has no terms");
    }
    for (const auto& st : terms_) {
        if (st.sign != 1 && st.sign != -1) {
            throw ArgumentError("equation '" + name_ + "': term signs must be +1 or -1");
        }
        const auto vars = st.term.variables();
        if (vars.empty()) {
            throw ArgumentError("equation '" + name_ + "': term '" + st.term.name + "' has no test variable");
        }
        if (test_.empty()) {
            test_ = vars.front();
        } else if (vars.front() != test_) {
            throw ArgumentError("equation '" + name_ + "': terms use different test variables");
        }
    }
}

// ---------------------------------------------------------------------------

double CsrMatrix::at(std::size_t i, std::size_t j) const
{
    const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const
{
    if (x.size() != cols) {
        throw ArgumentError("matrix-vector product: dimension mismatch");
    }
    std::vector<double> y(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            sum += values[p] * x[col_idx[p]];
        }
        y[i] = sum;
    }
    return y;
}

Eigen::MatrixXd CsrMatrix::to_dense() const
{
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_idx[p])) = values[p];
        }
    }
    return dense;
}

CsrMatrix compress_triplets(std::span<const Triplet> triplets, std::size_t rows, std::size_t cols)
{
    // Counting sort by row keeps input order within each row.
    std::vector<std::size_t> count(rows + 1, 0);
    for (const Triplet& t : triplets) {
        if (t.row >= rows || t.col >= cols) {
            throw ArgumentError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col)
                                + ") outside a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
        }
        ++count[t.row + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    std::vector<std::size_t> order(triplets.size());
    {
        std::vector<std::size_t> next(count.begin(), count.end() - 1);
        for (std::size_t n = 0; n < triplets.size(); ++n) {
            order[next[triplets[n].row]++] = n;
        }
    }

    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto first = order.begin() + static_cast<std::ptrdiff_t>(count[i]);
        const auto last = order.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
        std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return triplets[a].col < triplets[b].col; });
        for (auto it = first; it != last; ++it) {
            const Triplet& t = triplets[*it];
            if (m.col_idx.size() > m.row_ptr[i] && m.col_idx.back() == t.col) {
                m.values.back() += t.value;
            } else {
                m.col_idx.push_back(t.col);
                m.values.push_back(t.value);
            }
        }
        m.row_ptr[i + 1] = m.values.size();
    }
    return m;
}

// ---------------------------------------------------------------------------

DofLayout make_layout(std::span<const Equation> equations, const Variables& variables)
{
    DofLayout layout;
    for (const Equation& eq : equations) {
        const FieldVariable& test = variables.at(eq.test_variable());
        if (test.role() != VariableRole::test) {
            throw ResolutionError("equation '" + eq.name() + "': '" + test.name() + "' is not a test variable");
        }
        const FieldVariable& unknown = variables.at(test.primary_var_name());
        if (unknown.role() != VariableRole::unknown) {
            throw ResolutionError("equation '" + eq.name() + "': primary variable '" + unknown.name()
                                  + "' is not an unknown");
        }
        if (unknown.field_ptr() != test.field_ptr()) {
            throw ResolutionError("equation '" + eq.name() + "': test and unknown variables live on different fields");
        }
        if (!layout.contains(unknown.name())) {
            layout.append(unknown);
        }
    }
    return layout;
}

namespace {

template <typename Map>
const auto& lookup(const Map& map, const std::string& key, const char* what)
{
    const auto it = map.find(key);
    if (it == map.end()) {
        throw ResolutionError(std::string("unknown ") + what + " '" + key + "'");
    }
    return it->second;
}

/// Field-local index of every mesh cell of `cells`; throws if a cell is
/// outside the field.
std::vector<Index> local_cells(const Field& field, std::span<const Index> cells)
{
    std::vector<Index> out;
    out.reserve(cells.size());
    const auto& fc = field.cells();
    for (const Index c : cells) {
        const auto it = std::lower_bound(fc.begin(), fc.end(), c);
        if (it == fc.end() || *it != c) {
            throw ResolutionError("field '" + field.name() + "' is not defined on cell " + std::to_string(c));
        }
        out.push_back(static_cast<Index>(it - fc.begin()));
    }
    return out;
}

/// Global scalar DOFs per cell for a variable at `offset`.
std::vector<std::size_t> cell_dofs(const FieldVariable& var, std::span<const Index> local, std::size_t offset)
{
    const Field& field = var.field();
    const std::size_t nc = var.n_components();
    std::vector<std::size_t> out;
    out.reserve(local.size() * field.nodes_per_cell() * nc);
    for (const Index k : local) {
        for (const Index node : field.cell_nodes(k)) {
            for (std::size_t c = 0; c < nc; ++c) {
                out.push_back(offset + node * nc + c);
            }
        }
    }
    return out;
}

struct EvaluatedTerm {
    ElementBatch batch;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    const FieldVariable* state = nullptr;
};

EvaluatedTerm evaluate_term(const TermSpec& term, const AssemblyContext& ctx, const DofLayout& layout)
{
    const Region& region = lookup(ctx.regions, term.region, "region");
    if (region.kind != RegionKind::cell) {
        throw ResolutionError("term '" + term.name + "': region '" + region.name + "' is not a cell region");
    }
    const int order = lookup(ctx.integrals, term.integral, "integral");
    const auto mats = term.materials();
    const auto var_names = term.variables();
    for (const auto& m : mats) {
        const Material& mat = lookup(ctx.materials, m.name, "material");
        if (!mat.has(m.param)) {
            throw ResolutionError("material '" + m.name + "' has no parameter '" + m.param + "'");
        }
    }
    auto material = [&](std::size_t i) -> const Material& { return ctx.materials.find(mats[i].name)->second; };

    const FieldVariable& test = ctx.variables.at(var_names[0]);
    if (test.role() != VariableRole::test) {
        throw ResolutionError("term '" + term.name + "': first variable '" + test.name() + "' must be a test variable");
    }
    const FieldVariable* state = var_names.size() > 1 ? &ctx.variables.at(var_names[1]) : nullptr;
    if (state && state->role() == VariableRole::test) {
        throw ResolutionError("term '" + term.name + "': '" + state->name() + "' is a test variable");
    }

    const Field& test_field = test.field();
    const Mesh& mesh = test_field.mesh();
    const QuadratureRule rule = quad_rule(mesh.cell_type(), order);
    const GeometryData geo = map_geometry(mesh, region.cells, rule);
    const auto test_local = local_cells(test_field, region.cells);
    const auto ref_grads = eval_basis_grad(test_field.reference(), rule.points);

    EvaluatedTerm out;
    out.rows = cell_dofs(test, test_local, layout.offset_of(test.primary_var_name()));

    auto require_state = [&](std::size_t n_components, bool same_field) {
        if (!state) {
            throw ResolutionError("term '" + term.name + "' needs a state variable");
        }
        if (state->n_components() != n_components) {
            throw ResolutionError("term '" + term.name + "': variable '" + state->name()
                                  + "' has the wrong number of components");
        }
        if (same_field && state->field_ptr() != test.field_ptr()) {
            throw ResolutionError("term '" + term.name + "': test and state variables must share a field");
        }
    };
    auto bind_state_columns = [&] {
        out.state = state;
        const auto local = local_cells(state->field(), region.cells);
        const std::size_t offset = layout.contains(state->name()) ? layout.offset_of(state->name()) : 0;
        out.cols = cell_dofs(*state, local, offset);
    };

    if (term.name == "dw_laplace") {
        if (test.n_components() != 1) {
            throw ResolutionError("dw_laplace needs a scalar test variable");
        }
        require_state(1, true);
        if (state->role() != VariableRole::unknown) {
            throw ResolutionError("dw_laplace: '" + state->name() + "' must be an unknown variable");
        }
        const double coef = mats.empty() ? 1.0 : material(0).scalar(mats[0].param);
        out.batch = laplace_kernel(geo, ref_grads, coef);
        bind_state_columns();
    } else if (term.name == "dw_lin_elastic_iso") {
        if (test.n_components() != 2) {
            throw ResolutionError("dw_lin_elastic_iso needs a vector test variable");
        }
        require_state(2, true);
        if (state->role() != VariableRole::unknown) {
            throw ResolutionError("dw_lin_elastic_iso: '" + state->name() + "' must be an unknown variable");
        }
        out.batch = lin_elastic_iso_kernel(geo, ref_grads, material(0).scalar(mats[0].param),
                                           material(1).scalar(mats[1].param));
        bind_state_columns();
    } else if (term.name == "dw_biot") {
        if (test.n_components() != 2) {
            throw ResolutionError("dw_biot needs a vector test variable");
        }
        require_state(1, false);
        const auto alpha = material(0).voigt(mats[0].param);
        if (state->role() == VariableRole::parameter) {
            const auto local = local_cells(state->field(), region.cells);
            const auto t_qp = eval_variable_at_qp(*state, local, rule);
            out.batch = biot_vector_kernel(geo, ref_grads, alpha, t_qp);
        } else {
            const Eigen::MatrixXd psi = eval_basis(state->field().reference(), rule.points);
            out.batch = biot_matrix_kernel(geo, ref_grads, alpha, psi);
            bind_state_columns();
        }
    } else if (term.name == "dw_volume_lvf") {
        if (test.n_components() != 1) {
            throw ResolutionError("dw_volume_lvf needs a scalar test variable");
        }
        const Material& mat = material(0);
        const std::string& key = mats[0].param;
        std::vector<double> f_qp(geo.points.size());
        for (std::size_t i = 0; i < f_qp.size(); ++i) {
            f_qp[i] = mat.value_at(key, geo.points[i]);
        }
        const Eigen::MatrixXd phi = eval_basis(test_field.reference(), rule.points);
        out.batch = source_kernel(geo, phi, f_qp);
    } else {
        throw ResolutionError("term '" + term.name + "' has no kernel");
    }
    return out;
}

} // namespace

AssembledSystem assemble_system(std::span<const Equation> equations, const AssemblyContext& ctx,
                                const DofLayout& layout)
{
    const std::size_t n = layout.total;
    std::vector<Triplet> triplets;
    std::vector<double> rhs(n, 0.0);

    for (const Equation& eq : equations) {
        for (const SignedTerm& st : eq.terms()) {
            const EvaluatedTerm ev = evaluate_term(st.term, ctx, layout);
            const ElementBatch& b = ev.batch;
            const double sign = st.sign;
            if (!b.is_matrix()) {
                // Residual K u - b: a state-independent term's contribution moves to b.
                for (std::size_t k = 0; k < b.n_cells; ++k) {
                    for (std::size_t i = 0; i < b.n_rows; ++i) {
                        rhs[ev.rows[k * b.n_rows + i]] -= sign * b(k, i);
                    }
                }
                continue;
            }
            if (layout.contains(ev.state->name())) {
                triplets.reserve(triplets.size() + b.values.size());
                for (std::size_t k = 0; k < b.n_cells; ++k) {
                    for (std::size_t i = 0; i < b.n_rows; ++i) {
                        const std::size_t row = ev.rows[k * b.n_rows + i];
                        for (std::size_t j = 0; j < b.n_cols; ++j) {
                            triplets.push_back({row, ev.cols[k * b.n_cols + j], sign * b(k, i, j)});
                        }
                    }
                }
            } else {
                const auto& known = ev.state->data();
                for (std::size_t k = 0; k < b.n_cells; ++k) {
                    for (std::size_t i = 0; i < b.n_rows; ++i) {
                        double sum = 0.0;
                        for (std::size_t j = 0; j < b.n_cols; ++j) {
                            sum += b(k, i, j) * known[ev.cols[k * b.n_cols + j]];
                        }
                        rhs[ev.rows[k * b.n_rows + i]] -= sign * sum;
                    }
                }
            }
        }
    }
    return {compress_triplets(triplets, n, n), std::move(rhs)};
}

CsrMatrix assemble_tangent(std::span<const Equation> equations, const AssemblyContext& ctx, const DofLayout& layout)
{
    return assemble_system(equations, ctx, layout).matrix;
}

std::vector<double> assemble_residual(std::span<const Equation> equations, const AssemblyContext& ctx,
                                      const DofLayout& layout, std::span<const double> state)
{
    if (state.size() != layout.total) {
        throw ArgumentError("assemble_residual: state length does not match the DOF layout");
    }
    const AssembledSystem sys = assemble_system(equations, ctx, layout);
    std::vector<double> r = sys.matrix.multiply(state);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= sys.rhs[i];
    }
    return r;
}

// ---------------------------------------------------------------------------

std::vector<double> ReducedSystem::recover(std::span<const double> free_values) const
{
    if (free_values.size() != free_dofs.size()) {
        throw ArgumentError("recover: expected " + std::to_string(free_dofs.size()) + " free values");
    }
    std::vector<double> full(n_total, 0.0);
    for (std::size_t i = 0; i < free_dofs.size(); ++i) {
        full[free_dofs[i]] = free_values[i];
    }
    for (const auto& [dof, value] : fixed) {
        full[dof] = value;
    }
    return full;
}

std::vector<double> ReducedSystem::restrict(std::span<const double> full) const
{
    std::vector<double> out(free_dofs.size());
    for (std::size_t i = 0; i < free_dofs.size(); ++i) {
        out[i] = full[free_dofs[i]];
    }
    return out;
}

ReducedSystem reduce_system(const CsrMatrix& matrix, std::span<const double> rhs, const FixedDofs& fixed)
{
    const std::size_t n = matrix.rows;
    if (matrix.cols != n || rhs.size() != n) {
        throw ArgumentError("reduce_system: matrix must be square and match the right-hand side");
    }
    if (!fixed.empty() && fixed.rbegin()->first >= n) {
        throw ArgumentError("reduce_system: fixed DOF index out of range");
    }
    ReducedSystem red;
    red.fixed = fixed;
    red.n_total = n;

    constexpr std::size_t constrained = static_cast<std::size_t>(-1);
    std::vector<std::size_t> position(n, constrained);
    for (std::size_t i = 0; i < n; ++i) {
        if (!fixed.contains(i)) {
            position[i] = red.free_dofs.size();
            red.free_dofs.push_back(i);
        }
    }
    if (red.free_dofs.empty()) {
        throw ArgumentError("reduce_system: every DOF is fixed, nothing to solve");
    }

    std::vector<double> prescribed(n, 0.0);
    for (const auto& [dof, value] : fixed) {
        prescribed[dof] = value;
    }

    const std::size_t nf = red.free_dofs.size();
    CsrMatrix& k = red.matrix;
    k.rows = k.cols = nf;
    k.row_ptr.assign(nf + 1, 0);
    red.rhs.resize(nf);
    for (std::size_t r = 0; r < nf; ++r) {
        const std::size_t i = red.free_dofs[r];
        double b = rhs[i];
        for (std::size_t p = matrix.row_ptr[i]; p < matrix.row_ptr[i + 1]; ++p) {
            const std::size_t j = matrix.col_idx[p];
            if (position[j] == constrained) {
                b -= matrix.values[p] * prescribed[j];
            } else {
                k.col_idx.push_back(position[j]);
                k.values.push_back(matrix.values[p]);
            }
        }
        red.rhs[r] = b;
        k.row_ptr[r + 1] = k.values.size();
    }
    return red;
}

} // namespace femlet
