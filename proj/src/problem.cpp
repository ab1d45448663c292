#include "femlet/problem.hpp"

#include "femlet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace femlet {

// ---------------------------------------------------------------------------
// equation DSL

namespace {

class DslParser {
public:
    explicit DslParser(std::string_view text) : text_(text) {}

    EquationSpecDsl parse()
    {
        EquationSpecDsl spec;
        int sign = 1;
        if (accept('-')) {
            sign = -1;
        } else {
            accept('+');
        }
        spec.terms.push_back({sign, call()});
        while (true) {
            if (accept('+')) {
                spec.terms.push_back({1, call()});
            } else if (accept('-')) {
                spec.terms.push_back({-1, call()});
            } else {
                break;
            }
        }
        if (!accept('=')) {
            fail("missing '= 0'");
        }
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (text_.substr(start, pos_ - start) != "0") {
            fail("right-hand side must be 0");
        }
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing input");
        }
        return spec;
    }

private:
    TermSpec call()
    {
        TermSpec term;
        term.name = ident("term name");
        expect('.', "malformed dotted path, expected '.integral'");
        term.integral = ident("integral name");
        expect('.', "malformed dotted path, expected '.region'");
        term.region = ident("region name");
        expect('(', "expected '('");
        skip_ws();
        if (peek() == ')') {
            fail("empty argument list");
        }
        do {
            TermArg arg;
            arg.name = ident("argument");
            if (accept('.')) {
                arg.param = ident("material parameter");
            }
            term.args.push_back(std::move(arg));
        } while (accept(','));
        expect(')', "expected ')'");
        check_term_signature(term);
        return term;
    }

    std::string ident(const char* what)
    {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
            while (pos_ < text_.size()
                   && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
        }
        if (pos_ == start) {
            fail(std::string("expected ") + what);
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    bool accept(char c)
    {
        skip_ws();
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* message)
    {
        if (!accept(c)) {
            fail(message);
        }
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("equation '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

EquationSpecDsl parse_equation_dsl(std::string_view text)
{
    return DslParser(text).parse();
}

std::string format_equation_dsl(const EquationSpecDsl& spec)
{
    std::string out;
    for (std::size_t i = 0; i < spec.terms.size(); ++i) {
        const SignedTerm& st = spec.terms[i];
        if (i == 0) {
            out += st.sign < 0 ? "-" : "";
        } else {
            out += st.sign < 0 ? " - " : " + ";
        }
        out += st.term.name + "." + st.term.integral + "." + st.term.region + "(";
        for (std::size_t a = 0; a < st.term.args.size(); ++a) {
            const TermArg& arg = st.term.args[a];
            out += (a ? ", " : "") + arg.name + (arg.is_material() ? "." + arg.param : "");
        }
        out += ")";
    }
    return out + " = 0";
}

LinearSolver make_linear_solver(const LinearSolverConfig& config)
{
    if (config.kind == LinearSolverConfig::Kind::direct) {
        return solve_direct;
    }
    return [config](const CsrMatrix& a, std::span<const double> b) {
        CgResult res = solve_cg(a, b, config.tol, config.max_iter);
        if (!res.converged) {
            throw SolverError("conjugate gradients did not converge in " + std::to_string(config.max_iter)
                              + " iterations");
        }
        return std::move(res.x);
    };
}

// ---------------------------------------------------------------------------
// ProblemDefinition

ProblemDefinition::ProblemDefinition(std::string name, std::shared_ptr<const Mesh> mesh)
    : name_(std::move(name)),
      mesh_(std::move(mesh)),
      ls_(std::make_shared<LinearSolverConfig>()),
      nls_(std::make_shared<NewtonParams>())
{
    if (!mesh_) {
        throw ArgumentError("problem '" + name_ + "': null mesh");
    }
}

void ProblemDefinition::add_region(Region region)
{
    if (region.mesh != mesh_) {
        throw ArgumentError("region '" + region.name + "' is not defined on the problem mesh");
    }
    if (regions_.contains(region.name)) {
        throw ArgumentError("duplicate region '" + region.name + "'");
    }
    region_order_.push_back(region.name);
    const std::string key = region.name;
    regions_.emplace(key, std::move(region));
}

const Region& ProblemDefinition::region(std::string_view name) const
{
    const auto it = regions_.find(name);
    if (it == regions_.end()) {
        throw ResolutionError("unknown region '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<Region> ProblemDefinition::regions() const
{
    std::vector<Region> out;
    for (const auto& name : region_order_) {
        out.push_back(regions_.find(name)->second);
    }
    return out;
}

void ProblemDefinition::add_field(std::shared_ptr<const Field> field)
{
    if (!field) {
        throw ArgumentError("null field");
    }
    if (fields_.contains(field->name())) {
        throw ArgumentError("duplicate field '" + field->name() + "'");
    }
    const std::string key = field->name();
    fields_.emplace(key, std::move(field));
}

void ProblemDefinition::remove_field(std::string_view name)
{
    const auto it = fields_.find(name);
    if (it == fields_.end()) {
        throw ResolutionError("unknown field '" + std::string(name) + "'");
    }
    fields_.erase(it);
}

std::shared_ptr<const Field> ProblemDefinition::field(std::string_view name) const
{
    const auto it = fields_.find(name);
    if (it == fields_.end()) {
        throw ResolutionError("unknown field '" + std::string(name) + "'");
    }
    return it->second;
}

void ProblemDefinition::add_variable(FieldVariable var)
{
    variables_.add(std::move(var));
}

void ProblemDefinition::add_material(Material material)
{
    if (materials_.contains(material.name())) {
        throw ArgumentError("duplicate material '" + material.name() + "'");
    }
    const std::string key = material.name();
    materials_.emplace(key, std::move(material));
}

void ProblemDefinition::add_integral(std::string name, int order)
{
    static_cast<void>(quad_rule(mesh_->cell_type(), order));
    if (integrals_.contains(name)) {
        throw ArgumentError("duplicate integral '" + name + "'");
    }
    integrals_.emplace(std::move(name), order);
}

void ProblemDefinition::set_solvers(std::shared_ptr<const LinearSolverConfig> ls,
                                    std::shared_ptr<const NewtonParams> nls)
{
    if (!ls || !nls) {
        throw ArgumentError("problem '" + name_ + "': both a linear and a nonlinear solver are required");
    }
    nls->validate();
    ls_ = std::move(ls);
    nls_ = std::move(nls);
}

AssemblyContext ProblemDefinition::context() const
{
    return {variables_, materials_, integrals_, regions_};
}

void ProblemDefinition::validate_equation(const Equation& eq) const
{
    for (const SignedTerm& st : eq.terms()) {
        const TermSpec& t = st.term;
        const std::string where = "equation '" + eq.name() + "', term '" + t.name + "': ";
        if (!regions_.contains(t.region)) {
            throw ResolutionError(where + "unknown region '" + t.region + "'");
        }
        if (!integrals_.contains(t.integral)) {
            throw ResolutionError(where + "unknown integral '" + t.integral + "'");
        }
        for (const TermArg& m : t.materials()) {
            const auto it = materials_.find(m.name);
            if (it == materials_.end()) {
                throw ResolutionError(where + "unknown material '" + m.name + "'");
            }
            if (!it->second.has(m.param)) {
                throw ResolutionError(where + "material '" + m.name + "' has no parameter '" + m.param + "'");
            }
        }
        for (const std::string& v : t.variables()) {
            if (!variables_.contains(v)) {
                throw ResolutionError(where + "unknown variable '" + v + "'");
            }
            const FieldVariable& var = variables_.at(v);
            const auto it = fields_.find(var.field().name());
            if (it == fields_.end() || it->second != var.field_ptr()) {
                throw ResolutionError(where + "variable '" + v + "' uses field '" + var.field().name()
                                      + "', which is not part of the problem");
            }
            if (var.role() == VariableRole::parameter && var.source() && !variables_.contains(var.source()->variable)) {
                throw ResolutionError(where + "parameter '" + v + "' derives from unknown variable '"
                                      + var.source()->variable + "'");
            }
        }
    }
}

void ProblemDefinition::set_equations(std::vector<Equation> equations,
                                      std::map<std::string, std::vector<std::string>> depends_on)
{
    std::set<std::string> names;
    for (const Equation& eq : equations) {
        if (!names.insert(eq.name()).second) {
            throw ArgumentError("duplicate equation '" + eq.name() + "'");
        }
        validate_equation(eq);
    }
    for (const auto& [eq, deps] : depends_on) {
        if (!names.contains(eq)) {
            throw ResolutionError("depends_on refers to unknown equation '" + eq + "'");
        }
        for (const auto& d : deps) {
            if (!names.contains(d)) {
                throw ResolutionError("equation '" + eq + "' depends on unknown equation '" + d + "'");
            }
        }
    }
    DofLayout layout = make_layout(equations, variables_);
    equations_ = std::move(equations);
    depends_on_ = std::move(depends_on);
    layout_ = std::move(layout);
    fixed_ = resolve_ebcs(ebcs_, variables_, layout_);
}

void ProblemDefinition::set_equations_instance(std::vector<Equation> equations, bool keep_solvers)
{
    ebcs_.clear();
    fixed_.clear();
    set_equations(std::move(equations));
    if (!keep_solvers) {
        ls_ = std::make_shared<LinearSolverConfig>();
        nls_ = std::make_shared<NewtonParams>();
    }
}

void ProblemDefinition::time_update(std::vector<EssentialBC> ebcs)
{
    for (const EssentialBC& bc : ebcs) {
        if (bc.region.mesh != mesh_) {
            throw ResolutionError("boundary condition '" + bc.name + "': region '" + bc.region.name
                                  + "' is not on the problem mesh");
        }
    }
    FixedDofs fixed = resolve_ebcs(ebcs, variables_, layout_);
    ebcs_ = std::move(ebcs);
    fixed_ = std::move(fixed);
}

AssembledSystem ProblemDefinition::assemble() const
{
    return assemble_system(equations_, context(), layout_);
}

ProblemSolution ProblemDefinition::solve()
{
    if (equations_.empty()) {
        throw ArgumentError("problem '" + name_ + "': no equations to solve");
    }
    const auto blocks = order_equation_blocks(equations_, variables_, depends_on_);
    const LinearSolver linear = make_linear_solver(*ls_);
    ProblemSolution solution;
    solution.layout = layout_;

    for (const auto& block : blocks) {
        for (auto& var : variables_) {
            if (var.role() == VariableRole::parameter && var.source()) {
                auto values = variables_.at(var.source()->variable).data();
                for (double& v : values) {
                    v += var.source()->offset;
                }
                var.set_data(std::move(values));
            }
        }

        std::vector<Equation> eqs;
        BlockReport report;
        for (const std::size_t i : block) {
            eqs.push_back(equations_[i]);
            report.equations.push_back(equations_[i].name());
        }
        const DofLayout layout = make_layout(eqs, variables_);
        std::vector<EssentialBC> active;
        for (const EssentialBC& bc : ebcs_) {
            EssentialBC sub{bc.name, bc.region, {}};
            for (const auto& entry : bc.dofs) {
                if (layout.contains(parse_dof_spec(entry.first).variable)) {
                    sub.dofs.push_back(entry);
                }
            }
            if (!sub.dofs.empty()) {
                active.push_back(std::move(sub));
            }
        }
        const FixedDofs fixed = resolve_ebcs(active, variables_, layout);
        StationaryResult res = stationary_solve(eqs, context(), layout, fixed, *nls_, linear);
        if (!res.status.converged) {
            throw SolverError("block [" + report.equations.front() + "]: nonlinear solver did not converge (residual "
                              + std::to_string(res.status.final_residual) + " after "
                              + std::to_string(res.status.iterations) + " iterations)");
        }
        for (std::size_t v = 0; v < layout.variables.size(); ++v) {
            const auto first = res.state.begin() + static_cast<std::ptrdiff_t>(layout.offsets[v]);
            variables_.at(layout.variables[v]).set_data({first, first + static_cast<std::ptrdiff_t>(layout.sizes[v])});
        }
        report.status = std::move(res.status);
        solution.blocks.push_back(std::move(report));
    }

    solution.state.resize(layout_.total);
    for (std::size_t v = 0; v < layout_.variables.size(); ++v) {
        const FieldVariable& var = variables_.at(layout_.variables[v]);
        std::copy(var.data().begin(), var.data().end(),
                  solution.state.begin() + static_cast<std::ptrdiff_t>(layout_.offsets[v]));
        solution.outputs.push_back(make_output_field(var));
    }
    return solution;
}

// ---------------------------------------------------------------------------
// description documents

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what)
{
    throw ParseError("description: " + path + ": " + what);
}

const Json& require(const Json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object() || !obj.contains(key)) {
        schema_error(path, "missing required key '" + key + "'");
    }
    return obj.at(key);
}

void allow_keys(const Json& obj, std::initializer_list<std::string_view> keys, const std::string& path)
{
    if (!obj.is_object()) {
        schema_error(path, "expected an object");
    }
    for (const auto& [k, v] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            schema_error(path, "unexpected key '" + k + "'");
        }
    }
}

std::string as_string(const Json& v, const std::string& path)
{
    if (!v.is_string()) {
        schema_error(path, "expected a string");
    }
    return v.get<std::string>();
}

double as_number(const Json& v, const std::string& path)
{
    if (!v.is_number()) {
        schema_error(path, "expected a number");
    }
    return v.get<double>();
}

long long as_integer(const Json& v, const std::string& path)
{
    if (!v.is_number_integer()) {
        schema_error(path, "expected an integer");
    }
    return v.get<long long>();
}

template <std::size_t N>
std::array<double, N> as_numbers(const Json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != N) {
        schema_error(path, "expected a list of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = as_number(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
}

const Json& section(const Json& doc, const std::string& key, bool required)
{
    static const Json empty = Json::object();
    if (!doc.contains(key)) {
        if (required) {
            schema_error(key, "missing required section");
        }
        return empty;
    }
    const Json& s = doc.at(key);
    if (!s.is_object()) {
        schema_error(key, "expected an object");
    }
    return s;
}

std::shared_ptr<const Mesh> load_mesh(const Json& doc)
{
    const bool has_file = doc.contains("filename_mesh");
    const bool has_gen = doc.contains("gen_block");
    if (has_file == has_gen) {
        schema_error("filename_mesh", "exactly one of 'filename_mesh' and 'gen_block' is required");
    }
    if (has_file) {
        return std::make_shared<const Mesh>(read_mesh_file(as_string(doc.at("filename_mesh"), "filename_mesh")));
    }
    const Json& g = doc.at("gen_block");
    allow_keys(g, {"lo", "hi", "n", "cell_type"}, "gen_block");
    const auto lo = as_numbers<2>(require(g, "lo", "gen_block"), "gen_block.lo");
    const auto hi = as_numbers<2>(require(g, "hi", "gen_block"), "gen_block.hi");
    const Json& n = require(g, "n", "gen_block");
    if (!n.is_array() || n.size() != 2) {
        schema_error("gen_block.n", "expected two vertex counts");
    }
    const long long nx = as_integer(n[0], "gen_block.n[0]");
    const long long ny = as_integer(n[1], "gen_block.n[1]");
    if (nx < 0 || ny < 0) {
        schema_error("gen_block.n", "vertex counts must be non-negative");
    }
    CellType type = CellType::triangle;
    if (g.contains("cell_type")) {
        const std::string t = as_string(g.at("cell_type"), "gen_block.cell_type");
        if (t == "quad") {
            type = CellType::quad;
        } else if (t != "triangle") {
            schema_error("gen_block.cell_type", "expected 'triangle' or 'quad'");
        }
    }
    return std::make_shared<const Mesh>(
        gen_block_mesh({lo[0], lo[1]}, {hi[0], hi[1]},
                       {static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)}, type));
}

} // namespace

ProblemDefinition build_problem_from_description(std::string_view text)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("description: invalid JSON: ") + e.what());
    }
    allow_keys(doc,
               {"name", "filename_mesh", "gen_block", "materials", "regions", "fields", "variables", "ebcs",
                "integrals", "equations", "solvers", "options"},
               "<document>");

    const std::string name = doc.contains("name") ? as_string(doc.at("name"), "name") : "problem";
    ProblemDefinition pb(name, load_mesh(doc));

    for (const auto& [key, m] : section(doc, "materials", false).items()) {
        const std::string path = "materials." + key;
        if (!m.is_object() || m.empty()) {
            schema_error(path, "expected a non-empty object of parameters");
        }
        std::map<std::string, MaterialParam> params;
        for (const auto& [pname, pv] : m.items()) {
            if (pv.is_array()) {
                params.emplace(pname, as_numbers<3>(pv, path + "." + pname));
            } else {
                params.emplace(pname, as_number(pv, path + "." + pname));
            }
        }
        pb.add_material(Material(key, std::move(params)));
    }

    for (const auto& [key, r] : section(doc, "regions", true).items()) {
        const std::string path = "regions." + key;
        std::string select;
        RegionKind kind = RegionKind::cell;
        if (r.is_string()) {
            select = r.get<std::string>();
        } else {
            allow_keys(r, {"select", "kind"}, path);
            select = as_string(require(r, "select", path), path + ".select");
            if (r.contains("kind")) {
                kind = parse_region_kind(as_string(r.at("kind"), path + ".kind"));
            }
        }
        pb.add_region(select_region(pb.mesh_ptr(), key, select, kind));
    }

    for (const auto& [key, f] : section(doc, "fields", true).items()) {
        const std::string path = "fields." + key;
        allow_keys(f, {"dtype", "shape", "region", "order"}, path);
        if (f.contains("dtype") && as_string(f.at("dtype"), path + ".dtype") != "real") {
            schema_error(path + ".dtype", "only 'real' is supported");
        }
        const std::string shape = as_string(require(f, "shape", path), path + ".shape");
        if (shape != "scalar" && shape != "vector") {
            schema_error(path + ".shape", "expected 'scalar' or 'vector'");
        }
        const long long order = as_integer(require(f, "order", path), path + ".order");
        if (order != 1 && order != 2) {
            schema_error(path + ".order", "expected 1 or 2");
        }
        const Region& region = pb.region(as_string(require(f, "region", path), path + ".region"));
        pb.add_field(std::make_shared<const Field>(build_field_dofs(
            key, region, static_cast<int>(order), shape == "scalar" ? ValueKind::scalar : ValueKind::vector)));
    }

    for (const auto& [key, v] : section(doc, "variables", true).items()) {
        const std::string path = "variables." + key;
        allow_keys(v, {"role", "field", "primary", "history", "source", "offset"}, path);
        const VariableRole role = parse_variable_role(as_string(require(v, "role", path), path + ".role"));
        const auto field = pb.field(as_string(require(v, "field", path), path + ".field"));
        std::string primary;
        if (v.contains("primary")) {
            primary = as_string(v.at("primary"), path + ".primary");
        }
        if (role == VariableRole::test && primary.empty()) {
            schema_error(path, "test variables need 'primary'");
        }
        FieldVariable var(key, role, field, field->n_components(), primary);
        if (v.contains("source")) {
            const double offset = v.contains("offset") ? as_number(v.at("offset"), path + ".offset") : 0.0;
            var.set_source({as_string(v.at("source"), path + ".source"), offset});
        } else if (v.contains("offset")) {
            schema_error(path + ".offset", "'offset' requires 'source'");
        }
        pb.add_variable(std::move(var));
    }
    for (const FieldVariable& var : pb.variables()) {
        if (var.role() == VariableRole::test) {
            const std::string path = "variables." + var.name() + ".primary";
            if (!pb.variables().contains(var.primary_var_name())) {
                throw ResolutionError("description: " + path + ": unknown variable '" + var.primary_var_name() + "'");
            }
            const FieldVariable& primary = pb.variables().at(var.primary_var_name());
            if (primary.role() != VariableRole::unknown || primary.field_ptr() != var.field_ptr()) {
                throw ResolutionError("description: " + path + ": '" + primary.name()
                                      + "' must be an unknown on the same field");
            }
        }
        if (var.source()) {
            const std::string path = "variables." + var.name() + ".source";
            if (!pb.variables().contains(var.source()->variable)) {
                throw ResolutionError("description: " + path + ": unknown variable '" + var.source()->variable + "'");
            }
            const FieldVariable& src = pb.variables().at(var.source()->variable);
            if (src.role() != VariableRole::unknown || src.field_ptr() != var.field_ptr()) {
                throw ResolutionError("description: " + path + ": '" + src.name()
                                      + "' must be an unknown on the same field");
            }
        }
    }

    for (const auto& [key, i] : section(doc, "integrals", true).items()) {
        const std::string path = "integrals." + key;
        allow_keys(i, {"order"}, path);
        const long long order = as_integer(require(i, "order", path), path + ".order");
        if (order < 1 || order > 5) {
            schema_error(path + ".order", "expected an integer in 1..5");
        }
        pb.add_integral(key, static_cast<int>(order));
    }

    std::shared_ptr<const LinearSolverConfig> ls;
    std::shared_ptr<const NewtonParams> nls;
    const Json& options = section(doc, "options", true);
    allow_keys(options, {"nls", "ls", "output"}, "options");
    if (!options.contains("nls")) {
        schema_error("options.nls", "a nonlinear solver selection is required");
    }
    if (!options.contains("ls")) {
        schema_error("options.ls", "a linear solver selection is required");
    }
    const std::string nls_name = as_string(options.at("nls"), "options.nls");
    const std::string ls_name = as_string(options.at("ls"), "options.ls");
    const Json& solvers = section(doc, "solvers", true);
    for (const auto& [key, s] : solvers.items()) {
        const std::string path = "solvers." + key;
        const std::string kind = as_string(require(s, "kind", path), path + ".kind");
        if (kind == "nls.newton") {
            allow_keys(s, {"kind", "i_max", "eps_a", "eps_r", "ls_red", "ls_max"}, path);
            NewtonParams p;
            if (s.contains("i_max")) {
                const long long v = as_integer(s.at("i_max"), path + ".i_max");
                if (v < 1) {
                    schema_error(path + ".i_max", "must be at least 1");
                }
                p.i_max = static_cast<std::size_t>(v);
            }
            if (s.contains("eps_a")) {
                p.eps_a = as_number(s.at("eps_a"), path + ".eps_a");
            }
            if (s.contains("eps_r")) {
                p.eps_r = as_number(s.at("eps_r"), path + ".eps_r");
            }
            if (s.contains("ls_red")) {
                p.ls_red = as_number(s.at("ls_red"), path + ".ls_red");
            }
            if (s.contains("ls_max")) {
                const long long v = as_integer(s.at("ls_max"), path + ".ls_max");
                if (v < 0) {
                    schema_error(path + ".ls_max", "must be non-negative");
                }
                p.ls_max = static_cast<std::size_t>(v);
            }
            try {
                p.validate();
            } catch (const ArgumentError& e) {
                schema_error(path, e.what());
            }
            if (key == nls_name) {
                nls = std::make_shared<const NewtonParams>(p);
            }
        } else if (kind == "ls.direct" || kind == "ls.scipy_direct") {
            allow_keys(s, {"kind"}, path);
            if (key == ls_name) {
                ls = std::make_shared<const LinearSolverConfig>();
            }
        } else if (kind == "ls.cg") {
            allow_keys(s, {"kind", "tol", "max_iter"}, path);
            LinearSolverConfig c;
            c.kind = LinearSolverConfig::Kind::cg;
            if (s.contains("tol")) {
                c.tol = as_number(s.at("tol"), path + ".tol");
            }
            if (s.contains("max_iter")) {
                const long long v = as_integer(s.at("max_iter"), path + ".max_iter");
                if (v < 1) {
                    schema_error(path + ".max_iter", "must be at least 1");
                }
                c.max_iter = static_cast<std::size_t>(v);
            }
            if (key == ls_name) {
                ls = std::make_shared<const LinearSolverConfig>(c);
            }
        } else {
            schema_error(path + ".kind", "unknown solver kind '" + kind + "'");
        }
        if ((key == nls_name && kind != "nls.newton") || (key == ls_name && kind == "nls.newton")) {
            schema_error(path, "solver kind does not match its selection in options");
        }
    }
    if (!nls) {
        throw ResolutionError("description: options.nls: unknown solver '" + nls_name + "'");
    }
    if (!ls) {
        throw ResolutionError("description: options.ls: unknown solver '" + ls_name + "'");
    }
    pb.set_solvers(ls, nls);
    if (options.contains("output")) {
        pb.output_path = as_string(options.at("output"), "options.output");
    }

    std::vector<Equation> equations;
    std::map<std::string, std::vector<std::string>> depends_on;
    for (const auto& [key, e] : section(doc, "equations", true).items()) {
        const std::string path = "equations." + key;
        std::string expr;
        if (e.is_string()) {
            expr = e.get<std::string>();
        } else {
            allow_keys(e, {"expr", "depends_on"}, path);
            expr = as_string(require(e, "expr", path), path + ".expr");
            if (e.contains("depends_on")) {
                const Json& deps = e.at("depends_on");
                if (!deps.is_array()) {
                    schema_error(path + ".depends_on", "expected a list of equation names");
                }
                for (std::size_t d = 0; d < deps.size(); ++d) {
                    depends_on[key].push_back(as_string(deps[d], path + ".depends_on[" + std::to_string(d) + "]"));
                }
            }
        }
        EquationSpecDsl spec;
        try {
            spec = parse_equation_dsl(expr);
        } catch (const ParseError& err) {
            schema_error(path, err.what());
        }
        TermSum sum;
        sum.terms = std::move(spec.terms);
        equations.emplace_back(key, std::move(sum));
    }
    if (equations.empty()) {
        schema_error("equations", "at least one equation is required");
    }
    pb.set_equations(std::move(equations), std::move(depends_on));

    std::vector<EssentialBC> ebcs;
    for (const auto& [key, b] : section(doc, "ebcs", false).items()) {
        const std::string path = "ebcs." + key;
        allow_keys(b, {"region", "dofs"}, path);
        EssentialBC bc{key, pb.region(as_string(require(b, "region", path), path + ".region")), {}};
        const Json& dofs = require(b, "dofs", path);
        if (!dofs.is_object() || dofs.empty()) {
            schema_error(path + ".dofs", "expected a non-empty object of dof-spec: value");
        }
        for (const auto& [spec, value] : dofs.items()) {
            bc.dofs.emplace_back(spec, as_number(value, path + ".dofs." + spec));
        }
        ebcs.push_back(std::move(bc));
    }
    pb.time_update(std::move(ebcs));
    return pb;
}

ProblemDefinition load_problem_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open problem description '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return build_problem_from_description(buffer.str());
}

} // namespace femlet
