#include "femlet/terms.hpp"

#include "femlet/error.hpp"

#include <array>
#include <cctype>
#include <cmath>

namespace femlet {

namespace {

constexpr std::array<TermSignature, 4> registry = {{
    {"dw_laplace", 0, 1, 2},
    {"dw_lin_elastic_iso", 2, 2, 2},
    {"dw_biot", 1, 1, 2},
    {"dw_volume_lvf", 1, 1, 1},
}};

bool is_ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class CallParser {
public:
    explicit CallParser(std::string_view text) : text_(text) {}

    std::string ident()
    {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) {
            fail("expected an identifier");
        }
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    bool at_end()
    {
        skip_ws();
        return pos_ == text_.size();
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("term '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_));
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

void check_term_signature(const TermSpec& spec)
{
    const TermSignature& sig = lookup_term(spec.name);
    std::size_t n_mat = 0;
    std::size_t n_var = 0;
    for (const TermArg& arg : spec.args) {
        if (arg.is_material()) {
            if (n_var > 0) {
                throw ParseError("term '" + spec.name + "': material arguments must precede variables");
            }
            ++n_mat;
        } else {
            ++n_var;
        }
    }
    if (n_mat < sig.min_materials || n_mat > sig.max_materials || n_var != sig.n_variables) {
        throw ParseError("term '" + spec.name + "': argument count does not match its signature");
    }
}

namespace {

/// Physical gradients at (cell k, qp q), n_nodes x 2.
GradientTable physical_grads(const GeometryData& geo, std::span<const GradientTable> ref_grads, std::size_t k,
                             std::size_t q)
{
    return ref_grads[q] * geo.inverse_jacobian[geo.at(k, q)];
}

void check_rule_size(const GeometryData& geo, std::size_t n_tables)
{
    if (n_tables != geo.n_qp) {
        throw ArgumentError("kernel: basis tables do not match the quadrature point count");
    }
}

} // namespace

std::vector<TermArg> TermSpec::materials() const
{
    std::vector<TermArg> out;
    for (const auto& a : args) {
        if (a.is_material()) {
            out.push_back(a);
        }
    }
    return out;
}

std::vector<std::string> TermSpec::variables() const
{
    std::vector<std::string> out;
    for (const auto& a : args) {
        if (!a.is_material()) {
            out.push_back(a.name);
        }
    }
    return out;
}

const TermSignature& lookup_term(std::string_view name)
{
    for (const auto& sig : registry) {
        if (sig.name == name) {
            return sig;
        }
    }
    throw ParseError("unknown term '" + std::string(name) + "'");
}

std::span<const TermSignature> registered_terms()
{
    return registry;
}

TermSpec parse_term_spec(std::string_view text)
{
    CallParser parser(text);
    TermSpec spec;
    spec.name = parser.ident();
    parser.expect('(');
    do {
        TermArg arg;
        arg.name = parser.ident();
        if (parser.accept('.')) {
            arg.param = parser.ident();
        }
        spec.args.push_back(std::move(arg));
    } while (parser.accept(','));
    parser.expect(')');
    if (!parser.at_end()) {
        parser.fail("trailing input");
    }
    check_term_signature(spec);
    return spec;
}

TermSpec make_term(std::string_view text, std::string integral, std::string region)
{
    TermSpec spec = parse_term_spec(text);
    spec.integral = std::move(integral);
    spec.region = std::move(region);
    return spec;
}

Eigen::Matrix3d isotropic_stiffness(double lam, double mu)
{
    Eigen::Matrix3d d;
    d << lam + 2.0 * mu, lam, 0.0, //
        lam, lam + 2.0 * mu, 0.0,  //
        0.0, 0.0, mu;
    return d;
}

ElementBatch laplace_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads, double coef)
{
    check_rule_size(geo, ref_grads.size());
    const auto n = static_cast<std::size_t>(ref_grads.empty() ? 0 : ref_grads[0].rows());
    ElementBatch out{geo.n_cells(), n, n, std::vector<double>(geo.n_cells() * n * n, 0.0)};
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> ke(
            out.values.data() + k * n * n, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const GradientTable g = physical_grads(geo, ref_grads, k, q);
            ke.noalias() += (coef * geo.weights[q] * geo.det[geo.at(k, q)]) * (g * g.transpose());
        }
    }
    return out;
}

ElementBatch lin_elastic_iso_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads, double lam,
                                    double mu)
{
    if (!std::isfinite(lam) || !std::isfinite(mu)) {
        throw ArgumentError("lin_elastic_iso: Lame parameters must be finite");
    }
    check_rule_size(geo, ref_grads.size());
    const Eigen::Matrix3d d = isotropic_stiffness(lam, mu);
    const auto n_nodes = static_cast<Eigen::Index>(ref_grads.empty() ? 0 : ref_grads[0].rows());
    const std::size_t n = 2 * static_cast<std::size_t>(n_nodes);
    ElementBatch out{geo.n_cells(), n, n, std::vector<double>(geo.n_cells() * n * n, 0.0)};
    Eigen::Matrix<double, 3, Eigen::Dynamic> b(3, 2 * n_nodes);
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> ke(
            out.values.data() + k * n * n, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const GradientTable g = physical_grads(geo, ref_grads, k, q);
            b.setZero();
            for (Eigen::Index i = 0; i < n_nodes; ++i) {
                b(0, 2 * i) = g(i, 0);
                b(2, 2 * i) = g(i, 1);
                b(1, 2 * i + 1) = g(i, 1);
                b(2, 2 * i + 1) = g(i, 0);
            }
            ke.noalias() += (geo.weights[q] * geo.det[geo.at(k, q)]) * (b.transpose() * d * b);
        }
    }
    return out;
}

ElementBatch biot_vector_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                const std::array<double, 3>& alpha, std::span<const double> t_qp)
{
    check_rule_size(geo, ref_grads.size());
    if (t_qp.size() != geo.n_cells() * geo.n_qp) {
        throw ArgumentError("biot: parameter values do not match the quadrature layout");
    }
    const auto n_nodes = static_cast<std::size_t>(ref_grads.empty() ? 0 : ref_grads[0].rows());
    const std::size_t n = 2 * n_nodes;
    ElementBatch out{geo.n_cells(), n, 0, std::vector<double>(geo.n_cells() * n, 0.0)};
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const std::size_t at = geo.at(k, q);
            const GradientTable g = physical_grads(geo, ref_grads, k, q);
            const double scale = geo.weights[q] * geo.det[at] * t_qp[at];
            for (std::size_t i = 0; i < n_nodes; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                out(k, 2 * i) += scale * (alpha[0] * g(r, 0) + alpha[2] * g(r, 1));
                out(k, 2 * i + 1) += scale * (alpha[1] * g(r, 1) + alpha[2] * g(r, 0));
            }
        }
    }
    return out;
}

ElementBatch biot_matrix_kernel(const GeometryData& geo, std::span<const GradientTable> ref_grads,
                                const std::array<double, 3>& alpha, const Eigen::MatrixXd& scalar_basis)
{
    check_rule_size(geo, ref_grads.size());
    if (static_cast<std::size_t>(scalar_basis.rows()) != geo.n_qp) {
        throw ArgumentError("biot: scalar basis does not match the quadrature point count");
    }
    const auto n_nodes = static_cast<std::size_t>(ref_grads.empty() ? 0 : ref_grads[0].rows());
    const std::size_t n = 2 * n_nodes;
    const auto m = static_cast<std::size_t>(scalar_basis.cols());
    ElementBatch out{geo.n_cells(), n, m, std::vector<double>(geo.n_cells() * n * m, 0.0)};
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const GradientTable g = physical_grads(geo, ref_grads, k, q);
            const double scale = geo.weights[q] * geo.det[geo.at(k, q)];
            for (std::size_t i = 0; i < n_nodes; ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                const double cx = scale * (alpha[0] * g(r, 0) + alpha[2] * g(r, 1));
                const double cy = scale * (alpha[1] * g(r, 1) + alpha[2] * g(r, 0));
                for (std::size_t j = 0; j < m; ++j) {
                    const double psi = scalar_basis(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j));
                    out(k, 2 * i, j) += cx * psi;
                    out(k, 2 * i + 1, j) += cy * psi;
                }
            }
        }
    }
    return out;
}

ElementBatch source_kernel(const GeometryData& geo, const Eigen::MatrixXd& basis, std::span<const double> f_qp)
{
    if (static_cast<std::size_t>(basis.rows()) != geo.n_qp || f_qp.size() != geo.n_cells() * geo.n_qp) {
        throw ArgumentError("source: inputs do not match the quadrature layout");
    }
    const auto n = static_cast<std::size_t>(basis.cols());
    ElementBatch out{geo.n_cells(), n, 0, std::vector<double>(geo.n_cells() * n, 0.0)};
    for (std::size_t k = 0; k < geo.n_cells(); ++k) {
        for (std::size_t q = 0; q < geo.n_qp; ++q) {
            const std::size_t at = geo.at(k, q);
            const double scale = geo.weights[q] * geo.det[at] * f_qp[at];
            for (std::size_t i = 0; i < n; ++i) {
                out(k, i) += scale * basis(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i));
            }
        }
    }
    return out;
}

ElementBatch source_kernel(const GeometryData& geo, const Eigen::MatrixXd& basis, const PointFunction& f)
{
    std::vector<double> f_qp(geo.points.size());
    for (std::size_t i = 0; i < f_qp.size(); ++i) {
        f_qp[i] = f(geo.points[i]);
    }
    return source_kernel(geo, basis, f_qp);
}

} // namespace femlet
