#include "femlet/mesh.hpp"

#include "femlet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace femlet {

std::size_t vertices_per_cell(CellType type)
{
    return type == CellType::triangle ? 3 : 4;
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Index> connectivity, CellType type)
    : vertices_(std::move(vertices)),
      connectivity_(std::move(connectivity)),
      type_(type),
      nodes_per_cell_(vertices_per_cell(type))
{
    if (connectivity_.size() % nodes_per_cell_ != 0) {
        throw ArgumentError("connectivity length is not a multiple of the cell size");
    }
    for (Index c = 0; c < n_cells(); ++c) {
        const auto nodes = cell(c);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i] >= vertices_.size()) {
                throw ArgumentError("cell " + std::to_string(c) + ": vertex index out of range");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (nodes[i] == nodes[j]) {
                    throw ArgumentError("cell " + std::to_string(c) + ": duplicate vertex index");
                }
            }
        }
        if (!(cell_area(c) > 0.0)) {
            throw DegenerateCellError("cell " + std::to_string(c) + ": non-positive signed area");
        }
    }
}

double Mesh::cell_area(Index c) const
{
    const auto nodes = cell(c);
    double twice = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Point& p = vertices_[nodes[i]];
        const Point& q = vertices_[nodes[(i + 1) % nodes.size()]];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * twice;
}

std::vector<Facet> extract_facets(const Mesh& mesh)
{
    std::map<std::pair<Index, Index>, int> counts;
    for (Index c = 0; c < mesh.n_cells(); ++c) {
        const auto nodes = mesh.cell(c);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Index p = nodes[i];
            const Index q = nodes[(i + 1) % nodes.size()];
            ++counts[{std::min(p, q), std::max(p, q)}];
        }
    }
    std::vector<Facet> facets;
    facets.reserve(counts.size());
    for (const auto& [key, n] : counts) {
        facets.push_back({key.first, key.second, n});
    }
    return facets;
}

// ---------------------------------------------------------------------------
// medit subset

namespace {

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    /// Next non-blank, non-comment line split into tokens; empty at EOF.
    std::vector<std::string> next()
    {
        while (pos_ < text_.size()) {
            auto end = text_.find('\n', pos_);
            if (end == std::string_view::npos) {
                end = text_.size();
            }
            std::string_view line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_no_;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            std::vector<std::string> tokens;
            std::istringstream in{std::string(line)};
            for (std::string tok; in >> tok;) {
                tokens.push_back(tok);
            }
            if (!tokens.empty()) {
                return tokens;
            }
        }
        return {};
    }

    [[nodiscard]] std::size_t line() const { return line_no_; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("mesh line " + std::to_string(line_no_) + ": " + what);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

template <typename T>
T parse_number(const std::string& tok, const LineReader& reader)
{
    T value{};
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        reader.fail("expected a number, got '" + tok + "'");
    }
    return value;
}

std::size_t expect_count(LineReader& reader)
{
    const auto tokens = reader.next();
    if (tokens.size() != 1) {
        reader.fail("expected an entity count");
    }
    return parse_number<std::size_t>(tokens[0], reader);
}

} // namespace

Mesh read_mesh(std::string_view text)
{
    LineReader reader(text);

    auto tokens = reader.next();
    if (tokens.empty() || tokens[0] != "MeshVersionFormatted") {
        reader.fail("malformed header: expected 'MeshVersionFormatted'");
    }
    if (tokens.size() == 1) {
        tokens = reader.next();
        if (tokens.size() != 1) {
            reader.fail("malformed header: missing format version");
        }
    }

    tokens = reader.next();
    if (tokens.empty() || tokens[0] != "Dimension") {
        reader.fail("malformed header: expected 'Dimension'");
    }
    std::string dim_tok;
    if (tokens.size() == 2) {
        dim_tok = tokens[1];
    } else {
        tokens = reader.next();
        if (tokens.size() != 1) {
            reader.fail("malformed header: missing dimension");
        }
        dim_tok = tokens[0];
    }
    if (parse_number<int>(dim_tok, reader) != 2) {
        reader.fail("only dimension 2 is supported");
    }

    std::vector<Point> vertices;
    std::vector<Index> connectivity;
    std::optional<CellType> type;
    bool have_vertices = false;
    bool ended = false;

    while (!ended) {
        tokens = reader.next();
        if (tokens.empty()) {
            reader.fail("unexpected end of file, missing 'End'");
        }
        const std::string& keyword = tokens[0];
        if (keyword == "End") {
            ended = true;
        } else if (keyword == "Vertices") {
            if (have_vertices) {
                reader.fail("duplicate 'Vertices' section");
            }
            have_vertices = true;
            const std::size_t n = expect_count(reader);
            vertices.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = reader.next();
                if (row.size() < 2 || row.size() > 3) {
                    reader.fail("vertex line needs 'x y [tag]'");
                }
                vertices.push_back({parse_number<double>(row[0], reader),
                                    parse_number<double>(row[1], reader)});
            }
        } else if (keyword == "Triangles" || keyword == "Quadrilaterals") {
            const CellType this_type = keyword == "Triangles" ? CellType::triangle : CellType::quad;
            if (type && *type != this_type) {
                reader.fail("mixed cell types are not supported");
            }
            if (!have_vertices) {
                reader.fail("cells listed before 'Vertices'");
            }
            type = this_type;
            const std::size_t nv = vertices_per_cell(this_type);
            const std::size_t n = expect_count(reader);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = reader.next();
                if (row.size() < nv || row.size() > nv + 1) {
                    reader.fail("cell line needs " + std::to_string(nv) + " vertex indices and an optional tag");
                }
                for (std::size_t k = 0; k < nv; ++k) {
                    const auto idx = parse_number<long long>(row[k], reader);
                    if (idx < 1 || static_cast<std::size_t>(idx) > vertices.size()) {
                        reader.fail("vertex index out of range");
                    }
                    connectivity.push_back(static_cast<Index>(idx - 1));
                }
            }
        } else {
            reader.fail("unknown keyword '" + keyword + "'");
        }
    }
    if (!type) {
        throw ParseError("mesh: no 'Triangles' or 'Quadrilaterals' section");
    }
    try {
        return Mesh(std::move(vertices), std::move(connectivity), *type);
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("mesh: ") + e.what());
    }
}

Mesh read_mesh_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open mesh file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_mesh(buffer.str());
}

std::string write_mesh(const Mesh& mesh)
{
    std::string out = "MeshVersionFormatted 2\nDimension\n2\nVertices\n";
    out += std::to_string(mesh.n_vertices()) + "\n";
    char buf[64];
    for (const Point& p : mesh.vertices()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p[0], p[1]);
        out += buf;
    }
    out += mesh.cell_type() == CellType::triangle ? "Triangles\n" : "Quadrilaterals\n";
    out += std::to_string(mesh.n_cells()) + "\n";
    for (Index c = 0; c < mesh.n_cells(); ++c) {
        for (const Index v : mesh.cell(c)) {
            out += std::to_string(v + 1) + " ";
        }
        out += "0\n";
    }
    out += "End\n";
    return out;
}

void write_mesh_file(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write mesh file '" + path + "'");
    }
    out << write_mesh(mesh);
}

Mesh gen_block_mesh(Point lo, Point hi, std::array<std::size_t, 2> n, CellType type)
{
    if (n[0] < 2 || n[1] < 2) {
        throw ArgumentError("gen_block_mesh: at least 2 vertices per axis are required");
    }
    if (!(hi[0] > lo[0] && hi[1] > lo[1])) {
        throw ArgumentError("gen_block_mesh: hi must exceed lo componentwise");
    }
    std::vector<Point> vertices;
    vertices.reserve(n[0] * n[1]);
    for (std::size_t j = 0; j < n[1]; ++j) {
        const double y = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / static_cast<double>(n[1] - 1);
        for (std::size_t i = 0; i < n[0]; ++i) {
            const double x = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(n[0] - 1);
            vertices.push_back({x, y});
        }
    }
    std::vector<Index> conn;
    for (std::size_t j = 0; j + 1 < n[1]; ++j) {
        for (std::size_t i = 0; i + 1 < n[0]; ++i) {
            const Index v00 = j * n[0] + i;
            const Index v10 = v00 + 1;
            const Index v01 = v00 + n[0];
            const Index v11 = v01 + 1;
            if (type == CellType::quad) {
                conn.insert(conn.end(), {v00, v10, v11, v01});
            } else {
                conn.insert(conn.end(), {v00, v10, v11});
                conn.insert(conn.end(), {v00, v11, v01});
            }
        }
    }
    return Mesh(std::move(vertices), std::move(conn), type);
}

// ---------------------------------------------------------------------------
// region selection

bool Region::contains_vertex(Index v) const
{
    return std::binary_search(vertices.begin(), vertices.end(), v);
}

namespace {

struct Comparison {
    int axis;
    bool less;
    double threshold;
};

class SelectorParser {
public:
    explicit SelectorParser(std::string_view text) : text_(text) {}

    std::vector<Comparison> conjunction()
    {
        std::vector<Comparison> out;
        operand(out);
        skip_ws();
        while (peek() == '&') {
            ++pos_;
            operand(out);
            skip_ws();
        }
        return out;
    }

    bool at_end()
    {
        skip_ws();
        return pos_ == text_.size();
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("region selector '" + std::string(text_) + "': " + what + " at offset "
                         + std::to_string(pos_));
    }

private:
    void operand(std::vector<Comparison>& out)
    {
        skip_ws();
        if (peek() == '(') {
            ++pos_;
            auto inner = conjunction();
            out.insert(out.end(), inner.begin(), inner.end());
            skip_ws();
            if (peek() != ')') {
                fail("expected ')'");
            }
            ++pos_;
            return;
        }
        Comparison cmp{};
        if (peek() == 'x') {
            cmp.axis = 0;
        } else if (peek() == 'y') {
            cmp.axis = 1;
        } else {
            fail("expected 'x' or 'y'");
        }
        ++pos_;
        skip_ws();
        if (peek() == '<') {
            cmp.less = true;
        } else if (peek() == '>') {
            cmp.less = false;
        } else {
            fail("expected '<' or '>'");
        }
        ++pos_;
        skip_ws();
        const auto* first = text_.data() + pos_;
        const auto* last = text_.data() + text_.size();
        const auto [ptr, ec] = std::from_chars(first, last, cmp.threshold);
        if (ec != std::errc{}) {
            fail("expected a number");
        }
        pos_ += static_cast<std::size_t>(ptr - first);
        out.push_back(cmp);
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

RegionKind parse_region_kind(std::string_view text)
{
    if (text == "cell") {
        return RegionKind::cell;
    }
    if (text == "facet") {
        return RegionKind::facet;
    }
    if (text == "vertex") {
        return RegionKind::vertex;
    }
    throw ParseError("unknown region kind '" + std::string(text) + "'");
}

Region select_region(std::shared_ptr<const Mesh> mesh, std::string name, std::string_view expression,
                     RegionKind kind)
{
    if (!mesh) {
        throw ArgumentError("select_region: null mesh");
    }
    const std::string_view expr = trim(expression);
    std::vector<char> selected(mesh->n_vertices(), 0);

    if (expr == "all") {
        std::fill(selected.begin(), selected.end(), 1);
    } else {
        constexpr std::string_view prefix = "vertices in";
        if (expr.substr(0, prefix.size()) != prefix || expr.size() == prefix.size()
            || !std::isspace(static_cast<unsigned char>(expr[prefix.size()]))) {
            throw ParseError("region selector '" + std::string(expr)
                             + "': expected 'all' or 'vertices in <predicate>'");
        }
        SelectorParser parser(expr.substr(prefix.size()));
        const auto comparisons = parser.conjunction();
        if (!parser.at_end()) {
            parser.fail("trailing input");
        }
        for (Index v = 0; v < mesh->n_vertices(); ++v) {
            const Point& p = mesh->vertex(v);
            bool ok = true;
            for (const auto& cmp : comparisons) {
                ok = ok && (cmp.less ? p[cmp.axis] < cmp.threshold : p[cmp.axis] > cmp.threshold);
            }
            selected[v] = ok ? 1 : 0;
        }
    }

    Region region;
    region.name = std::move(name);
    region.kind = kind;

    switch (kind) {
    case RegionKind::vertex:
        for (Index v = 0; v < mesh->n_vertices(); ++v) {
            if (selected[v]) {
                region.vertices.push_back(v);
            }
        }
        break;
    case RegionKind::facet: {
        std::vector<char> used(mesh->n_vertices(), 0);
        for (const Facet& f : extract_facets(*mesh)) {
            if (f.is_boundary() && selected[f.a] && selected[f.b]) {
                region.facets.push_back(f);
                used[f.a] = used[f.b] = 1;
            }
        }
        if (region.facets.empty()) {
            throw EmptyRegionError("region '" + region.name + "': selection contains no boundary facet");
        }
        for (Index v = 0; v < mesh->n_vertices(); ++v) {
            if (used[v]) {
                region.vertices.push_back(v);
            }
        }
        break;
    }
    case RegionKind::cell: {
        std::vector<char> used(mesh->n_vertices(), 0);
        for (Index c = 0; c < mesh->n_cells(); ++c) {
            const auto nodes = mesh->cell(c);
            if (std::all_of(nodes.begin(), nodes.end(), [&](Index v) { return selected[v] != 0; })) {
                region.cells.push_back(c);
                for (const Index v : nodes) {
                    used[v] = 1;
                }
            }
        }
        if (region.cells.empty()) {
            throw EmptyRegionError("region '" + region.name + "': selection contains no cell");
        }
        for (Index v = 0; v < mesh->n_vertices(); ++v) {
            if (used[v]) {
                region.vertices.push_back(v);
            }
        }
        break;
    }
    }
    region.mesh = std::move(mesh);
    return region;
}

} // namespace femlet
