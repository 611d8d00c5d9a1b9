#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/geometry.hpp"
#include "l1heat/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace l1heat {

/// Conforming simplicial mesh of an interval (d = 1) or polygon (d = 2).
///
/// Immutable after construction. Elements are stored positively oriented; the
/// boundary flags mark exactly the vertices on faces owned by a single element,
/// and the interior vertices are numbered consecutively as FE degrees of freedom.
class Mesh {
public:
    /// Validates and builds a mesh. Negatively oriented elements are reoriented.
    ///
    /// Throws ValidationError for out-of-range indices, degenerate elements,
    /// unused vertices, faces shared by more than two elements, hanging nodes,
    /// overlapping elements, or explicit boundary flags that disagree with the
    /// topological boundary.
    static Mesh create(int dim, std::vector<Point> vertices, std::vector<Simplex> elements,
                       std::optional<std::vector<bool>> boundary = std::nullopt)
    {
        Mesh m;
        m.dim_ = dim;
        m.vertices_ = std::move(vertices);
        m.elements_ = std::move(elements);
        m.validate_and_build(std::move(boundary));
        return m;
    }

    int dim() const noexcept { return dim_; }
    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_elements() const noexcept { return elements_.size(); }
    std::size_t vertices_per_element() const noexcept { return static_cast<std::size_t>(dim_) + 1; }

    std::span<const Point> vertices() const noexcept { return vertices_; }
    const Point& vertex(std::size_t v) const { return vertices_[v]; }
    std::span<const Simplex> elements() const noexcept { return elements_; }
    const Simplex& element(std::size_t e) const { return elements_[e]; }
    const ElementGeometry& geometry(std::size_t e) const { return geometry_[e]; }
    double measure(std::size_t e) const { return geometry_[e].measure; }

    bool is_boundary(std::size_t v) const { return boundary_[v]; }
    const std::vector<bool>& boundary_flags() const noexcept { return boundary_; }

    /// Interior vertex ids in dof order.
    std::span<const std::size_t> interior_vertices() const noexcept { return interior_; }
    /// Dof number of vertex v, or no_index on the boundary.
    std::size_t interior_index(std::size_t v) const { return dof_of_vertex_[v]; }
    std::size_t num_interior() const noexcept { return interior_.size(); }

    /// Largest element diameter.
    double h() const noexcept { return h_; }
    double min_diameter() const noexcept { return min_diameter_; }
    double domain_measure() const noexcept { return domain_measure_; }

    /// Physical point from barycentric coordinates in element e.
    Point map_to_physical(std::size_t e, const Barycentric& bary) const
    {
        Point x{0.0, 0.0};
        for (std::size_t i = 0; i < vertices_per_element(); ++i) {
            x = x + bary[i] * vertices_[elements_[e][i]];
        }
        return x;
    }

    /// Barycentric coordinates of x with respect to element e (may be outside [0,1]).
    Barycentric barycentric(std::size_t e, const Point& x) const
    {
        const auto& g = geometry_[e];
        const Point& x0 = vertices_[elements_[e][0]];
        Barycentric b{0.0, 0.0, 0.0};
        double rest = 1.0;
        for (std::size_t i = 1; i < vertices_per_element(); ++i) {
            b[i] = dot(g.grad_lambda[i], x - x0);
            rest -= b[i];
        }
        b[0] = rest;
        return b;
    }

private:
    Mesh() = default;

    void validate_and_build(std::optional<std::vector<bool>> boundary);
    void build_geometry();
    void check_conformity_and_boundary(std::optional<std::vector<bool>> boundary);

    int dim_ = 0;
    std::vector<Point> vertices_;
    std::vector<Simplex> elements_;
    std::vector<ElementGeometry> geometry_;
    std::vector<bool> boundary_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> dof_of_vertex_;
    double h_ = 0.0;
    double min_diameter_ = 0.0;
    double domain_measure_ = 0.0;
};

namespace detail {

inline ElementGeometry simplex_geometry(int dim, std::span<const Point> p)
{
    ElementGeometry g;
    if (dim == 1) {
        const double len = p[1][0] - p[0][0];
        g.measure = len;
        g.diameter = std::abs(len);
        g.grad_lambda[0] = {-1.0 / len, 0.0};
        g.grad_lambda[1] = {1.0 / len, 0.0};
        return g;
    }
    const Point e1 = p[1] - p[0];
    const Point e2 = p[2] - p[0];
    const double det = cross(e1, e2);
    g.measure = 0.5 * det;
    g.diameter = std::max({length(e1), length(e2), length(p[2] - p[1])});
    // grad lambda_1 = (e2_y, -e2_x)/det, grad lambda_2 = (-e1_y, e1_x)/det
    g.grad_lambda[1] = {e2[1] / det, -e2[0] / det};
    g.grad_lambda[2] = {-e1[1] / det, e1[0] / det};
    g.grad_lambda[0] = {-g.grad_lambda[1][0] - g.grad_lambda[2][0], -g.grad_lambda[1][1] - g.grad_lambda[2][1]};
    return g;
}

} // namespace detail

inline void Mesh::validate_and_build(std::optional<std::vector<bool>> boundary)
{
    if (dim_ != 1 && dim_ != 2) {
        throw ValidationError("mesh dimension must be 1 or 2, got " + std::to_string(dim_));
    }
    if (vertices_.empty() || elements_.empty()) {
        throw ValidationError("mesh must contain at least one vertex and one element");
    }
    const std::size_t nv = vertices_.size();
    std::vector<bool> used(nv, false);
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        for (std::size_t i = 0; i < vertices_per_element(); ++i) {
            if (elements_[e][i] >= nv) {
                throw ValidationError("element " + std::to_string(e) + " references vertex " +
                                      std::to_string(elements_[e][i]) + " but the mesh has " + std::to_string(nv) +
                                      " vertices");
            }
            used[elements_[e][i]] = true;
        }
        for (std::size_t i = vertices_per_element(); i < 3; ++i) {
            elements_[e][i] = no_index;
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        if (!used[v]) {
            throw ValidationError("vertex " + std::to_string(v) + " is not used by any element");
        }
        if (dim_ == 1) {
            vertices_[v][1] = 0.0;
        }
    }
    build_geometry();
    check_conformity_and_boundary(std::move(boundary));
}

inline void Mesh::build_geometry()
{
    geometry_.resize(elements_.size());
    h_ = 0.0;
    min_diameter_ = std::numeric_limits<double>::infinity();
    domain_measure_ = 0.0;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        std::array<Point, 3> p{};
        for (std::size_t i = 0; i < vertices_per_element(); ++i) {
            p[i] = vertices_[elements_[e][i]];
        }
        auto g = detail::simplex_geometry(dim_, std::span<const Point>(p.data(), vertices_per_element()));
        if (g.measure < 0.0) {
            std::swap(elements_[e][0], elements_[e][1]);
            std::swap(p[0], p[1]);
            g = detail::simplex_geometry(dim_, std::span<const Point>(p.data(), vertices_per_element()));
        }
        const double scale = std::pow(g.diameter, dim_);
        if (!(g.measure > 1e-14 * scale) || !std::isfinite(g.measure)) {
            throw ValidationError("degenerate element " + std::to_string(e) + " (measure " +
                                  std::to_string(g.measure) + ")");
        }
        geometry_[e] = g;
        h_ = std::max(h_, g.diameter);
        min_diameter_ = std::min(min_diameter_, g.diameter);
        domain_measure_ += g.measure;
    }
}

inline void Mesh::check_conformity_and_boundary(std::optional<std::vector<bool>> boundary)
{
    const std::size_t nv = vertices_.size();
    std::vector<bool> inferred(nv, false);

    if (dim_ == 1) {
        std::vector<int> count(nv, 0);
        std::vector<std::pair<double, double>> spans;
        spans.reserve(elements_.size());
        for (const auto& el : elements_) {
            ++count[el[0]];
            ++count[el[1]];
            spans.emplace_back(vertices_[el[0]][0], vertices_[el[1]][0]);
        }
        for (std::size_t v = 0; v < nv; ++v) {
            if (count[v] > 2) {
                throw ValidationError("nonconforming mesh: vertex " + std::to_string(v) + " shared by " +
                                      std::to_string(count[v]) + " elements");
            }
            inferred[v] = count[v] == 1;
        }
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second - 1e-12 * h_) {
                throw ValidationError("nonconforming mesh: overlapping intervals");
            }
        }
    } else {
        // Edge -> (count, oriented copy from the owning element)
        std::map<std::pair<std::size_t, std::size_t>, std::pair<int, std::pair<std::size_t, std::size_t>>> edges;
        for (const auto& el : elements_) {
            for (int k = 0; k < 3; ++k) {
                const std::size_t a = el[static_cast<std::size_t>(k)];
                const std::size_t b = el[static_cast<std::size_t>((k + 1) % 3)];
                auto key = std::minmax(a, b);
                auto& entry = edges[{key.first, key.second}];
                if (entry.first == 1 && entry.second == std::pair{a, b}) {
                    throw ValidationError("nonconforming mesh: elements on the same side of edge (" +
                                          std::to_string(key.first) + "," + std::to_string(key.second) +
                                          ") overlap");
                }
                ++entry.first;
                entry.second = {a, b};
            }
        }
        double boundary_area = 0.0;
        std::vector<std::pair<std::size_t, std::size_t>> bedges;
        for (const auto& [key, entry] : edges) {
            if (entry.first > 2) {
                throw ValidationError("nonconforming mesh: edge (" + std::to_string(key.first) + "," +
                                      std::to_string(key.second) + ") shared by " + std::to_string(entry.first) +
                                      " elements");
            }
            if (entry.first == 1) {
                inferred[key.first] = true;
                inferred[key.second] = true;
                bedges.push_back(entry.second);
                boundary_area += 0.5 * cross(vertices_[entry.second.first], vertices_[entry.second.second]);
            }
        }
        if (std::abs(boundary_area - domain_measure_) > 1e-10 * domain_measure_) {
            throw ValidationError("nonconforming mesh: elements overlap (element area " +
                                  std::to_string(domain_measure_) + " vs enclosed area " +
                                  std::to_string(boundary_area) + ")");
        }
        // Hanging nodes show up as vertices in the relative interior of a one-sided edge.
        for (const auto& [a, b] : bedges) {
            const Point pa = vertices_[a];
            const Point d = vertices_[b] - pa;
            const double len2 = dot(d, d);
            for (std::size_t v = 0; v < nv; ++v) {
                if (v == a || v == b) {
                    continue;
                }
                const Point r = vertices_[v] - pa;
                const double s = dot(r, d) / len2;
                if (s <= 1e-12 || s >= 1.0 - 1e-12) {
                    continue;
                }
                if (std::abs(cross(d, r)) <= 1e-12 * len2) {
                    throw ValidationError("nonconforming mesh: hanging vertex " + std::to_string(v) +
                                          " on edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
                }
            }
        }
    }

    if (boundary) {
        if (boundary->size() != nv) {
            throw ValidationError("boundary flag count does not match vertex count");
        }
        for (std::size_t v = 0; v < nv; ++v) {
            if ((*boundary)[v] != inferred[v]) {
                throw ValidationError("boundary flag of vertex " + std::to_string(v) +
                                      " disagrees with the mesh topology");
            }
        }
    }
    boundary_ = std::move(inferred);
    dof_of_vertex_.assign(nv, no_index);
    interior_.clear();
    for (std::size_t v = 0; v < nv; ++v) {
        if (!boundary_[v]) {
            dof_of_vertex_[v] = interior_.size();
            interior_.push_back(v);
        }
    }
}

/// Uniform mesh of (0,1) with n elements.
inline Mesh generate_interval_mesh(std::size_t n)
{
    if (n == 0) {
        throw ValidationError("interval mesh needs at least one element");
    }
    std::vector<Point> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        v[i] = {static_cast<double>(i) / static_cast<double>(n), 0.0};
    }
    std::vector<Simplex> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = {i, i + 1, no_index};
    }
    return Mesh::create(1, std::move(v), std::move(e));
}

/// Structured mesh of (0,1)^2: n x n squares, each cut into two right isoceles
/// triangles. The diagonal alternates in a checkerboard ("union jack") pattern.
inline Mesh generate_unit_square_mesh(std::size_t n)
{
    if (n == 0) {
        throw ValidationError("unit square mesh needs at least one subdivision");
    }
    const auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    const double hn = 1.0 / static_cast<double>(n);
    std::vector<Point> v;
    v.reserve((n + 1) * (n + 1));
    for (std::size_t j = 0; j <= n; ++j) {
        for (std::size_t i = 0; i <= n; ++i) {
            // exact endpoints so that refinements share vertices bitwise
            v.push_back({i == n ? 1.0 : static_cast<double>(i) * hn, j == n ? 1.0 : static_cast<double>(j) * hn});
        }
    }
    std::vector<Simplex> e;
    e.reserve(2 * n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                e.push_back({a, b, c});
                e.push_back({a, c, d});
            } else {
                e.push_back({a, b, d});
                e.push_back({b, c, d});
            }
        }
    }
    return Mesh::create(2, std::move(v), std::move(e));
}

/// Structured mesh of (0,1)^d with n cells per direction.
inline Mesh generate_unit_mesh(int dim, std::size_t n)
{
    if (dim == 1) {
        return generate_interval_mesh(n);
    }
    if (dim == 2) {
        return generate_unit_square_mesh(n);
    }
    throw ValidationError("generate_unit_mesh: dimension must be 1 or 2");
}

struct MeshQualityReport {
    /// Largest interior angle over all triangles (radians); 0 for d = 1.
    double max_dihedral_angle = 0.0;
    bool is_nonobtuse = true;
    /// max element diameter / min element diameter
    double quasiuniformity_ratio = 1.0;
    /// Largest stiffness entry between distinct interior vertices; 0 when there is no such pair.
    double offdiag_stiffness_max = 0.0;
    /// First element whose angles approach pi (near-degenerate), if any.
    std::optional<std::size_t> degenerate_element;
};

inline constexpr double tol_angle = 1e-10;
inline constexpr double tol_asm = 1e-12;

inline double max_element_angle(const Mesh& mesh, std::size_t e)
{
    if (mesh.dim() == 1) {
        return 0.0;
    }
    const auto& el = mesh.element(e);
    double worst = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const Point& p = mesh.vertex(el[k]);
        const Point a = mesh.vertex(el[(k + 1) % 3]) - p;
        const Point b = mesh.vertex(el[(k + 2) % 3]) - p;
        const double c = std::clamp(dot(a, b) / (length(a) * length(b)), -1.0, 1.0);
        worst = std::max(worst, std::acos(c));
    }
    return worst;
}

inline double max_mesh_angle(const Mesh& mesh)
{
    double worst = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        worst = std::max(worst, max_element_angle(mesh, e));
    }
    return worst;
}

inline bool is_nonobtuse(const Mesh& mesh) { return max_mesh_angle(mesh) <= std::numbers::pi / 2 + tol_angle; }

/// Angle scan plus direct assembly of the interior stiffness off-diagonals.
inline MeshQualityReport check_quality(const Mesh& mesh)
{
    MeshQualityReport r;
    r.max_dihedral_angle = max_mesh_angle(mesh);
    r.is_nonobtuse = r.max_dihedral_angle <= std::numbers::pi / 2 + tol_angle;
    r.quasiuniformity_ratio = mesh.h() / mesh.min_diameter();

    std::map<std::pair<std::size_t, std::size_t>, double> offdiag;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& g = mesh.geometry(e);
        const auto& el = mesh.element(e);
        if (!r.degenerate_element && g.measure <= 1e-12 * std::pow(g.diameter, mesh.dim())) {
            r.degenerate_element = e;
        }
        for (std::size_t i = 0; i < mesh.vertices_per_element(); ++i) {
            for (std::size_t j = 0; j < mesh.vertices_per_element(); ++j) {
                if (i == j || mesh.is_boundary(el[i]) || mesh.is_boundary(el[j])) {
                    continue;
                }
                offdiag[{el[i], el[j]}] += g.measure * dot(g.grad_lambda[i], g.grad_lambda[j]);
            }
        }
    }
    if (!offdiag.empty()) {
        r.offdiag_stiffness_max = -std::numeric_limits<double>::infinity();
        for (const auto& [key, value] : offdiag) {
            r.offdiag_stiffness_max = std::max(r.offdiag_stiffness_max, value);
        }
    }
    if (r.degenerate_element) {
        r.is_nonobtuse = false;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Text format
//
//   d <dimension> <num_vertices> <num_elements>
//   v <x> [<y>]
//   e <i0> <i1> [<i2>]
//   b <i>            (optional; inferred from one-sided faces when absent)
// ---------------------------------------------------------------------------

inline std::string save_mesh(const Mesh& mesh)
{
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "d %d %zu %zu\n", mesh.dim(), mesh.num_vertices(), mesh.num_elements());
    out += buf;
    for (const auto& p : mesh.vertices()) {
        if (mesh.dim() == 1) {
            std::snprintf(buf, sizeof buf, "v %.17g\n", p[0]);
        } else {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p[0], p[1]);
        }
        out += buf;
    }
    for (const auto& el : mesh.elements()) {
        if (mesh.dim() == 1) {
            std::snprintf(buf, sizeof buf, "e %zu %zu\n", el[0], el[1]);
        } else {
            std::snprintf(buf, sizeof buf, "e %zu %zu %zu\n", el[0], el[1], el[2]);
        }
        out += buf;
    }
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary(v)) {
            std::snprintf(buf, sizeof buf, "b %zu\n", v);
            out += buf;
        }
    }
    return out;
}

inline Mesh load_mesh(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    int dim = 0;
    std::size_t nv = 0, ne = 0;
    bool have_header = false;
    std::vector<Point> vertices;
    std::vector<Simplex> elements;
    std::vector<bool> boundary;
    bool have_boundary = false;

    const auto fail = [&](const std::string& what) {
        throw ParseError("mesh line " + std::to_string(lineno) + ": " + what);
    };
    const auto read_index = [&](std::istringstream& ls) {
        long long i = -1;
        if (!(ls >> i)) {
            fail("expected a vertex index");
        }
        if (i < 0 || static_cast<std::size_t>(i) >= nv) {
            fail("vertex index " + std::to_string(i) + " out of range (mesh has " + std::to_string(nv) +
                 " vertices)");
        }
        return static_cast<std::size_t>(i);
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) {
            continue;
        }
        if (!have_header) {
            if (tag != "d") {
                fail("expected header 'd <dimension> <num_vertices> <num_elements>'");
            }
            long long d = 0, v = 0, e = 0;
            if (!(ls >> d >> v >> e) || d < 1 || d > 2 || v < 1 || e < 1) {
                fail("malformed header");
            }
            dim = static_cast<int>(d);
            nv = static_cast<std::size_t>(v);
            ne = static_cast<std::size_t>(e);
            boundary.assign(nv, false);
            have_header = true;
        } else if (tag == "v") {
            Point p{0.0, 0.0};
            if (!(ls >> p[0]) || (dim == 2 && !(ls >> p[1]))) {
                fail("malformed vertex line");
            }
            if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
                fail("non-finite coordinate");
            }
            vertices.push_back(p);
        } else if (tag == "e") {
            Simplex s{no_index, no_index, no_index};
            for (int i = 0; i <= dim; ++i) {
                s[static_cast<std::size_t>(i)] = read_index(ls);
            }
            elements.push_back(s);
        } else if (tag == "b") {
            boundary[read_index(ls)] = true;
            have_boundary = true;
        } else {
            fail("unknown record '" + tag + "'");
        }
        std::string extra;
        if (ls >> extra) {
            fail("trailing token '" + extra + "'");
        }
    }
    if (!have_header) {
        throw ParseError("mesh: missing header");
    }
    if (vertices.size() != nv) {
        throw ParseError("mesh: header declares " + std::to_string(nv) + " vertices, found " +
                         std::to_string(vertices.size()));
    }
    if (elements.size() != ne) {
        throw ParseError("mesh: header declares " + std::to_string(ne) + " elements, found " +
                         std::to_string(elements.size()));
    }
    std::optional<std::vector<bool>> b;
    if (have_boundary) {
        b = std::move(boundary);
    }
    return Mesh::create(dim, std::move(vertices), std::move(elements), std::move(b));
}

} // namespace l1heat
