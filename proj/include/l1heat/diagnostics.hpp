#pragma once

#include "l1heat/csv.hpp"
#include "l1heat/errors.hpp"
#include "l1heat/fespace.hpp"
#include "l1heat/levelset.hpp"
#include "l1heat/linalg.hpp"
#include "l1heat/mesh.hpp"
#include "l1heat/quadrature.hpp"
#include "l1heat/scheme.hpp"
#include "l1heat/truncation.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace l1heat {

// ---------------------------------------------------------------------------
// Exponents

/// Integrability exponents in dimension d, exact where rational.
struct ExponentPack {
    using Rational = boost::rational<long>;

    int d = 2;
    /// (d+2)/(d+1): weak integrability of the gradient.
    Rational qbar;
    /// 2(d+1)/d
    Rational r;
    /// (d+2)/d: weak integrability of the function.
    Rational weak;
    /// 2d/(d-2) for d >= 3.
    std::optional<Rational> s_exact;
    /// Sobolev exponent used in comparisons; configurable for d <= 2.
    double s = 10.0;

    static ExponentPack make(int d, double s_low_dim = 10.0)
    {
        if (d < 1) {
            throw ValidationError("ExponentPack: dimension must be positive");
        }
        ExponentPack e;
        e.d = d;
        e.qbar = Rational(d + 2, d + 1);
        e.r = Rational(2 * (d + 1), d);
        e.weak = Rational(d + 2, d);
        if (d >= 3) {
            e.s_exact = Rational(2 * d, d - 2);
            e.s = boost::rational_cast<double>(*e.s_exact);
        } else {
            if (!(s_low_dim > 2.0) || !std::isfinite(s_low_dim)) {
                throw ValidationError("ExponentPack: s must be a finite number above 2");
            }
            e.s = s_low_dim;
        }
        return e;
    }

    double qbar_value() const { return boost::rational_cast<double>(qbar); }
    double r_value() const { return boost::rational_cast<double>(r); }
    double weak_value() const { return boost::rational_cast<double>(weak); }

    /// 2 - 2/r = qbar, r - 1 = (d+2)/d, qbar < 2 and r < s when d >= 3.
    bool identities_hold() const
    {
        return Rational(2) - Rational(2) / r == qbar && r - Rational(1) == weak && qbar < Rational(2) &&
               (!s_exact || r < *s_exact);
    }
};

// ---------------------------------------------------------------------------
// Constants of the a priori estimate

/// F = ||f||_{L1(Q_T)} and U = C_1 C_P ||u_0||_{L1} with measured C_1, C_P.
struct EstimateConstants {
    double c1 = 0.0;
    double cp = 0.0;
    double u0_l1 = 0.0;
    double F = 0.0;
    double U = 0.0;
    QuadratureReport quadrature;
};

/// C_1 covers the sampled random functions and u_h^0 itself; C_P covers the
/// bump family and the actual datum.
inline EstimateConstants measure_estimate_constants(const Mesh& mesh, const ProblemData& data, double t_final,
                                                    const FeFunction& u0h, std::size_t trials = 1000,
                                                    std::uint64_t seed = default_seed,
                                                    const QuadratureSpec& quad = {})
{
    EstimateConstants c;
    c.c1 = estimate_lumping_constants(mesh, trials, seed).c1;
    const double l1h = l1_norm(u0h);
    if (l1h > 0.0) {
        c.c1 = std::max(c.c1, lumped_norm(u0h, 1.0) / l1h);
    }
    c.u0_l1 = initial_l1_norm(data, mesh, quad, &c.quadrature);
    if (c.u0_l1 > 0.0) {
        const auto pc = estimate_projection_constant(mesh, quad);
        c.quadrature.merge(pc.quadrature);
        c.cp = std::max(pc.cp, l1h / c.u0_l1);
    }
    c.F = rhs_l1_norm(data, t_final, mesh, quad, &c.quadrature);
    c.U = c.c1 * c.cp * c.u0_l1;
    return c;
}

// ---------------------------------------------------------------------------
// Truncation monitor

/// k = 2^lo, ..., 2^hi.
inline std::vector<double> dyadic_k_grid(int lo = -4, int hi = 8)
{
    if (hi < lo) {
        throw ValidationError("dyadic_k_grid: empty range");
    }
    std::vector<double> k;
    for (int e = lo; e <= hi; ++e) {
        k.push_back(std::ldexp(1.0, e));
    }
    return k;
}

struct MonitorRow {
    double k = 0.0;
    /// max_n ||L_h Theta_k(u^n)||_{L1}
    double theta_term = 0.0;
    /// sum_n tau_n ||grad L_h T_k u^n||^2
    double gradient_term = 0.0;
    double lhs = 0.0;
    /// k (F + U)
    double bound = 0.0;
    bool pass = true;
};

struct MonitorTable {
    std::vector<MonitorRow> rows;
    double F = 0.0;
    double U = 0.0;

    bool all_pass() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const MonitorRow& r) { return r.pass; });
    }
};

inline MonitorTable main_estimate_monitor(const SpaceTimeFeFunction& u, std::span<const double> k_grid, double F,
                                          double U)
{
    if (k_grid.empty()) {
        throw ValidationError("main_estimate_monitor: empty k grid");
    }
    const Mesh& mesh = u.mesh();
    const LumpedWeights w = lumped_weights(mesh);
    const auto& p = u.partition();
    MonitorTable t{{}, F, U};
    for (const double k : k_grid) {
        detail::require_level(k);
        MonitorRow r;
        r.k = k;
        for (std::size_t n = 0; n <= u.steps(); ++n) {
            r.theta_term = std::max(r.theta_term, lumped_theta(u[n], k, w));
        }
        for (std::size_t n = 1; n <= u.steps(); ++n) {
            const FeFunction tk = nodal_truncate(u[n], k);
            double g = 0.0;
            for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
                const Point grad = tk.gradient(e);
                g += mesh.measure(e) * dot(grad, grad);
            }
            r.gradient_term += p.tau(n) * g;
        }
        r.lhs = r.theta_term + r.gradient_term;
        r.bound = k * (F + U);
        r.pass = r.lhs <= r.bound * (1.0 + 1e-12);
        t.rows.push_back(r);
    }
    return t;
}

/// max over time nodes n = 0..N of ||u^n||_{L1}.
inline double linfty_l1(const SpaceTimeFeFunction& u)
{
    double m = 0.0;
    for (const auto& s : u.slices()) {
        m = std::max(m, l1_norm(s));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Weak Lebesgue norms

/// A value held on a set of the given measure.
struct WeightedValue {
    double value = 0.0;
    double measure = 0.0;
};

/// sup_lambda lambda |{v > lambda}|^{1/p} of a piecewise-constant field. The
/// supremum is approached as lambda increases to one of the data values.
inline double weak_norm(std::vector<WeightedValue> field, double p)
{
    if (field.empty()) {
        throw ValidationError("weak_norm: empty field");
    }
    if (!(p > 0.0)) {
        throw ValidationError("weak_norm: exponent must be positive");
    }
    for (const auto& f : field) {
        if (!(f.value >= 0.0) || !(f.measure >= 0.0) || !std::isfinite(f.value) || !std::isfinite(f.measure)) {
            throw ValidationError("weak_norm: values and measures must be finite and nonnegative");
        }
    }
    std::sort(field.begin(), field.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
    double best = 0.0, cum = 0.0;
    for (std::size_t i = 0; i < field.size();) {
        const double v = field[i].value;
        while (i < field.size() && field[i].value == v) {
            cum += field[i++].measure;
        }
        best = std::max(best, v * std::pow(cum, 1.0 / p));
    }
    return best;
}

/// (|grad u^n|_T, tau_n |T|) over n = 1..N and all elements.
inline std::vector<WeightedValue> gradient_field(const SpaceTimeFeFunction& u)
{
    const Mesh& mesh = u.mesh();
    std::vector<WeightedValue> f;
    f.reserve(u.steps() * mesh.num_elements());
    for (std::size_t n = 1; n <= u.steps(); ++n) {
        const double tau = u.partition().tau(n);
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            f.push_back({length(u[n].gradient(e)), tau * mesh.measure(e)});
        }
    }
    return f;
}

/// ||grad u||_{L^{q,infinity}(Q_T)}, q = (d+2)/(d+1) by default.
inline double gradient_weak_q_norm(const SpaceTimeFeFunction& u, std::optional<double> q = std::nullopt)
{
    if (u.steps() == 0 || u.mesh().num_elements() == 0) {
        return 0.0;
    }
    return weak_norm(gradient_field(u), q.value_or(ExponentPack::make(u.mesh().dim()).qbar_value()));
}

/// |{(t, x) in Q_T : |u| > lambda}|.
inline double function_distribution(const SpaceTimeFeFunction& u, double lambda)
{
    const Mesh& mesh = u.mesh();
    double m = 0.0;
    for (std::size_t n = 1; n <= u.steps(); ++n) {
        double s = 0.0;
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const auto v = u[n].element_values(e);
            s += levelset::abs_superlevel_measure(mesh.dim(), std::span<const double>(v.data(), mesh.dim() + 1),
                                                  mesh.measure(e), lambda);
        }
        m += u.partition().tau(n) * s;
    }
    return m;
}

namespace diagnostics_detail {

#if defined(__SIZEOF_FLOAT128__)
__extension__ typedef __float128 wide;
#else
typedef long double wide;
#endif

struct Quadratic {
    wide a2 = 0, a1 = 0, a0 = 0;
    wide operator()(wide x) const { return (a2 * x + a1) * x + a0; }
};

inline Quadratic expand(const levelset::DistributionSegment& s, wide weight)
{
    using K = levelset::DistributionSegment::Kind;
    const wide a = s.s.a, b = s.s.b, c = s.s.c;
    const wide m = weight * static_cast<wide>(s.measure);
    switch (s.kind) {
    case K::constant:
        return {0, 0, m};
    case K::linear:
        return {0, -m / (a - c), m * a / (a - c)};
    case K::top: {
        const wide den = (a - b) * (a - c);
        return {m / den, -2 * m * a / den, m * a * a / den};
    }
    case K::middle: {
        const wide den = (b - c) * (a - c);
        return {-m / den, 2 * m * c / den, m - m * c * c / den};
    }
    }
    return {};
}

inline wide wide_sqrt(wide x)
{
    wide r = std::sqrt(static_cast<double>(x));
    if (r > 0) {
        r = 0.5 * (r + x / r);
    }
    return r;
}

} // namespace diagnostics_detail

namespace diagnostics_detail {

/// Calls fn(segment, tau_n) for every distribution segment of |u^n| on every
/// element, n = 1..N.
template <class F>
void for_each_distribution_segment(const SpaceTimeFeFunction& u, F&& fn)
{
    const Mesh& mesh = u.mesh();
    const int dim = mesh.dim();
    const auto nv = static_cast<std::size_t>(dim + 1);
    std::vector<levelset::DistributionSegment> segs;
    for (std::size_t n = 1; n <= u.steps(); ++n) {
        const double tau = u.partition().tau(n);
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            auto v = u[n].element_values(e);
            segs.clear();
            levelset::distribution_segments(dim, std::span<const double>(v.data(), nv), mesh.measure(e), segs);
            for (double& x : v) {
                x = -x;
            }
            levelset::distribution_segments(dim, std::span<const double>(v.data(), nv), mesh.measure(e), segs);
            for (const auto& s : segs) {
                fn(s, tau);
            }
        }
    }
}

/// Events held in memory at once by function_weak_norm.
inline constexpr std::size_t sweep_chunk_events = std::size_t{1} << 22;

/// Running sum of segment polynomials, grouped by the binary exponent of the
/// segment's upper end. A group is discarded as soon as its last segment
/// ends, so cancellation residue of tiny-scale segments never reaches the
/// total at larger lambda.
class ScaledAccumulator {
public:
    void add(int group, const Quadratic& q, int sign)
    {
        auto& g = groups_[group];
        const wide w = sign;
        g.q.a2 += w * q.a2;
        g.q.a1 += w * q.a1;
        g.q.a0 += w * q.a0;
        g.active += sign;
        if (g.active == 0) {
            groups_.erase(group);
            dirty_ = true;
        } else {
            total_.a2 += w * q.a2;
            total_.a1 += w * q.a1;
            total_.a0 += w * q.a0;
        }
    }

    const Quadratic& total()
    {
        if (dirty_) {
            total_ = {};
            for (const auto& [_, g] : groups_) {
                total_.a2 += g.q.a2;
                total_.a1 += g.q.a1;
                total_.a0 += g.q.a0;
            }
            dirty_ = false;
        }
        return total_;
    }

private:
    struct Group {
        Quadratic q;
        long active = 0;
    };
    std::map<int, Group> groups_;
    Quadratic total_;
    bool dirty_ = false;
};

/// max of lambda mu(lambda)^{1/p} over [lo, hi) for mu = q on that interval.
inline double interval_max(const Quadratic& q, double lo, double hi, double p)
{
    const auto value = [&](double lam) {
        const double mu = static_cast<double>(q(static_cast<wide>(lam)));
        return mu > 0.0 ? lam * std::pow(mu, 1.0 / p) : 0.0;
    };
    double best = std::max(value(lo), value(hi));
    // d/dl (l^p mu) = 0  <=>  (p+2) a2 l^2 + (p+1) a1 l + p a0 = 0
    const wide wp = static_cast<wide>(p);
    const wide c2 = (wp + 2) * q.a2, c1 = (wp + 1) * q.a1, c0 = wp * q.a0;
    std::array<wide, 2> roots{};
    std::size_t nr = 0;
    if (c2 == 0) {
        if (c1 != 0) {
            roots[nr++] = -c0 / c1;
        }
    } else {
        const wide disc = c1 * c1 - 4 * c2 * c0;
        if (disc >= 0) {
            const wide sq = wide_sqrt(disc);
            const wide h = -0.5 * (c1 + (c1 >= 0 ? sq : -sq));
            if (h != 0) {
                roots[nr++] = h / c2;
                roots[nr++] = c0 / h;
            }
        }
    }
    for (std::size_t i = 0; i < nr; ++i) {
        const double x = static_cast<double>(roots[i]);
        if (x > lo && x < hi) {
            best = std::max(best, value(x));
        }
    }
    return best;
}

} // namespace diagnostics_detail

/// ||u||_{L^{p,infinity}(Q_T)}, p = (d+2)/d by default, from the exact
/// distribution function of |u|.
///
/// The distribution function is piecewise quadratic in lambda. Segment
/// polynomials are accumulated over sorted breakpoints in extended precision
/// and lambda^p mu(lambda) is maximized per interval in closed form. Large
/// trajectories are swept in lambda-chunks of bounded size.
inline double function_weak_norm(const SpaceTimeFeFunction& u, std::optional<double> p_opt = std::nullopt,
                                 std::size_t chunk_events = diagnostics_detail::sweep_chunk_events)
{
    using namespace diagnostics_detail;
    const double p = p_opt.value_or(ExponentPack::make(u.mesh().dim()).weak_value());
    if (!(p > 0.0)) {
        throw ValidationError("function_weak_norm: exponent must be positive");
    }
    std::size_t segments = 0;
    for_each_distribution_segment(u, [&](const auto&, double) { ++segments; });
    if (segments == 0) {
        return 0.0;
    }

    // chunk boundaries from quantiles of a sample of segment endpoints
    std::vector<double> bounds{0.0};
    chunk_events = std::max<std::size_t>(chunk_events, 2);
    const std::size_t chunks = (2 * segments + chunk_events - 1) / chunk_events;
    if (chunks > 1) {
        const std::size_t stride = std::max<std::size_t>(1, 2 * segments / (64 * chunks));
        std::vector<double> sample;
        std::size_t i = 0;
        for_each_distribution_segment(u, [&](const levelset::DistributionSegment& s, double) {
            if (i++ % stride == 0) {
                sample.push_back(s.lo);
                sample.push_back(s.hi);
            }
        });
        std::sort(sample.begin(), sample.end());
        for (std::size_t c = 1; c < chunks; ++c) {
            const double b = sample[c * sample.size() / chunks];
            if (b > bounds.back()) {
                bounds.push_back(b);
            }
        }
    }
    bounds.push_back(std::numeric_limits<double>::infinity());

    struct Event {
        double at;
        int group;
        int sign;
        Quadratic q;
    };
    std::vector<Event> events;
    double best = 0.0;
    for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
        const double lo_c = bounds[c], hi_c = bounds[c + 1];
        ScaledAccumulator acc;
        events.clear();
        for_each_distribution_segment(u, [&](const levelset::DistributionSegment& s, double tau) {
            if (s.hi <= lo_c || s.lo >= hi_c) {
                return;
            }
            const int group = std::ilogb(s.hi);
            const Quadratic q = expand(s, static_cast<wide>(tau));
            if (s.lo <= lo_c) {
                if (s.hi >= hi_c) {
                    acc.add(group, q, 1);
                    return;
                }
                events.push_back({lo_c, group, 1, q});
            } else {
                events.push_back({s.lo, group, 1, q});
            }
            if (s.hi < hi_c) {
                events.push_back({s.hi, group, -1, q});
            }
        });
        std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.at < b.at; });
        double lo = lo_c;
        std::size_t i = 0;
        while (true) {
            while (i < events.size() && events[i].at == lo) {
                acc.add(events[i].group, events[i].q, events[i].sign);
                ++i;
            }
            const double hi = i < events.size() ? events[i].at : hi_c;
            if (!std::isfinite(hi)) {
                break;
            }
            const Quadratic& q = acc.total();
            const double mu_lo = static_cast<double>(q(static_cast<wide>(lo)));
            if (mu_lo > 0.0 && hi * std::pow(mu_lo, 1.0 / p) > best) {
                best = std::max(best, interval_max(q, lo, hi, p));
            }
            if (i == events.size()) {
                break;
            }
            lo = hi;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Renormalized residual

/// eta = 1 on [-k, k], linear down to 0 at |s| = k + 1; N is its primitive.
struct TruncationWindow {
    double k = 0.5;

    double eta(double s) const
    {
        const double a = std::abs(s);
        return a <= k ? 1.0 : std::max(0.0, k + 1.0 - a);
    }

    double eta_prime(double s) const
    {
        const double a = std::abs(s);
        return a > k && a < k + 1.0 ? (s > 0 ? -1.0 : 1.0) : 0.0;
    }

    double primitive(double s) const
    {
        const double a = std::abs(s);
        const double sg = s < 0 ? -1.0 : 1.0;
        if (a <= k) {
            return s;
        }
        if (a <= k + 1.0) {
            const double e = a - k;
            return sg * (k + e - 0.5 * e * e);
        }
        return sg * (k + 0.5);
    }
};

struct ResidualOptions {
    TruncationWindow window;
    /// Spatial profile of the test function; sin(pi x) (sin(pi y)) when empty.
    SpaceFunction profile;
    /// Gauss points per step for the source term.
    int time_points = 3;
};

struct ResidualTerms {
    /// -int int N(u) d_t v
    double time_term = 0.0;
    /// int int grad u . grad(eta(u) v)
    double diffusion_term = 0.0;
    /// int int f eta(u) v
    double source_term = 0.0;
    double residual = 0.0;
};

namespace diagnostics_detail {

/// psi(t) = 16 t^2 (T - t)^2 / T^4 and its primitive.
inline double bump_in_time(double t, double T)
{
    const double s = t * (T - t);
    return 16.0 * s * s / (T * T * T * T);
}

inline double bump_in_time_primitive(double t, double T)
{
    return 16.0 / (T * T * T * T) * (T * T * t * t * t / 3.0 - 0.5 * T * t * t * t * t + t * t * t * t * t / 5.0);
}

/// Splits an element into pieces on which the affine function with vertex
/// values v stays between consecutive cut levels.
inline std::vector<detail::SubCell> level_pieces(int dim, const std::array<double, 3>& v, std::span<const double> cuts)
{
    std::vector<detail::SubCell> out;
    if (dim == 1) {
        std::vector<double> s{0.0, 1.0};
        if (v[1] != v[0]) {
            for (const double c : cuts) {
                const double t = (c - v[0]) / (v[1] - v[0]);
                if (t > 0.0 && t < 1.0) {
                    s.push_back(t);
                }
            }
        }
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            if (s[i + 1] > s[i]) {
                out.push_back({{Barycentric{1.0 - s[i], s[i], 0.0}, Barycentric{1.0 - s[i + 1], s[i + 1], 0.0}, {}},
                               s[i + 1] - s[i]});
            }
        }
        return out;
    }
    struct Node {
        Barycentric b;
        double u;
    };
    const auto clip = [](const std::vector<Node>& poly, double level, bool keep_above) {
        std::vector<Node> res;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Node& a = poly[i];
            const Node& b = poly[(i + 1) % poly.size()];
            const bool ia = keep_above ? a.u >= level : a.u <= level;
            const bool ib = keep_above ? b.u >= level : b.u <= level;
            if (ia) {
                res.push_back(a);
            }
            if (ia != ib) {
                const double t = (level - a.u) / (b.u - a.u);
                Barycentric x;
                for (std::size_t j = 0; j < 3; ++j) {
                    x[j] = a.b[j] + t * (b.b[j] - a.b[j]);
                }
                res.push_back({x, level});
            }
        }
        return res;
    };
    std::vector<double> levels{-std::numeric_limits<double>::infinity()};
    const double lo = std::min({v[0], v[1], v[2]}), hi = std::max({v[0], v[1], v[2]});
    for (const double c : cuts) {
        if (c > lo && c < hi) {
            levels.push_back(c);
        }
    }
    std::sort(levels.begin() + 1, levels.end());
    levels.push_back(std::numeric_limits<double>::infinity());
    const std::vector<Node> tri{{{1.0, 0.0, 0.0}, v[0]}, {{0.0, 1.0, 0.0}, v[1]}, {{0.0, 0.0, 1.0}, v[2]}};
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        std::vector<Node> poly = tri;
        if (std::isfinite(levels[i])) {
            poly = clip(poly, levels[i], true);
        }
        if (std::isfinite(levels[i + 1]) && poly.size() >= 3) {
            poly = clip(poly, levels[i + 1], false);
        }
        for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
            const Barycentric& a = poly[0].b;
            const Barycentric& b = poly[j].b;
            const Barycentric& c = poly[j + 1].b;
            const double frac = std::abs((b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1]));
            if (frac > 1e-15) {
                out.push_back({{a, b, c}, frac});
            }
        }
    }
    return out;
}

} // namespace diagnostics_detail

/// Residual of the renormalized formulation for v(t, x) = psi(t) phi_h(x).
///
/// u is piecewise constant in time, so the time-derivative term is
/// -sum_n (psi(t_n) - psi(t_{n-1})) int N(u^n) phi_h. Spatial integrals are
/// exact on pieces where eta(u^n) is affine; the source term uses Gauss
/// points in time.
inline ResidualTerms renormalized_residual(const SpaceTimeFeFunction& u, const ProblemData& data,
                                           const ResidualOptions& opt = {})
{
    using namespace diagnostics_detail;
    const Mesh& mesh = u.mesh();
    const int dim = mesh.dim();
    const auto& w = opt.window;
    detail::require_level(w.k);
    const double T = u.partition().final_time();
    const SpaceFunction profile = opt.profile ? opt.profile : SpaceFunction([dim](const Point& x) {
        const double s = std::sin(std::numbers::pi * x[0]);
        return dim == 1 ? s : s * std::sin(std::numbers::pi * x[1]);
    });
    const FeFunction phi = lagrange_interpolate(mesh, profile);
    const std::array<double, 4> cuts{-w.k - 1.0, -w.k, w.k, w.k + 1.0};
    const auto& rule = reference_rule(dim, 5);
    const GaussRule tg = gauss_legendre(std::max(1, opt.time_points));
    ResidualTerms r;
    for (std::size_t n = 1; n <= u.steps(); ++n) {
        const double t0 = u.partition().node(n - 1), t1 = u.partition().node(n);
        const double dpsi = bump_in_time(t1, T) - bump_in_time(t0, T);
        const double ipsi = bump_in_time_primitive(t1, T) - bump_in_time_primitive(t0, T);
        const FeFunction& un = u[n];
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const Point gu = un.gradient(e);
            const Point gphi = phi.gradient(e);
            const double guu = dot(gu, gu), gup = dot(gu, gphi);
            auto integrand = [&](const Point& x, const Barycentric& b) {
                const double s = un.value(e, b);
                const double ph = phi.value(e, b);
                double src = 0.0;
                if (data.f) {
                    for (std::size_t g = 0; g < tg.nodes.size(); ++g) {
                        const double t = t0 + (t1 - t0) * tg.nodes[g];
                        src += tg.weights[g] * (t1 - t0) * bump_in_time(t, T) * data.f(t, x);
                    }
                    src *= w.eta(s) * ph;
                }
                return std::array<double, 3>{w.primitive(s) * ph, w.eta(s) * gup + w.eta_prime(s) * ph * guu, src};
            };
            for (const auto& piece : level_pieces(dim, un.element_values(e), cuts)) {
                const auto v = detail::apply_rule<3>(mesh, e, piece, rule, integrand);
                r.time_term -= dpsi * v[0];
                r.diffusion_term += ipsi * v[1];
                r.source_term += v[2];
            }
        }
    }
    r.residual = r.time_term + r.diffusion_term - r.source_term;
    return r;
}

// ---------------------------------------------------------------------------
// Inf-sup constant

/// Smallest generalized singular value of B with respect to the X (trial) and
/// Y (test) norms.
inline double infsup_constant(const Mesh& mesh, const TimePartition& partition,
                              JumpProduct jump = JumpProduct::lumped)
{
    const auto f = assemble_spacetime_forms(mesh, partition, jump);
    return min_generalized_singular_value(f.b, f.nx, f.ny);
}

struct InfsupRow {
    int dim = 1;
    std::size_t n = 0;
    std::size_t steps = 0;
    double h = 0.0;
    double min_tau = 0.0;
    double cq = 0.0;
    bool cfl_ok = false;
    double sigma = 0.0;
};

inline InfsupRow infsup_row(int dim, std::size_t n, std::size_t steps, double t_final, const SchemeConfig& cq_config,
                            JumpProduct jump = JumpProduct::lumped)
{
    const Mesh mesh = generate_unit_mesh(dim, n);
    const TimePartition p = build_partition(t_final, steps, cq_config.grading);
    const CflCheck c = check_reverse_cfl(mesh.h(), p, resolve_cq(mesh, cq_config));
    return {dim, n, steps, mesh.h(), p.min_tau(), c.cq, c.ok, infsup_constant(mesh, p, jump)};
}

// ---------------------------------------------------------------------------
// Studies

struct LadderLevel {
    std::size_t n = 0;
    std::size_t steps = 0;
};

/// Refinement ladder with tau close to c h^2 (h = 1/n) on [0, T].
inline std::vector<LadderLevel> parabolic_ladder(std::span<const std::size_t> ns, double t_final, double c = 1.0)
{
    std::vector<LadderLevel> l;
    for (const std::size_t n : ns) {
        const double steps = std::ceil(t_final * static_cast<double>(n * n) / c - 1e-9);
        l.push_back({n, static_cast<std::size_t>(std::max(1.0, steps))});
    }
    return l;
}

struct StudySpec {
    std::string problem = "sine1d";
    int dim = 1;
    std::vector<LadderLevel> ladder;
    /// Exponent of the L^q(W^{1,q}) norms; must stay below (d+2)/(d+1).
    double q = 1.2;
    double t_final = 0.25;
    std::uint64_t seed = default_seed;
    CqSource cq;
    CflPolicy cfl = CflPolicy::enforce;
    std::size_t cq_trials = 1000;
    CgOptions cg{1e-10, 0};

    /// nested additionally requires n and steps to divide their successors.
    void validate(bool nested = false) const
    {
        if (dim != 1 && dim != 2) {
            throw ValidationError("study: dimension must be 1 or 2");
        }
        if (ladder.empty()) {
            throw ValidationError("study: empty refinement ladder");
        }
        if (!(t_final > 0.0)) {
            throw ValidationError("study: final time must be positive");
        }
        const auto e = ExponentPack::make(dim);
        if (!(q >= 1.0) || !(q < e.qbar_value())) {
            throw ValidationError("study: q = " + Table::format(q) + " must satisfy 1 <= q < qbar = (d+2)/(d+1) = " +
                                  std::to_string(e.qbar.numerator()) + "/" + std::to_string(e.qbar.denominator()));
        }
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            if (ladder[i].n < 1 || ladder[i].steps < 1) {
                throw ValidationError("study: ladder levels need n >= 1 and steps >= 1");
            }
            if (i == 0) {
                continue;
            }
            const auto& a = ladder[i - 1];
            const auto& b = ladder[i];
            if (b.n <= a.n || b.steps < a.steps) {
                throw ValidationError("study: ladder must strictly refine in space and not coarsen in time");
            }
            if (nested && (b.n % a.n != 0 || b.steps % a.steps != 0)) {
                throw ValidationError("study: Cauchy ladders need nested meshes and partitions");
            }
        }
    }

    SchemeConfig scheme(const LadderLevel& l) const
    {
        SchemeConfig c;
        c.t_final = t_final;
        c.steps = l.steps;
        c.cq = cq;
        c.cfl = cfl;
        c.cq_trials = cq_trials;
        c.seed = seed;
        c.cg = cg;
        return c;
    }
};

struct ConvergenceRow {
    std::size_t n = 0;
    std::size_t steps = 0;
    double h = 0.0;
    double tau = 0.0;
    double err_linf_l2 = 0.0;
    double err_l2_h1 = 0.0;
    double err_linf_l1 = 0.0;
    double err_lq_w1q = 0.0;
    /// Observed orders in h against the previous row; NaN on the first row.
    double order_linf_l2 = std::numeric_limits<double>::quiet_NaN();
    double order_l2_h1 = std::numeric_limits<double>::quiet_NaN();
    double order_linf_l1 = std::numeric_limits<double>::quiet_NaN();
    double order_lq_w1q = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::vector<std::string> warnings;
};

/// Errors against the exact solution: L-infinity in time over the nodes,
/// L^2 / L^q in time with Gauss points per step.
inline ConvergenceRow trajectory_errors(const SpaceTimeFeFunction& u, const ProblemData& data, double q)
{
    if (!data.exact || !data.exact_gradient) {
        throw ValidationError("convergence study: problem '" + data.name + "' has no exact solution");
    }
    const Mesh& mesh = u.mesh();
    const QuadratureSpec spec{.order = 6, .adaptive = false};
    const GaussRule tg = gauss_legendre(2);
    ConvergenceRow r;
    r.h = mesh.h();
    r.steps = u.steps();
    r.tau = u.partition().max_tau();
    double h1 = 0.0, w1q = 0.0;
    for (std::size_t n = 0; n <= u.steps(); ++n) {
        const double t = u.partition().node(n);
        double l2 = 0.0, l1 = 0.0;
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const auto v = integrate_element<2>(
                mesh, e,
                [&](const Point& x, const Barycentric& b) {
                    const double d = u[n].value(e, b) - data.exact(t, x);
                    return std::array<double, 2>{d * d, std::abs(d)};
                },
                spec);
            l2 += v[0];
            l1 += v[1];
        }
        r.err_linf_l2 = std::max(r.err_linf_l2, std::sqrt(l2));
        r.err_linf_l1 = std::max(r.err_linf_l1, l1);
        if (n == 0) {
            continue;
        }
        const double t0 = u.partition().node(n - 1), tau = u.partition().tau(n);
        for (std::size_t g = 0; g < tg.nodes.size(); ++g) {
            const double tt = t0 + tau * tg.nodes[g];
            for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
                const Point gu = u[n].gradient(e);
                const auto v = integrate_element<2>(
                    mesh, e,
                    [&](const Point& x, const Barycentric&) {
                        const double d = length(gu - data.exact_gradient(tt, x));
                        return std::array<double, 2>{d * d, std::pow(d, q)};
                    },
                    spec);
                h1 += tg.weights[g] * tau * v[0];
                w1q += tg.weights[g] * tau * v[1];
            }
        }
    }
    r.err_l2_h1 = std::sqrt(h1);
    r.err_lq_w1q = std::pow(w1q, 1.0 / q);
    return r;
}

inline ConvergenceStudy convergence_study(const StudySpec& spec, const ProblemData& data)
{
    spec.validate();
    ConvergenceStudy s;
    for (const auto& level : spec.ladder) {
        const Mesh mesh = generate_unit_mesh(spec.dim, level.n);
        const auto res = solve(mesh, data, spec.scheme(level));
        for (const auto& w : res.warnings) {
            s.warnings.push_back("n=" + std::to_string(level.n) + ": " + w);
        }
        ConvergenceRow r = trajectory_errors(res.u, data, spec.q);
        r.n = level.n;
        if (!s.rows.empty()) {
            const auto& p = s.rows.back();
            const double lh = std::log(p.h / r.h);
            r.order_linf_l2 = std::log(p.err_linf_l2 / r.err_linf_l2) / lh;
            r.order_l2_h1 = std::log(p.err_l2_h1 / r.err_l2_h1) / lh;
            r.order_linf_l1 = std::log(p.err_linf_l1 / r.err_linf_l1) / lh;
            r.order_lq_w1q = std::log(p.err_lq_w1q / r.err_lq_w1q) / lh;
        }
        s.rows.push_back(r);
    }
    return s;
}

/// Norms of a space-time difference.
struct DifferenceNorms {
    double linf_l1 = 0.0;
    double lq_w1q = 0.0;
};

/// Differences between a trajectory and a coarser one on nested meshes and
/// partitions, compared on the finer grids through nodal interpolation.
inline DifferenceNorms nested_difference(const SpaceTimeFeFunction& fine, const SpaceTimeFeFunction& coarse, double q)
{
    const Mesh& mf = fine.mesh();
    if (fine.steps() % coarse.steps() != 0) {
        throw ValidationError("nested_difference: partitions are not nested");
    }
    const std::size_t ratio = fine.steps() / coarse.steps();
    const PointLocator locator(coarse.mesh());
    // Pi u_c^j, cached per coarse slice
    const auto lift = [&](std::size_t j) {
        FeFunction out(mf);
        for (std::size_t v = 0; v < mf.num_vertices(); ++v) {
            const auto [e, b] = locator.locate(mf.vertex(v));
            out.set(v, coarse[j].value(e, b));
        }
        return out;
    };
    DifferenceNorms d;
    FeFunction cur = lift(0);
    std::size_t cur_j = 0;
    double wq = 0.0;
    for (std::size_t m = 0; m <= fine.steps(); ++m) {
        const std::size_t j = (m + ratio - 1) / ratio;
        if (j != cur_j) {
            cur = lift(j);
            cur_j = j;
        }
        const FeFunction diff = fine[m] - cur;
        d.linf_l1 = std::max(d.linf_l1, l1_norm(diff));
        if (m == 0) {
            continue;
        }
        double s = 0.0;
        for (std::size_t e = 0; e < mf.num_elements(); ++e) {
            s += mf.measure(e) * std::pow(length(diff.gradient(e)), q);
        }
        wq += fine.partition().tau(m) * s;
    }
    d.lq_w1q = std::pow(wq, 1.0 / q);
    return d;
}

struct CauchyRow {
    std::size_t n_coarse = 0;
    std::size_t n_fine = 0;
    std::size_t steps_coarse = 0;
    std::size_t steps_fine = 0;
    DifferenceNorms diff;
};

struct CauchyStudy {
    std::vector<CauchyRow> rows;
    std::vector<std::string> warnings;

    bool strictly_decreasing() const
    {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!(rows[i].diff.linf_l1 < rows[i - 1].diff.linf_l1) ||
                !(rows[i].diff.lq_w1q < rows[i - 1].diff.lq_w1q)) {
                return false;
            }
        }
        return true;
    }
};

inline CauchyStudy cauchy_study(const StudySpec& spec, const ProblemData& data)
{
    spec.validate(true);
    if (spec.ladder.size() < 2) {
        throw ValidationError("study: a Cauchy study needs at least two levels");
    }
    CauchyStudy s;
    // meshes live on the heap so trajectories keep valid references when moved
    std::unique_ptr<Mesh> prev_mesh;
    std::optional<SpaceTimeFeFunction> prev;
    std::size_t prev_n = 0;
    for (const auto& level : spec.ladder) {
        auto mesh = std::make_unique<Mesh>(generate_unit_mesh(spec.dim, level.n));
        auto res = solve(*mesh, data, spec.scheme(level));
        for (const auto& w : res.warnings) {
            s.warnings.push_back("n=" + std::to_string(level.n) + ": " + w);
        }
        if (prev) {
            s.rows.push_back(
                {prev_n, level.n, prev->steps(), level.steps, nested_difference(res.u, *prev, spec.q)});
        }
        prev.reset();
        prev.emplace(std::move(res.u));
        prev_mesh = std::move(mesh);
        prev_n = level.n;
    }
    return s;
}

struct RegularizationRow {
    double level = 0.0;
    double data_distance = 0.0;
    DifferenceNorms diff;
};

struct RegularizationStudy {
    std::vector<RegularizationRow> rows;

    bool monotone() const
    {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].diff.linf_l1 > rows[i - 1].diff.linf_l1 || rows[i].diff.lq_w1q > rows[i - 1].diff.lq_w1q) {
                return false;
            }
        }
        return true;
    }
};

/// Fixed mesh and partition: distance between the solution for the given data
/// and the solutions for each regularized datum.
struct RegularizedInput {
    double level = 0.0;
    ProblemData data;
    double distance = 0.0;
};

inline RegularizationStudy regularization_study(const Mesh& mesh, const SchemeConfig& config,
                                                const ProblemData& reference,
                                                const std::vector<RegularizedInput>& inputs, double q)
{
    RegularizationStudy s;
    const auto ref = solve(mesh, reference, config);
    for (const auto& in : inputs) {
        const auto r = solve(mesh, in.data, config);
        s.rows.push_back({in.level, in.distance, nested_difference(ref.u, r.u, q)});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Combined report

struct DiagnoseOptions {
    std::vector<double> k_grid = dyadic_k_grid();
    std::size_t trials = 1000;
    std::uint64_t seed = default_seed;
    QuadratureSpec quad;
    ResidualOptions residual;
};

struct DiagnosticsReport {
    EstimateConstants constants;
    MonitorTable monitor;
    double linfty_l1 = 0.0;
    /// F + U + |Omega| / 2
    double linfty_l1_bound = 0.0;
    bool linfty_l1_pass = true;
    ExponentPack exponents;
    double gradient_weak_norm = 0.0;
    double function_weak_norm = 0.0;
    ResidualTerms residual;

    bool passed() const { return monitor.all_pass() && linfty_l1_pass; }
};

inline DiagnosticsReport diagnose(const Mesh& mesh, const ProblemData& data, const SpaceTimeFeFunction& u,
                                  const DiagnoseOptions& opt = {})
{
    if (&u.mesh() != &mesh) {
        throw ValidationError("diagnose: trajectory lives on a different mesh");
    }
    DiagnosticsReport r;
    r.constants =
        measure_estimate_constants(mesh, data, u.partition().final_time(), u[0], opt.trials, opt.seed, opt.quad);
    r.monitor = main_estimate_monitor(u, opt.k_grid, r.constants.F, r.constants.U);
    r.linfty_l1 = linfty_l1(u);
    r.linfty_l1_bound = r.constants.F + r.constants.U + 0.5 * mesh.domain_measure();
    r.linfty_l1_pass = r.linfty_l1 <= r.linfty_l1_bound + 1e-8;
    r.exponents = ExponentPack::make(mesh.dim());
    r.gradient_weak_norm = gradient_weak_q_norm(u);
    r.function_weak_norm = function_weak_norm(u);
    r.residual = renormalized_residual(u, data, opt.residual);
    return r;
}

// ---------------------------------------------------------------------------
// Tables

inline Table to_table(const MonitorTable& m)
{
    Table t({"k", "theta_term", "gradient_term", "lhs", "bound", "lhs_over_k", "F_plus_U", "pass"});
    for (const auto& r : m.rows) {
        t.add_row({r.k, r.theta_term, r.gradient_term, r.lhs, r.bound, r.lhs / r.k, m.F + m.U,
                   std::int64_t{r.pass}});
    }
    return t;
}

inline Table to_table(const ConvergenceStudy& s)
{
    Table t({"n", "steps", "h", "tau", "err_linf_l2", "order_linf_l2", "err_l2_h1", "order_l2_h1", "err_linf_l1",
             "order_linf_l1", "err_lq_w1q", "order_lq_w1q"});
    for (const auto& r : s.rows) {
        t.add_row({static_cast<std::int64_t>(r.n), static_cast<std::int64_t>(r.steps), r.h, r.tau, r.err_linf_l2,
                   r.order_linf_l2, r.err_l2_h1, r.order_l2_h1, r.err_linf_l1, r.order_linf_l1, r.err_lq_w1q,
                   r.order_lq_w1q});
    }
    return t;
}

inline Table to_table(const CauchyStudy& s)
{
    Table t({"n_coarse", "n_fine", "steps_coarse", "steps_fine", "diff_linf_l1", "diff_lq_w1q"});
    for (const auto& r : s.rows) {
        t.add_row({static_cast<std::int64_t>(r.n_coarse), static_cast<std::int64_t>(r.n_fine),
                   static_cast<std::int64_t>(r.steps_coarse), static_cast<std::int64_t>(r.steps_fine),
                   r.diff.linf_l1, r.diff.lq_w1q});
    }
    return t;
}

inline Table to_table(const RegularizationStudy& s)
{
    Table t({"level", "data_distance", "diff_linf_l1", "diff_lq_w1q"});
    for (const auto& r : s.rows) {
        t.add_row({r.level, r.data_distance, r.diff.linf_l1, r.diff.lq_w1q});
    }
    return t;
}

inline Table to_table(const std::vector<InfsupRow>& rows)
{
    Table t({"dim", "n", "steps", "h", "min_tau", "cq", "cfl_ok", "sigma_min"});
    for (const auto& r : rows) {
        t.add_row({std::int64_t{r.dim}, static_cast<std::int64_t>(r.n), static_cast<std::int64_t>(r.steps), r.h,
                   r.min_tau, r.cq, std::int64_t{r.cfl_ok}, r.sigma});
    }
    return t;
}

} // namespace l1heat
