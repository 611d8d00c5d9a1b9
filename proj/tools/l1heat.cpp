// Command-line front end: mesh checks, solves, diagnostics, inf-sup sweeps and
// refinement studies. Tables are written as CSV into --out.

#include "l1heat/l1heat.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace l1heat;

namespace {

enum Exit : int { ok = 0, check_failed = 1, usage = 2, numerical = 3 };

struct Common {
    int dim = 1;
    std::size_t n = 16;
    std::size_t nt = 64;
    double t_final = 0.25;
    std::string problem = "sine";
    std::string cfl = "enforce";
    std::string cq = "auto";
    double q = 1.2;
    std::string out = ".";
    std::uint64_t seed = default_seed;
    std::size_t trials = 1000;
};

void add_common(CLI::App& app, Common& c, bool discretization = true)
{
    app.add_option("--dim", c.dim, "Space dimension")->check(CLI::IsMember({1, 2}))->capture_default_str();
    if (discretization) {
        app.add_option("--n", c.n, "Cells per unit length")->check(CLI::PositiveNumber)->capture_default_str();
        app.add_option("--nt", c.nt, "Time steps")->check(CLI::PositiveNumber)->capture_default_str();
        app.add_option("--problem", c.problem, "Registry entry, e.g. sine, dirac(0.0625), spike-rhs(1.5)")
            ->capture_default_str();
    }
    app.add_option("--t-final", c.t_final, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--cfl", c.cfl, "Reverse CFL policy")->check(CLI::IsMember({"enforce", "warn"}))
        ->capture_default_str();
    app.add_option("--cq", c.cq, "Lumping constant: a value, auto (sampled) or exact")->capture_default_str();
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--seed", c.seed, "Seed of the sampled constants")->capture_default_str();
    app.add_option("--trials", c.trials, "Samples per measured constant")->check(CLI::PositiveNumber)
        ->capture_default_str();
}

CqSource parse_cq(const std::string& s)
{
    if (s == "auto") {
        return CqSource::measured();
    }
    if (s == "exact") {
        return CqSource::exact();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !(v > 0.0) || !std::isfinite(v)) {
        throw ParseError("--cq expects a positive number, 'auto' or 'exact', got '" + s + "'");
    }
    return CqSource::fixed(v);
}

SchemeConfig scheme_config(const Common& c)
{
    SchemeConfig s;
    s.t_final = c.t_final;
    s.steps = c.nt;
    s.cfl = c.cfl == "warn" ? CflPolicy::warn : CflPolicy::enforce;
    s.cq = parse_cq(c.cq);
    s.cq_trials = c.trials;
    s.seed = c.seed;
    return s;
}

std::string output_path(const Common& c, const std::string& file)
{
    std::filesystem::create_directories(c.out);
    return (std::filesystem::path(c.out) / file).string();
}

void save(const Table& t, const Common& c, const std::string& file)
{
    const std::string p = output_path(c, file);
    t.save(p);
    std::cout << "wrote " << p << "\n";
}

void print_warnings(const std::vector<std::string>& w)
{
    for (const auto& s : w) {
        std::cerr << "warning: " << s << "\n";
    }
}

void print_cfl(const CflCheck& c)
{
    std::cout << "reverse CFL: h^2 = " << Table::format(c.h2) << ", bound min tau / (4 C_Q^2) = "
              << Table::format(c.bound) << " with C_Q = " << Table::format(c.cq) << (c.ok ? " (ok)" : " (violated)")
              << "\n";
}

// ---------------------------------------------------------------------------

struct MeshCheckArgs {
    std::optional<std::size_t> unit_square;
    std::optional<std::size_t> interval;
    std::string file;
};

int cmd_mesh_check(const MeshCheckArgs& a)
{
    const int given = int{a.unit_square.has_value()} + int{a.interval.has_value()} + int{!a.file.empty()};
    if (given != 1) {
        throw ParseError("mesh-check: give exactly one of --unit-square, --interval or a mesh file");
    }
    std::optional<Mesh> mesh;
    if (a.unit_square) {
        mesh.emplace(generate_unit_square_mesh(*a.unit_square));
    } else if (a.interval) {
        mesh.emplace(generate_interval_mesh(*a.interval));
    } else {
        std::ifstream f(a.file);
        if (!f) {
            throw ParseError("cannot open mesh file '" + a.file + "'");
        }
        std::stringstream s;
        s << f.rdbuf();
        mesh.emplace(load_mesh(s.str()));
    }
    const auto r = check_quality(*mesh);
    std::cout << "dimension " << mesh->dim() << ", " << mesh->num_vertices() << " vertices, " << mesh->num_elements()
              << " elements, h = " << Table::format(mesh->h()) << "\n"
              << "max angle (rad): " << Table::format(r.max_dihedral_angle) << "\n"
              << "nonobtuse: " << (r.is_nonobtuse ? "yes" : "no") << "\n"
              << "quasi-uniformity ratio: " << Table::format(r.quasiuniformity_ratio) << "\n"
              << "max off-diagonal stiffness: " << Table::format(r.offdiag_stiffness_max) << "\n";
    if (r.degenerate_element) {
        std::cout << "near-degenerate element: " << *r.degenerate_element << "\n";
    }
    return r.is_nonobtuse ? ok : check_failed;
}

int cmd_solve(const Common& c, bool dump)
{
    const Mesh mesh = generate_unit_mesh(c.dim, c.n);
    const auto data = make_problem(c.problem, c.dim);
    const auto res = solve(mesh, data, scheme_config(c));
    print_cfl(res.cfl);
    print_warnings(res.warnings);
    Table t({"step", "t", "l1", "l2", "h1_seminorm"});
    for (std::size_t n = 0; n <= res.u.steps(); ++n) {
        const auto s = norms(res.u[n]);
        t.add_row({static_cast<std::int64_t>(n), res.u.partition().node(n), s.l1, s.l2, s.h1_semi});
    }
    save(t, c, "solve.csv");
    if (dump) {
        Table d({"step", "t", "vertex", "x", "y", "u"});
        for (std::size_t n = 0; n <= res.u.steps(); ++n) {
            for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
                d.add_row({static_cast<std::int64_t>(n), res.u.partition().node(n), static_cast<std::int64_t>(v),
                           mesh.vertex(v)[0], mesh.vertex(v)[1], res.u[n][v]});
            }
        }
        save(d, c, "nodal.csv");
    }
    return ok;
}

int cmd_diagnose(const Common& c, int k_lo, int k_hi)
{
    if (k_hi < k_lo) {
        throw ParseError("diagnose: empty k grid (--k-hi below --k-lo)");
    }
    const Mesh mesh = generate_unit_mesh(c.dim, c.n);
    const auto data = make_problem(c.problem, c.dim);
    const auto res = solve(mesh, data, scheme_config(c));
    print_cfl(res.cfl);
    print_warnings(res.warnings);
    DiagnoseOptions opt;
    opt.k_grid = dyadic_k_grid(k_lo, k_hi);
    opt.trials = c.trials;
    opt.seed = c.seed;
    const auto r = diagnose(mesh, data, res.u, opt);
    if (!r.constants.quadrature.clean()) {
        std::cerr << "warning: quadrature of the data norms hit the subdivision limit in "
                  << r.constants.quadrature.depth_limited_cells << " cells\n";
    }
    save(to_table(r.monitor), c, "monitor.csv");
    Table s({"quantity", "value"});
    const auto row = [&](const std::string& k, Table::Cell v) { s.add_row({k, std::move(v)}); };
    row("c1", r.constants.c1);
    row("cp", r.constants.cp);
    row("u0_l1", r.constants.u0_l1);
    row("F", r.constants.F);
    row("U", r.constants.U);
    row("monitor_pass", std::int64_t{r.monitor.all_pass()});
    row("linfty_l1", r.linfty_l1);
    row("linfty_l1_bound", r.linfty_l1_bound);
    row("linfty_l1_pass", std::int64_t{r.linfty_l1_pass});
    row("qbar", r.exponents.qbar_value());
    row("weak_exponent", r.exponents.weak_value());
    row("gradient_weak_norm", r.gradient_weak_norm);
    row("function_weak_norm", r.function_weak_norm);
    row("residual_time", r.residual.time_term);
    row("residual_diffusion", r.residual.diffusion_term);
    row("residual_source", r.residual.source_term);
    row("residual", r.residual.residual);
    save(s, c, "diagnostics.csv");
    std::cout << "F = " << Table::format(r.constants.F) << ", U = " << Table::format(r.constants.U)
              << ", monitor " << (r.monitor.all_pass() ? "passed" : "FAILED") << ", max_n ||u^n||_L1 = "
              << Table::format(r.linfty_l1) << " (bound " << Table::format(r.linfty_l1_bound) << ")\n";
    return r.passed() ? ok : check_failed;
}

int cmd_infsup(const Common& c, const std::vector<std::size_t>& ns, const std::vector<std::size_t>& nts,
               const std::string& jump)
{
    SchemeConfig cq;
    cq.cq = parse_cq(c.cq);
    cq.cq_trials = c.trials;
    cq.seed = c.seed;
    const JumpProduct j = jump == "consistent" ? JumpProduct::consistent : JumpProduct::lumped;
    const double target = j == JumpProduct::consistent ? 1.0 - 1e-8 : 0.5 - 1e-8;
    std::vector<InfsupRow> rows;
    bool pass = true;
    for (const std::size_t n : ns) {
        for (const std::size_t nt : nts) {
            const auto r = infsup_row(c.dim, n, nt, c.t_final, cq, j);
            std::cout << "n = " << n << ", steps = " << nt << ": sigma_min = " << Table::format(r.sigma)
                      << (r.cfl_ok ? "" : " (reverse CFL violated, not checked)") << "\n";
            if ((r.cfl_ok || j == JumpProduct::consistent) && r.sigma < target) {
                pass = false;
            }
            rows.push_back(r);
        }
    }
    save(to_table(rows), c, "infsup.csv");
    return pass ? ok : check_failed;
}

int cmd_study(const Common& c, const std::string& kind, const std::vector<std::size_t>& ns,
              const std::vector<std::size_t>& nts, double ladder_c)
{
    StudySpec s;
    s.problem = c.problem;
    s.dim = c.dim;
    s.q = c.q;
    s.t_final = c.t_final;
    s.seed = c.seed;
    s.cq = parse_cq(c.cq);
    s.cfl = c.cfl == "warn" ? CflPolicy::warn : CflPolicy::enforce;
    s.cq_trials = c.trials;
    if (!nts.empty()) {
        if (nts.size() != ns.size()) {
            throw ParseError("study: --nt needs one entry per --n level");
        }
        for (std::size_t i = 0; i < ns.size(); ++i) {
            s.ladder.push_back({ns[i], nts[i]});
        }
    } else {
        s.ladder = parabolic_ladder(ns, c.t_final, ladder_c);
    }
    const auto data = make_problem(c.problem, c.dim);
    if (kind == "convergence") {
        const auto st = convergence_study(s, data);
        print_warnings(st.warnings);
        save(to_table(st), c, "convergence.csv");
        for (const auto& r : st.rows) {
            std::cout << "n = " << r.n << ": L2(H1) error " << Table::format(r.err_l2_h1) << ", order "
                      << Table::format(r.order_l2_h1) << "; Linf(L2) error " << Table::format(r.err_linf_l2)
                      << ", order " << Table::format(r.order_linf_l2) << "\n";
        }
        return ok;
    }
    const auto st = cauchy_study(s, data);
    print_warnings(st.warnings);
    save(to_table(st), c, "cauchy.csv");
    for (const auto& r : st.rows) {
        std::cout << "n = " << r.n_coarse << " -> " << r.n_fine << ": Linf(L1) " << Table::format(r.diff.linf_l1)
                  << ", Lq(W1q) " << Table::format(r.diff.lq_w1q) << "\n";
    }
    std::cout << "differences " << (st.strictly_decreasing() ? "strictly decrease" : "do NOT strictly decrease")
              << "\n";
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mass-lumped implicit Euler for the heat equation with L1 data"};
    app.require_subcommand(1);

    MeshCheckArgs mc;
    auto* mesh_check = app.add_subcommand("mesh-check", "Report mesh quality; exit 1 unless nonobtuse");
    mesh_check->add_option("--unit-square", mc.unit_square, "Generated n x n unit square")
        ->check(CLI::PositiveNumber);
    mesh_check->add_option("--interval", mc.interval, "Generated unit interval with n cells")
        ->check(CLI::PositiveNumber);
    mesh_check->add_option("file", mc.file, "Mesh file");

    Common solve_c;
    bool dump = false;
    auto* solve_cmd = app.add_subcommand("solve", "Solve and write per-step norms");
    add_common(*solve_cmd, solve_c);
    solve_cmd->add_flag("--dump", dump, "Also write every nodal value");

    Common diag_c;
    int k_lo = -4, k_hi = 8;
    auto* diag = app.add_subcommand("diagnose", "Solve, then run the estimate monitors");
    add_common(*diag, diag_c);
    diag->add_option("--k-lo", k_lo, "Smallest k = 2^k-lo")->capture_default_str();
    diag->add_option("--k-hi", k_hi, "Largest k = 2^k-hi")->capture_default_str();

    Common inf_c;
    std::vector<std::size_t> inf_ns{4, 8, 16}, inf_nts{1, 4, 16};
    std::string jump = "lumped";
    auto* infsup = app.add_subcommand("infsup", "Inf-sup constants of the space-time form");
    add_common(*infsup, inf_c, false);
    infsup->add_option("--n", inf_ns, "Mesh sizes")->capture_default_str();
    infsup->add_option("--nt", inf_nts, "Step counts")->capture_default_str();
    infsup->add_option("--jump", jump, "Inner product of the jump terms")
        ->check(CLI::IsMember({"lumped", "consistent"}))
        ->capture_default_str();

    Common study_c;
    std::string kind = "convergence";
    std::vector<std::size_t> study_ns{8, 16, 32, 64}, study_nts;
    double ladder_c = 1.0;
    auto* study = app.add_subcommand("study", "Refinement studies");
    add_common(*study, study_c, false);
    study->add_option("--problem", study_c.problem, "Registry entry")->capture_default_str();
    study->add_option("--q", study_c.q, "Exponent of the L^q(W^{1,q}) norms")->capture_default_str();
    study->add_option("--kind", kind, "convergence (needs an exact solution) or cauchy")
        ->check(CLI::IsMember({"convergence", "cauchy"}))
        ->capture_default_str();
    study->add_option("--n", study_ns, "Ladder of mesh sizes")->capture_default_str();
    study->add_option("--nt", study_nts, "Steps per level; default ceil(T n^2 / c)");
    study->add_option("--c", ladder_c, "Ratio tau / h^2 of the default ladder")->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*mesh_check) {
            return cmd_mesh_check(mc);
        }
        if (*solve_cmd) {
            return cmd_solve(solve_c, dump);
        }
        if (*diag) {
            return cmd_diagnose(diag_c, k_lo, k_hi);
        }
        if (*infsup) {
            return cmd_infsup(inf_c, inf_ns, inf_nts, jump);
        }
        return cmd_study(study_c, kind, study_ns, study_nts, ladder_c);
    } catch (const CflViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return check_failed;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const SizeLimitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
}
