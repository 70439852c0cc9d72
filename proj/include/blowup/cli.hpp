#pragma once

// Command-line front end: check / transform / solve / sequences / oracle /
// report. Every command resolves a config, executes, writes a run directory
// (resolved config copy, summary.json, CSV tables) and prints the JSON
// summary to stdout. Outputs carry no timestamps, so reruns are
// byte-identical.
//
// Exit codes: 0 success, 1 usage, 2 config/expression parse error,
// 3 verdict NoSolutionExpected, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blowup/annulus.hpp"
#include "blowup/config.hpp"
#include "blowup/criteria.hpp"
#include "blowup/io.hpp"
#include "blowup/ode.hpp"
#include "blowup/transform.hpp"

namespace blowup {

namespace cli_detail {

using json = nlohmann::ordered_json;

inline std::vector<double> split_numbers(const std::string& text, std::size_t count,
                                         const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ':')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(piece, &used));
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            throw ConfigError(what + ": '" + piece + "' is not a number");
        }
    }
    if (out.size() != count)
        throw ConfigError(what + ": expected " + std::to_string(count) +
                          " colon-separated values");
    return out;
}

// Deepen r_min until the transform's t-range covers t_needed (< 0).
inline TransformMap covering_transform(const ProblemSpec& spec, double t_needed) {
    double r_min = spec.r0;
    for (int i = 0; i < 60; ++i) {
        TransformMap map = build_transform(spec, r_min);
        if (map.t_min() < t_needed * (1.0 + 1e-6) - 1e-300) return map;
        r_min *= 0.5;
    }
    throw OutOfRange("anchor t is outside the reachable range of p");
}

inline std::filesystem::path prepare_run_dir(const RunConfig& cfg,
                                             const std::filesystem::path& cfg_path,
                                             const std::string& command) {
    const std::filesystem::path root =
        cfg.output_dir.empty() ? std::filesystem::path("runs") : std::filesystem::path(cfg.output_dir);
    const std::filesystem::path dir = root / (cfg_path.stem().string() + "-" + command);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create run directory '" + dir.string() + "'");
    write_file_atomic(dir / "config.resolved.cfg", cfg.resolved_text());
    return dir;
}

inline void emit_summary(const std::filesystem::path& dir, const json& summary) {
    const std::string text = summary.dump(2) + "\n";
    write_file_atomic(dir / "summary.json", text);
    std::cout << text;
}

inline json trajectory_csv(const TransformMap& map, const OdeSolution& sol,
                           const std::filesystem::path& path) {
    std::vector<double> r, u;
    r.reserve(sol.t.size());
    u.reserve(sol.t.size());
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        r.push_back(map.eval_p_inverse(sol.t[i]));
        u.push_back(sol.z[i]);
    }
    write_file_atomic(path, csv_table("t,z,zprime,r,u", {sol.t, sol.z, sol.zp, r, u}));
    json j;
    j["classification"] = to_string(sol.classification);
    j["samples"] = sol.t.size();
    j["slope_at_anchor"] = sol.zp.empty() ? 0.0 : sol.zp.front();
    if (sol.blowup) {
        j["t_star"] = sol.blowup->t_star;
        j["alpha"] = sol.blowup->alpha;
    }
    return j;
}

// ---- subcommands ---------------------------------------------------------

inline int cmd_check(const std::filesystem::path& cfg_path) {
    const RunConfig cfg = load_config(cfg_path);
    const CriterionReport rep = assemble_report(cfg.spec);
    const std::filesystem::path dir = prepare_run_dir(cfg, cfg_path, "check");

    json j;
    j["command"] = "check";
    j["config"] = cfg_path.filename().string();
    j["n"] = cfg.spec.n;
    j["verdict"] = to_string(rep.verdict);
    j["growth"] = {{"finite", rep.growth_finite},
                   {"value", rep.growth_finite ? rep.growth.value : 0.0}};
    j["positivity_pass"] = rep.c1.pass;
    j["superlinearity"] = {{"pass", rep.c2.pass}, {"lambda_hat", rep.c2.lambda_hat}};
    j["monotonicity"] = to_string(rep.c3.kind);
    json ex = json::array();
    for (const ExistenceVerdict& v : rep.existence)
        ex.push_back({{"s", v.s}, {"finite", v.finite}, {"value", v.finite ? v.value : 0.0}});
    j["existence"] = ex;
    if (rep.klk_residual) j["identity_residual"] = *rep.klk_residual;
    if (rep.s_hat) j["s_hat"] = *rep.s_hat;
    if (rep.F_superlinear)
        j["F_superlinear"] = {{"pass", rep.F_superlinear->pass},
                              {"lambda_hat", rep.F_superlinear->lambda_hat}};
    if (rep.Fz_superlinear)
        j["Fz_superlinear"] = {{"pass", rep.Fz_superlinear->pass},
                               {"lambda_hat", rep.Fz_superlinear->lambda_hat}};
    if (rep.F_t_monotone) j["F_t_monotone"] = to_string(rep.F_t_monotone->kind);
    emit_summary(dir, j);
    // 0 when a radial large solution is expected, 3 when ruled out, 4 when
    // the numerical evidence is mixed.
    if (rep.verdict == Verdict::NoSolutionExpected) return 3;
    return rep.verdict == Verdict::ExistsRadial ? 0 : 4;
}

inline int cmd_transform(const std::filesystem::path& cfg_path, const std::string& r_grid) {
    const RunConfig cfg = load_config(cfg_path);
    const std::vector<double> abn = split_numbers(r_grid, 3, "--r-grid");
    const double a = abn[0], b = abn[1];
    const int N = static_cast<int>(abn[2]);
    if (!(a > 0.0) || !(b > a) || N < 2 || abn[2] != std::floor(abn[2]))
        throw ConfigError("--r-grid requires 0 < a < b and integer N >= 2");

    const TransformMap map = build_transform(cfg.spec, std::min(a, cfg.spec.r0));
    std::vector<double> r(static_cast<std::size_t>(N)), t(r.size()), pp(r.size());
    for (int i = 0; i < N; ++i) {
        r[static_cast<std::size_t>(i)] = a + (b - a) * i / (N - 1);
        t[static_cast<std::size_t>(i)] = map.eval_p(r[static_cast<std::size_t>(i)]);
        pp[static_cast<std::size_t>(i)] = map.derivative(r[static_cast<std::size_t>(i)]);
    }
    const std::filesystem::path dir = prepare_run_dir(cfg, cfg_path, "transform");
    write_file_atomic(dir / "transform.csv", csv_table("r,t,p_prime", {r, t, pp}));

    json j;
    j["command"] = "transform";
    j["config"] = cfg_path.filename().string();
    j["r_min"] = map.r_min();
    j["t_min"] = map.t_min();
    j["grid"] = {{"a", a}, {"b", b}, {"N", N}};
    j["t_at_a"] = t.front();
    j["t_at_b"] = t.back();
    emit_summary(dir, j);
    return 0;
}

inline int cmd_solve(const std::filesystem::path& cfg_path, const std::string& anchor,
                     const std::string& mode, std::optional<double> rho) {
    const RunConfig cfg = load_config(cfg_path);
    const std::vector<double> tz = split_numbers(anchor, 2, "--anchor");
    const double t_bar = tz[0], z_bar = tz[1];
    if (!(t_bar < 0.0) || !(z_bar > 0.0))
        throw ConfigError("--anchor requires t < 0 and z > 0");
    if (mode != "minimal" && mode != "shoot")
        throw ConfigError("--mode must be 'minimal' or 'shoot'");
    if (mode == "shoot" && !rho) throw ConfigError("--mode shoot requires --rho");

    const TransformMap map = covering_transform(cfg.spec, t_bar);
    const TransformedField field{&map};
    IvpControl ctrl;
    ctrl.tol = cfg.tol;

    const std::filesystem::path dir = prepare_run_dir(cfg, cfg_path, "solve-" + mode);
    json j;
    j["command"] = "solve";
    j["config"] = cfg_path.filename().string();
    j["mode"] = mode;
    j["anchor"] = {{"t", t_bar}, {"z", z_bar}};
    if (mode == "minimal") {
        const OdeSolution sol = minimal_large_solution(field, t_bar, z_bar, ctrl);
        j["trajectory"] = trajectory_csv(map, sol, dir / "solution.csv");
    } else {
        if (!(*rho > t_bar) || !(*rho < 0.0))
            throw ConfigError("--rho must lie in (anchor t, 0)");
        const ShootingResult res = shoot_blowup_at(field, t_bar, z_bar, *rho, ctrl);
        j["rho"] = *rho;
        j["slope"] = res.slope;
        j["achieved_rho"] = res.achieved_rho;
        j["iterations"] = res.iterations;
        j["trajectory"] = trajectory_csv(map, res.solution, dir / "solution.csv");
    }
    emit_summary(dir, j);
    return 0;
}

inline int cmd_sequences(const std::filesystem::path& cfg_path, int K, double m, double M) {
    const RunConfig cfg = load_config(cfg_path);
    if (K < 1) throw ConfigError("--k must be >= 1");
    if (!(m > 0.0) || !(M > m)) throw ConfigError("require 0 < m < M");

    // Anchor the boundary data at t = p(r0), computed from a deeper table so
    // the anchor is interior to the transform's range.
    TransformMap probe = build_transform(cfg.spec, cfg.spec.r0);
    const double t_bar = probe.t_min();
    const TransformMap map = covering_transform(cfg.spec, t_bar);
    const TransformedField field{&map};
    IvpControl ctrl;
    ctrl.tol = cfg.tol;

    const SequencePair seq = build_sequences(field, t_bar, m, M, K, ctrl);
    const std::filesystem::path dir = prepare_run_dir(cfg, cfg_path, "sequences");

    json j;
    j["command"] = "sequences";
    j["config"] = cfg_path.filename().string();
    j["t_bar"] = t_bar;
    j["K"] = K;
    j["m"] = m;
    j["M"] = M;
    j["rho"] = seq.rho;
    j["bounded_slopes"] = seq.bounded_slopes;
    j["orderings_ok"] = seq.orderings_ok;
    j["max_order_violation"] = seq.max_order_violation;
    json traj;
    traj["z0"] = trajectory_csv(map, seq.bounded_limit, dir / "z0.csv");
    traj["Z0"] = trajectory_csv(map, seq.blowing_limit, dir / "Z0.csv");
    for (int k = 0; k < K; ++k) {
        const std::string zk = "z" + std::to_string(k + 1);
        const std::string Zk = "Z" + std::to_string(k + 1);
        traj[zk] = trajectory_csv(map, seq.bounded[static_cast<std::size_t>(k)], dir / (zk + ".csv"));
        traj[Zk] = trajectory_csv(map, seq.blowing[static_cast<std::size_t>(k)].solution,
                                  dir / (Zk + ".csv"));
    }
    j["trajectories"] = traj;
    emit_summary(dir, j);
    return 0;
}

inline RadialProfile read_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read profile '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header)) throw ConfigError("empty profile CSV");
    int r_col = -1, u_col = -1, col = 0;
    std::stringstream hs(header);
    std::string name;
    while (std::getline(hs, name, ',')) {
        if (name == "r") r_col = col;
        if (name == "u") u_col = col;
        ++col;
    }
    if (r_col < 0 || u_col < 0)
        throw ConfigError("profile CSV needs 'r' and 'u' columns in its header");
    RadialProfile prof;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        int c = 0;
        double rv = 0.0, uv = 0.0;
        while (std::getline(ls, cell, ',')) {
            if (c == r_col) rv = std::stod(cell);
            if (c == u_col) uv = std::stod(cell);
            ++c;
        }
        prof.r.push_back(rv);
        prof.u.push_back(uv);
    }
    if (prof.r.size() < 4) throw ConfigError("profile CSV has fewer than 4 rows");
    return prof;
}

inline int cmd_oracle(const std::filesystem::path& cfg_path, const std::string& annulus,
                      const std::string& grid_arg, double bc_in, double bc_out,
                      std::optional<double> perturb,
                      const std::optional<std::string>& compare) {
    const RunConfig cfg = load_config(cfg_path);
    const std::vector<double> rio = split_numbers(annulus, 2, "--annulus");
    const std::vector<double> nn = split_numbers(grid_arg, 2, "--grid");
    AnnulusGrid grid;
    grid.r_in = rio[0];
    grid.r_out = rio[1];
    grid.Nr = static_cast<int>(nn[0]);
    grid.Ntheta = static_cast<int>(nn[1]);
    if (nn[0] != std::floor(nn[0]) || nn[1] != std::floor(nn[1]))
        throw ConfigError("--grid expects integers Nr:Ntheta");

    AnnulusInit init;
    if (perturb) {
        init.perturbed = true;
        init.eps = *perturb;
    }
    OracleControl ctrl;
    ctrl.tol = cfg.tol;
    const AnnulusSolution sol =
        solve_annulus(cfg.spec, grid, {bc_in}, {bc_out}, init, std::nullopt, ctrl);

    const std::filesystem::path dir = prepare_run_dir(cfg, cfg_path, "oracle");
    std::vector<double> rc, thc, uc;
    rc.reserve(sol.u.size());
    thc.reserve(sol.u.size());
    uc.reserve(sol.u.size());
    for (int i = 0; i < grid.Nr; ++i)
        for (int jj = 0; jj < grid.Ntheta; ++jj) {
            rc.push_back(grid.radius(i));
            thc.push_back(grid.angle(jj));
            uc.push_back(sol.at(i, jj));
        }
    write_file_atomic(dir / "field.csv", csv_table("r,theta,u", {rc, thc, uc}));

    json j;
    j["command"] = "oracle";
    j["config"] = cfg_path.filename().string();
    j["grid"] = {{"r_in", grid.r_in}, {"r_out", grid.r_out},
                 {"Nr", grid.Nr}, {"Ntheta", grid.Ntheta}};
    j["residual"] = sol.residual_sup;
    j["iterations"] = sol.newton_iterations;
    double tv = 0.0;
    for (double v : sol.theta_variation) tv = std::max(tv, v);
    j["theta_variation"] = tv;
    if (compare) {
        const RadialProfile prof = read_profile_csv(*compare);
        j["comparison_deviation"] = compare_with_radial(sol, prof);
    }
    emit_summary(dir, j);
    return 0;
}

inline int cmd_report(const std::filesystem::path& run_dir) {
    const std::filesystem::path file = run_dir / "summary.json";
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("no summary.json in '" + run_dir.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("corrupt summary.json: ") + e.what());
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace cli_detail

inline int run_command(const std::vector<std::string>& args) {
    CLI::App app{"blowup-lab: radial blow-up solutions of div-form convection problems"};
    app.require_subcommand(1);

    std::string cfg_check, cfg_transform, cfg_solve, cfg_sequences, cfg_oracle;
    std::string r_grid, anchor, mode = "minimal", annulus, grid_arg, run_dir;
    std::optional<double> rho, perturb;
    std::optional<std::string> compare;
    int K = 3;
    double m = 1.0, M = 2.0, bc_in = 1.0, bc_out = 1.0;

    CLI::App* c_check = app.add_subcommand("check", "evaluate the existence criteria");
    c_check->add_option("config", cfg_check)->required();

    CLI::App* c_tr = app.add_subcommand("transform", "tabulate p, p^{-1}, p'");
    c_tr->add_option("config", cfg_transform)->required();
    c_tr->add_option("--r-grid", r_grid, "a:b:N")->required();

    CLI::App* c_solve = app.add_subcommand("solve", "integrate the transformed field");
    c_solve->add_option("config", cfg_solve)->required();
    c_solve->add_option("--anchor", anchor, "t:z")->required();
    c_solve->add_option("--mode", mode, "minimal | shoot");
    c_solve->add_option("--rho", rho, "target blow-up position (shoot mode)");

    CLI::App* c_seq = app.add_subcommand("sequences", "bounded/blowing solution ladders");
    c_seq->add_option("config", cfg_sequences)->required();
    c_seq->add_option("--k", K, "ladder depth")->required();
    c_seq->add_option("--m", m, "lower boundary datum")->required();
    c_seq->add_option("--M", M, "upper boundary datum")->required();

    CLI::App* c_or = app.add_subcommand("oracle", "finite-difference annulus check");
    c_or->add_option("config", cfg_oracle)->required();
    c_or->add_option("--annulus", annulus, "rin:rout")->required();
    c_or->add_option("--grid", grid_arg, "Nr:Ntheta")->required();
    c_or->add_option("--bc-in", bc_in)->required();
    c_or->add_option("--bc-out", bc_out)->required();
    c_or->add_option("--perturb", perturb, "non-radial initialization amplitude");
    c_or->add_option("--compare", compare, "radial profile CSV with r,u columns");

    CLI::App* c_rep = app.add_subcommand("report", "re-print a run summary");
    c_rep->add_option("run_dir", run_dir)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_check->parsed()) return cli_detail::cmd_check(cfg_check);
        if (c_tr->parsed()) return cli_detail::cmd_transform(cfg_transform, r_grid);
        if (c_solve->parsed()) return cli_detail::cmd_solve(cfg_solve, anchor, mode, rho);
        if (c_seq->parsed()) return cli_detail::cmd_sequences(cfg_sequences, K, m, M);
        if (c_or->parsed())
            return cli_detail::cmd_oracle(cfg_oracle, annulus, grid_arg, bc_in, bc_out,
                                          perturb, compare);
        if (c_rep->parsed()) return cli_detail::cmd_report(run_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.error_class() == ErrorClass::Parse ? 2 : 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}

inline int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

}  // namespace blowup
