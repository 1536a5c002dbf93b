#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "freeknot/config.hpp"
#include "freeknot/csv.hpp"
#include "freeknot/problems.hpp"
#include "freeknot/svg.hpp"

namespace freeknot {

/// Paper sweep of constant step sizes; the scheduler warms each one up.
inline std::vector<double> default_lr_sweep() {
    return {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4};
}

struct run_config {
    std::string problem = "approx1d";
    std::vector<int> degrees{1, 2, 3};
    std::string patches = "1";
    std::vector<int> sizes{16, 32, 64}; // cells per axis per patch
    std::vector<double> lrs = default_lr_sweep();
    std::uint64_t seed = 0;
    long max_iters = -1; // -1: 1000, or 3000 above 1000 DOFs
    double h_min = 1e-6;
    std::string outdir = "out";
    int threads = 1;
    bool fixed_wall = false; // report wall_s as 0 for bitwise-reproducible summaries
    bool plots = false;
};

inline run_config run_config_from(const flat_config& cfg) {
    run_config rc;
    rc.problem = cfg.get("problem", rc.problem);
    if (cfg.has("degrees")) rc.degrees = cfg.get_int_list("degrees");
    rc.patches = cfg.get("patches", rc.patches);
    if (cfg.has("sizes")) rc.sizes = cfg.get_int_list("sizes");
    if (cfg.has("lrs")) rc.lrs = cfg.get_double_list("lrs");
    rc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    rc.max_iters = cfg.get_int("max_iters", -1);
    rc.h_min = cfg.get_double("h_min", 1e-6);
    rc.outdir = cfg.get("outdir", rc.outdir);
    rc.threads = static_cast<int>(cfg.get_int("threads", 1));
    rc.fixed_wall = cfg.get_bool("fixed_wall", false);
    rc.plots = cfg.get_bool("plots", false);
    if (rc.lrs.empty()) throw io_error("learning-rate list must not be empty");
    return rc;
}

/// "3" (1D), "4" (square layout), or explicit "2x2".
inline std::vector<int> parse_patch_layout(const std::string& spec, int dim) {
    std::vector<int> layout;
    const auto x = spec.find('x');
    if (x != std::string::npos) {
        layout.push_back(std::stoi(spec.substr(0, x)));
        layout.push_back(std::stoi(spec.substr(x + 1)));
        if (dim != 2) throw io_error("RxC patch layouts need a 2D problem");
    } else {
        const int r = std::stoi(spec);
        if (dim == 1) {
            layout = {r};
        } else {
            const int side = static_cast<int>(std::lround(std::sqrt(double(r))));
            if (side * side != r)
                throw io_error("2D patch count must be a square or an explicit RxC layout");
            layout = {side, side};
        }
    }
    for (int r : layout)
        if (r < 1) throw io_error("patch layout entries must be positive");
    return layout;
}

/// One summary row; adapted columns stay empty when the optimisation was
/// gated off or could not run.
struct convergence_record {
    std::string experiment;
    int degree = 0;
    int patches = 1;
    long n_dofs = 0;
    long n_free_knots = 0;
    std::string lr; // empty for skipped rows
    long iters = 0;
    double energy = 0.0;
    double err_energy_uniform = 0.0;
    std::optional<double> err_energy_adapted;
    double err_l2_uniform = 0.0;
    std::optional<double> err_l2_adapted;
    double wall_s = 0.0;
    bool skipped = false;
    bool aborted = false;
    std::string note;
};

inline constexpr const char* summary_header =
    "experiment,degree,patches,n_dofs,n_free_knots,lr,iters,energy,err_energy_uniform,"
    "err_energy_adapted,err_l2_uniform,err_l2_adapted,wall_s";

inline std::string to_csv_row(const convergence_record& r) {
    std::string row = r.experiment;
    row += ',' + std::to_string(r.degree);
    row += ',' + std::to_string(r.patches);
    row += ',' + std::to_string(r.n_dofs);
    row += ',' + std::to_string(r.n_free_knots);
    row += ',' + r.lr;
    row += ',' + std::to_string(r.iters);
    row += ',' + format_double(r.energy);
    row += ',' + format_double(r.err_energy_uniform);
    row += ',';
    if (r.err_energy_adapted) row += format_double(*r.err_energy_adapted);
    row += ',' + format_double(r.err_l2_uniform);
    row += ',';
    if (r.err_l2_adapted) row += format_double(*r.err_l2_adapted);
    row += ',' + format_fixed(r.wall_s, 3);
    return row;
}

/// Uniform-emulating space for the problem kind at the given resolution.
inline multi_patch_space build_space(const problem_spec& problem,
                                     const std::vector<int>& layout, int cells, int degree) {
    if (problem.kind == problem_kind::poisson)
        return init_uniform_poisson(problem.domain, layout, cells - 1 + 2 * degree, degree);
    return init_uniform_approx(problem.domain, layout, cells + 1 + 2 * degree, degree);
}

namespace detail {

inline void write_trace_csv(const std::string& path, const minimise_result& res) {
    std::ofstream os(path);
    os << "iter,energy,best_energy,displacement,cross_patch_h";
    if (!res.trace.empty())
        for (std::size_t k = 0; k < res.trace.front().knots.size(); ++k) os << ",k" << k;
    os << '\n';
    for (const auto& row : res.trace) {
        os << row.iter << ',' << format_double(row.energy) << ','
           << format_double(row.best_energy) << ',' << format_double(row.displacement) << ','
           << format_double(row.cross_gap);
        for (double v : row.knots) os << ',' << format_double(v);
        os << '\n';
    }
}

inline std::string lr_tag(double lr) {
    std::string s = format_double(lr);
    for (auto& c : s)
        if (c == '.' || c == '-' || c == '+') c = '_';
    return s;
}

} // namespace detail

/// One (degree, size) experiment: uniform baseline, learning-rate sweep,
/// best-iterate metrics. Trace files land in `outdir`.
inline convergence_record run_single(const run_config& rc, const problem_spec& problem,
                                     const separable_form& form,
                                     const std::vector<int>& layout, int degree, int cells) {
    convergence_record rec;
    rec.experiment = rc.problem;
    rec.degree = degree;
    const auto t0 = std::chrono::steady_clock::now();

    multi_patch_space space;
    try {
        space = build_space(problem, layout, cells, degree);
    } catch (const error& e) {
        rec.skipped = true;
        rec.note = e.what();
        return rec;
    }
    rec.patches = space.patch_count();
    rec.n_dofs = space.dim_weights();
    rec.n_free_knots = static_cast<long>(space.free_knots().size());

    auto op = assemble(space, form);
    auto uniform = cg_solve([&](const Eigen::VectorXd& y) { return op.apply(y); }, op.F,
                            Eigen::VectorXd::Zero(space.dim_weights()), 1e-12,
                            20 * static_cast<int>(space.dim_weights()) + 200);
    const double uniform_energy = energy_value(op, uniform.W);
    auto uniform_err = error_metrics(problem, space, form, uniform.W);
    rec.err_energy_uniform = uniform_err.energy_norm;
    rec.err_l2_uniform = uniform_err.l2;
    rec.energy = uniform_energy;

    std::string gate_reason;
    if (!degree_gate_ok(problem, space, &gate_reason)) {
        rec.skipped = true;
        rec.note = gate_reason;
        const auto t1 = std::chrono::steady_clock::now();
        rec.wall_s = rc.fixed_wall ? 0.0 : std::chrono::duration<double>(t1 - t0).count();
        return rec;
    }

    optim_config ocfg;
    ocfg.stop_tol = (problem.dim() == 1) ? 1e-6 : 1e-4;
    ocfg.max_iters = rc.max_iters > 0 ? static_cast<int>(rc.max_iters)
                                      : (space.dim_weights() > 1000 ? 3000 : 1000);
    auto fset = build_feasible_set(
        space, problem.kind == problem_kind::poisson ? constraint_mode::poisson
                                                     : constraint_mode::approx,
        rc.h_min);

    double best_energy = std::numeric_limits<double>::infinity();
    minimise_result best;
    double best_lr = 0.0;
    for (double lr : rc.lrs) {
        ocfg.lr = lr;
        auto res = minimise(space, form, fset, ocfg);
        detail::write_trace_csv(rc.outdir + "/trace_" + rc.problem + "_p" +
                                    std::to_string(degree) + "_n" + std::to_string(cells) +
                                    "_lr" + detail::lr_tag(lr) + ".csv",
                                res);
        rec.aborted = rec.aborted || res.aborted;
        if (res.best_energy < best_energy) {
            best_energy = res.best_energy;
            best = std::move(res);
            best_lr = lr;
        }
    }

    rec.lr = format_double(best_lr);
    rec.iters = best.iterations;
    if (!best.best_xi.empty() && std::isfinite(best.best_energy)) {
        auto adapted = space;
        adapted.set_free_knots(best.best_xi);
        auto aop = assemble(adapted, form);
        auto sol = cg_solve([&](const Eigen::VectorXd& y) { return aop.apply(y); }, aop.F,
                            best.best_W, 1e-12,
                            20 * static_cast<int>(adapted.dim_weights()) + 200);
        rec.energy = std::min(best.best_energy, energy_value(aop, sol.W));
        auto adapted_err = error_metrics(problem, adapted, form, sol.W);
        rec.err_energy_adapted = adapted_err.energy_norm;
        rec.err_l2_adapted = adapted_err.l2;
        std::ofstream snap(rc.outdir + "/space_" + rc.problem + "_p" +
                           std::to_string(degree) + "_n" + std::to_string(cells) + ".txt");
        save_space(adapted, snap);
    }

    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_s = rc.fixed_wall ? 0.0 : std::chrono::duration<double>(t1 - t0).count();
    return rec;
}

struct run_outcome {
    std::vector<convergence_record> records;
    bool any_aborted = false;
};

/// Full grid of (degree, size) runs; summary.csv rows appear in config
/// order regardless of the thread count.
inline run_outcome run_experiments(const run_config& rc) {
    std::filesystem::create_directories(rc.outdir);
    const auto problem = make_problem(rc.problem);
    const auto form = build_form(problem);
    const auto layout = parse_patch_layout(rc.patches, problem.dim());

    struct combo {
        int degree, cells;
    };
    std::vector<combo> combos;
    for (int degree : rc.degrees)
        for (int cells : rc.sizes) combos.push_back({degree, cells});

    run_outcome out;
    out.records.resize(combos.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= combos.size()) break;
            out.records[i] =
                run_single(rc, problem, form, layout, combos[i].degree, combos[i].cells);
        }
    };
    const int threads = std::max(1, rc.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::ofstream os(rc.outdir + "/summary.csv");
    os << summary_header << '\n';
    for (const auto& rec : out.records) {
        os << to_csv_row(rec) << '\n';
        out.any_aborted = out.any_aborted || rec.aborted;
    }
    return out;
}

/// Log-log convergence plot from summary rows: solid uniform, dashed
/// adapted, one colour per degree.
inline std::string plot_convergence_svg(const std::vector<convergence_record>& records,
                                        const std::string& title, bool use_l2 = false) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
    svg_plot plot(title, "linear DOFs", use_l2 ? "L2 error" : "energy-norm error", true, true);
    std::vector<int> degrees;
    for (const auto& r : records)
        if (std::find(degrees.begin(), degrees.end(), r.degree) == degrees.end())
            degrees.push_back(r.degree);
    for (std::size_t k = 0; k < degrees.size(); ++k) {
        svg_plot::series uni, ada;
        uni.color = ada.color = colors[k % 6];
        uni.label = "p=" + std::to_string(degrees[k]) + " uniform";
        ada.label = "p=" + std::to_string(degrees[k]) + " adapted";
        ada.dashed = true;
        for (const auto& r : records) {
            if (r.degree != degrees[k]) continue;
            const double eu = use_l2 ? r.err_l2_uniform : r.err_energy_uniform;
            if (eu > 0) uni.points.emplace_back(double(r.n_dofs), eu);
            const auto ea = use_l2 ? r.err_l2_adapted : r.err_energy_adapted;
            if (ea && *ea > 0) ada.points.emplace_back(double(r.n_dofs), *ea);
        }
        if (!uni.points.empty()) plot.add_series(std::move(uni));
        if (!ada.points.empty()) plot.add_series(std::move(ada));
    }
    return plot.render();
}

/// Knot-position trajectories over the iterations of one run (1D).
inline std::string plot_knot_trajectories_svg(std::istream& trace_csv,
                                              const std::string& title) {
    std::string line;
    if (!std::getline(trace_csv, line)) throw io_error("empty trace file");
    const auto header = split_csv_line(line);
    std::size_t first_knot = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "k0") {
            first_knot = i;
            break;
        }
    if (first_knot == header.size()) throw io_error("trace has no knot columns");
    const std::size_t n_knots = header.size() - first_knot;
    std::vector<svg_plot::series> trajs(n_knots);
    while (std::getline(trace_csv, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const double it = std::stod(cells[0]);
        for (std::size_t k = 0; k < n_knots; ++k)
            trajs[k].points.emplace_back(std::stod(cells[first_knot + k]), it);
    }
    svg_plot plot(title, "knot position", "iteration", false, false);
    for (auto& t : trajs) {
        t.color = "#1f77b4";
        plot.add_series(std::move(t));
    }
    return plot.render();
}

/// Parse summary.csv back into records (for the plot subcommand).
inline std::vector<convergence_record> read_summary_csv(std::istream& is) {
    std::vector<convergence_record> out;
    std::string line;
    if (!std::getline(is, line)) throw io_error("empty summary file");
    if (line != summary_header) throw io_error("unexpected summary header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 13) throw io_error("bad summary row: " + line);
        convergence_record r;
        r.experiment = c[0];
        r.degree = std::stoi(c[1]);
        r.patches = std::stoi(c[2]);
        r.n_dofs = std::stol(c[3]);
        r.n_free_knots = std::stol(c[4]);
        r.lr = c[5];
        r.iters = std::stol(c[6]);
        r.energy = std::stod(c[7]);
        r.err_energy_uniform = std::stod(c[8]);
        if (!c[9].empty()) r.err_energy_adapted = std::stod(c[9]);
        r.err_l2_uniform = std::stod(c[10]);
        if (!c[11].empty()) r.err_l2_adapted = std::stod(c[11]);
        r.wall_s = std::stod(c[12]);
        r.skipped = c[9].empty();
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace freeknot
