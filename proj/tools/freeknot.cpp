// Experiment runner: r-adaptive free-knot B-spline approximation at desk
// scale. Subcommands: run (convergence studies with a learning-rate
// sweep), verify (numerical checks of the analytic bounds), plot (SVG
// rendering of summaries and knot trajectories), project-test (projection
// property check on random instances).
#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "freeknot/freeknot.hpp"

namespace {

using namespace freeknot;

int cmd_run(const flat_config& file_cfg) {
    run_config rc = run_config_from(file_cfg);
    try {
        auto outcome = run_experiments(rc);
        int skipped = 0;
        for (const auto& r : outcome.records) {
            if (r.skipped) {
                ++skipped;
                std::cerr << "skipped " << r.experiment << " p=" << r.degree
                          << " n_dofs=" << r.n_dofs << ": " << r.note << '\n';
            }
        }
        std::cout << rc.outdir << "/summary.csv: " << outcome.records.size() << " rows ("
                  << skipped << " skipped)\n";
        if (rc.plots) {
            std::ofstream os(rc.outdir + "/convergence.svg");
            os << plot_convergence_svg(outcome.records, rc.problem);
            std::cout << rc.outdir << "/convergence.svg written\n";
        }
        return outcome.any_aborted ? 2 : 0;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

int cmd_verify(const std::string& lemma, int p_lo, int p_hi, int samples, double h_min,
               std::uint64_t seed, const std::string& csv_path) {
    std::vector<bound_report> reports;
    for (int p = p_lo; p <= p_hi; ++p) {
        if (lemma == "boundedness" || lemma == "all")
            reports.push_back(check_boundedness(p, samples, h_min, seed));
        if (lemma == "holder" || lemma == "all")
            reports.push_back(check_holder(p, samples, h_min, seed));
        if ((lemma == "interchange" || lemma == "all") && p >= 1)
            reports.push_back(check_interchange(p, samples, h_min, seed));
    }
    std::cout << format_reports(reports);
    if (!csv_path.empty()) {
        std::ofstream os(csv_path);
        reports_to_csv(reports, os);
    }
    for (const auto& r : reports)
        if (!r.pass()) return 1;
    return 0;
}

int cmd_plot(const std::string& summary, const std::string& out, bool use_l2,
             const std::string& trace, const std::string& knots_out) {
    try {
        if (!summary.empty()) {
            std::ifstream is(summary);
            if (!is) throw io_error("cannot open " + summary);
            auto records = read_summary_csv(is);
            const std::string title = records.empty() ? "convergence" : records[0].experiment;
            std::ofstream os(out);
            os << plot_convergence_svg(records, title, use_l2);
            std::cout << out << " written\n";
        }
        if (!trace.empty()) {
            std::ifstream is(trace);
            if (!is) throw io_error("cannot open " + trace);
            std::ofstream os(knots_out);
            os << plot_knot_trajectories_svg(is, "knot trajectories");
            std::cout << knots_out << " written\n";
        }
        return 0;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

int cmd_project_test(int instances, int max_knots, std::uint64_t seed) {
    rng r(seed);
    const double inf = std::numeric_limits<double>::infinity();
    double worst_violation = 0.0, worst_drift = 0.0;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = r.uniform_int(1, max_knots);
        chain_segment seg;
        seg.first_free = 0;
        seg.gap = r.uniform(0.0, 0.3);
        std::vector<double> witness(n);
        witness[0] = r.uniform(-1, 1);
        for (int i = 1; i < n; ++i) witness[i] = witness[i - 1] + seg.gap + r.uniform(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            seg.lower.push_back(r.uniform() < 0.6 ? witness[i] - r.uniform(0.0, 2.0) : -inf);
            seg.upper.push_back(r.uniform() < 0.6 ? witness[i] + r.uniform(0.0, 2.0) : inf);
        }
        feasible_set fs;
        fs.n_free = n;
        fs.h_min = seg.gap;
        fs.segments.push_back(seg);

        std::vector<double> cand(n);
        for (auto& v : cand) v = r.uniform(-4, 8);
        const auto proj = fs.project(cand);
        worst_violation = std::max(worst_violation, fs.max_violation(proj));
        const auto again = fs.project(proj);
        for (int i = 0; i < n; ++i)
            worst_drift = std::max(worst_drift, std::abs(again[i] - proj[i]));
    }
    std::cout << "projection over " << instances << " random instances\n"
              << "  worst constraint violation: " << worst_violation << '\n'
              << "  worst idempotence drift:    " << worst_drift << '\n';
    const bool ok = worst_violation <= 1e-12 && worst_drift <= 1e-10;
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"r-adaptive free-knot B-spline experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a convergence study");
    std::string config_path, problem, patches, outdir, degrees, sizes, lrs;
    long seed = -1, max_iters = 0;
    int threads = 0;
    bool fixed_wall = false, plots = false;
    run->add_option("--config", config_path, "flat key = value config file");
    run->add_option("--problem", problem, "benchmark name");
    run->add_option("--degrees", degrees, "comma-separated degree list");
    run->add_option("--sizes", sizes, "comma-separated cells-per-axis list");
    run->add_option("--patches", patches, "patch layout: r or RxC");
    run->add_option("--lr", lrs, "narrow the learning-rate sweep (comma-separated)");
    run->add_option("--seed", seed, "seed recorded with the run");
    run->add_option("--max-iters", max_iters, "override the iteration budget");
    run->add_option("--out", outdir, "output directory");
    run->add_option("--threads", threads, "parallel runs (default FREEKNOT_THREADS or 1)");
    run->add_flag("--fixed-wall", fixed_wall, "write wall_s as 0 for bitwise-identical output");
    run->add_flag("--plots", plots, "render convergence.svg after the run");

    // verify
    auto* verify = app.add_subcommand("verify", "check the analytic bounds numerically");
    std::string lemma = "all", verify_csv;
    int vp = -1, samples = 1000;
    double h_min = 0.05;
    long vseed = 0;
    verify->add_option("--lemma", lemma, "boundedness|holder|interchange|all")
        ->check(CLI::IsMember({"boundedness", "holder", "interchange", "all"}));
    verify->add_option("--p", vp, "single degree (default: 0..5)");
    verify->add_option("--samples", samples, "samples per degree");
    verify->add_option("--h-min", h_min, "mesh-size floor for the sampled knot vectors");
    verify->add_option("--seed", vseed, "sampling seed");
    verify->add_option("--csv", verify_csv, "also write the report as CSV");

    // plot
    auto* plot = app.add_subcommand("plot", "render SVG plots from run outputs");
    std::string summary, plot_out = "convergence.svg", trace, knots_out = "knots.svg";
    bool use_l2 = false;
    plot->add_option("--summary", summary, "summary.csv to plot");
    plot->add_option("--out", plot_out, "output SVG for the convergence plot");
    plot->add_flag("--l2", use_l2, "plot the L2 error instead of the energy norm");
    plot->add_option("--trace", trace, "per-iteration trace CSV (1D knot trajectories)");
    plot->add_option("--knots-out", knots_out, "output SVG for the trajectories");

    // project-test
    auto* ptest = app.add_subcommand("project-test", "projection properties on random data");
    int instances = 500, max_knots = 6;
    long pseed = 0;
    ptest->add_option("--instances", instances, "number of random instances");
    ptest->add_option("--max-knots", max_knots, "free knots per instance");
    ptest->add_option("--seed", pseed, "sampling seed");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        flat_config cfg;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) {
                std::cerr << "error: cannot open " << config_path << '\n';
                return 2;
            }
            try {
                cfg = flat_config::parse(is);
            } catch (const freeknot::error& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
        }
        if (!problem.empty()) cfg.set("problem", problem);
        if (!degrees.empty()) cfg.set("degrees", degrees);
        if (!sizes.empty()) cfg.set("sizes", sizes);
        if (!patches.empty()) cfg.set("patches", patches);
        if (!lrs.empty()) cfg.set("lrs", lrs);
        if (seed >= 0) cfg.set("seed", std::to_string(seed));
        if (max_iters > 0) cfg.set("max_iters", std::to_string(max_iters));
        if (!outdir.empty()) cfg.set("outdir", outdir);
        if (fixed_wall) cfg.set("fixed_wall", "1");
        if (plots) cfg.set("plots", "1");
        if (threads > 0)
            cfg.set("threads", std::to_string(threads));
        else if (!cfg.has("threads")) {
            const char* env = std::getenv("FREEKNOT_THREADS");
            cfg.set("threads", env ? env : "1");
        }
        return cmd_run(cfg);
    }
    if (verify->parsed()) {
        const int lo = (vp >= 0) ? vp : 0;
        const int hi = (vp >= 0) ? vp : 5;
        return cmd_verify(lemma, lo, hi, samples, h_min, static_cast<std::uint64_t>(vseed),
                          verify_csv);
    }
    if (plot->parsed()) return cmd_plot(summary, plot_out, use_l2, trace, knots_out);
    if (ptest->parsed())
        return cmd_project_test(instances, max_knots, static_cast<std::uint64_t>(pseed));
    return 0;
}
