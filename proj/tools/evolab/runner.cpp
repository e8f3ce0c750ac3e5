#include "runner.hpp"

#include "svg.hpp"

#include "evolab/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace evolab::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v, const char* f = "%.12g")
{
    char buf[40];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string status(const CheckOutcome& o)
{
    if (o.skipped)
        return "SKIP";
    return o.pass ? "PASS" : "FAIL";
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    return out;
}

void write_table(const fs::path& path, const CsvTable& table)
{
    auto out = open_output(path);
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << num(row[i]);
        out << "\n";
    }
}

std::string solve_line(std::size_t index, const TimePair& pr, const Field& u, const std::vector<std::size_t>& window)
{
    double sup_window = 0.0;
    for (std::size_t k : window)
        sup_window = std::max(sup_window, std::abs(u.values[k]));
    return "solve pair=" + std::to_string(index) + " s=" + num(pr.s) + " t=" + num(pr.t) +
           " sup_window=" + num(sup_window) + " sup_box=" + num(u.sup_norm());
}

std::string verdict_line(const CompactnessVerdict& v)
{
    std::ostringstream s;
    s << "compactness verdict=" << v.label();
    if (!v.ran) {
        s << " refused_by=" << v.refused_by;
        return s.str();
    }
    s << " gamma=" << num(v.gamma) << " c_prime=" << num(v.c_prime) << " l=" << v.l << " shift=" << num(v.shift)
      << " mass_constant=" << num(v.mass_constant) << " y_bar=" << num(v.bound.y_bar)
      << " sup_p_phi=" << num(v.sup_p_phi) << " clip_error=" << num(v.clip_error)
      << " kernel_side=" << (v.kernel_side ? "true" : "false") << " decays=" << (v.decays ? "true" : "false");
    return s.str();
}

/// Returns true when every configured item passed.
bool write_outputs(const ExperimentConfig& cfg, const std::vector<std::string>& hypothesis_lines,
                   const std::vector<std::string>& solve_lines, const std::vector<CheckOutcome>& outcomes,
                   const std::optional<Harness::CompactnessRun>& compactness,
                   const std::optional<Harness::TightnessFamily>& family, std::ostream& out)
{
    const fs::path dir(cfg.output.dir);
    bool ok = true;

    auto report = open_output(dir / "report.txt");
    for (const auto& l : hypothesis_lines)
        report << l << "\n";
    for (const auto& l : solve_lines)
        report << l << "\n";
    for (const auto& o : outcomes) {
        report << o.line() << "\n";
        // A skip must carry its routing reason.
        ok = ok && (o.skipped ? !o.reason.empty() : o.pass);
    }

    {
        auto csv = open_output(dir / "summary.csv");
        csv << "id,anchor,status,value,relation,expected,tol,runtime_s\n";
        for (const auto& o : outcomes)
            csv << o.id << "," << o.anchor << "," << status(o) << "," << num(o.value) << "," << o.relation << ","
                << num(o.expected) << "," << num(o.tol) << "," << num(o.runtime, "%.3f") << "\n";
    }
    for (const auto& o : outcomes)
        if (!o.table.columns.empty())
            write_table(dir / (o.id + ".csv"), o.table);

    if (compactness) {
        const auto& v = compactness->verdict;
        report << verdict_line(v) << "\n";
        CsvTable t{{"radius", "inf_phi", "bound", "kernel_bound", "measured"}, {}};
        for (const auto& row : v.rows) {
            report << "tail radius=" << num(row.radius) << " inf_phi=" << num(row.inf_phi)
                   << " bound=" << num(row.bound) << " kernel_bound=" << num(row.kernel_bound)
                   << " measured=" << num(row.measured) << " pass=" << (row.pass ? "true" : "false") << "\n";
            t.rows.push_back({row.radius, row.inf_phi, row.bound, row.kernel_bound, row.measured});
        }
        if (v.ran)
            write_table(dir / "compactness.csv", t);
        ok = ok && v.consistent;
        if (cfg.output.svg && v.ran) {
            Series measured{"measured sup tail", {}, {}};
            Series bound{"y_bar / inf phi", {}, {}};
            for (const auto& row : v.rows) {
                measured.x.push_back(row.radius);
                measured.y.push_back(row.measured);
                bound.x.push_back(row.radius);
                bound.y.push_back(row.bound);
            }
            write_line_plot(dir / "tail_decay.svg", "Tail mass outside B(0, R)", "R", "mass", {measured, bound},
                            true);
        }
    }
    if (family) {
        report << "tightness_family pairs=" << family->pairs << " base_points=" << family->base_points
               << " decreasing=" << (family->decreasing ? "true" : "false");
        for (std::size_t i = 0; i < family->radii.size(); ++i)
            report << " R" << num(family->radii[i]) << "=" << num(family->sup_tail[i]);
        report << "\n";
        CsvTable t{{"radius", "sup_tail"}, {}};
        for (std::size_t i = 0; i < family->radii.size(); ++i)
            t.rows.push_back({family->radii[i], family->sup_tail[i]});
        write_table(dir / "tightness_family.csv", t);
        ok = ok && family->decreasing;
    }
    if (cfg.output.svg) {
        for (const auto& o : outcomes) {
            if (o.id != "not_c0" || o.table.rows.empty() || o.table.columns.size() < 2)
                continue;
            Series mass{"G(t,s)1", {}, {}};
            for (const auto& row : o.table.rows) {
                mass.x.push_back(row[0]);
                mass.y.push_back(row.back());
            }
            write_line_plot(dir / "mass.svg", "Mass profile", o.table.columns.front(), o.table.columns.back(),
                            {mass}, false);
        }
    }

    out << "check                     status  value            relation expected     runtime_s\n";
    for (const auto& o : outcomes) {
        char line[160];
        std::snprintf(line, sizeof line, "%-25s %-7s %-16.9g %-8s %-12.6g %.2f\n", o.id.c_str(), status(o).c_str(),
                      o.value, o.relation.c_str(), o.expected, o.runtime);
        out << line;
    }
    if (compactness)
        out << "compactness: " << compactness->verdict.label() << "\n";
    if (family)
        out << "tightness family: " << (family->decreasing ? "decreasing" : "not decreasing") << "\n";
    out << "report: " << (dir / "report.txt").string() << "\n";
    return ok;
}

}  // namespace

void list_checks(std::ostream& out)
{
    for (const auto& c : check_catalog())
        out << c.id << " anchor=" << c.anchor << "  " << c.summary << "\n";
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        fs::create_directories(cfg.output.dir);
        auto echo = open_output(fs::path(cfg.output.dir) / "config.json");
        echo << normalized_text(cfg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }

    Harness harness(cfg.setup);
    const HarnessSetup& s = cfg.setup;
    std::string stage = "hypotheses";
    try {
        std::vector<std::string> hypothesis_lines;
        for (const auto& r : harness.hypothesis_reports())
            hypothesis_lines.push_back(r.serialize());

        stage = "solve";
        std::vector<std::string> solve_lines;
        const Grid grid = s.grid();
        const auto window = window_nodes(grid, s.window_half);
        const SolveConfig solve_cfg{Boundary::Neumann, s.dt};
        for (std::size_t i = 0; i < s.pairs.size(); ++i) {
            const TimePair pr = s.pairs[i];
            const Field u = solve(s.op, solve_cfg, sample(grid, s.expr(s.datum), pr.s), pr.t);
            solve_lines.push_back(solve_line(i, pr, u, window));
        }

        stage = "checks";
        const auto outcomes = harness.run_all(cfg.checks, cfg.workers);

        std::optional<Harness::CompactnessRun> compactness;
        std::optional<Harness::TightnessFamily> family;
        if (cfg.compactness) {
            stage = "compactness";
            compactness = harness.compactness();
        }
        if (cfg.tightness_family) {
            stage = "tightness_family";
            family = harness.tightness_family();
        }
        const bool ok = write_outputs(cfg, hypothesis_lines, solve_lines, outcomes, compactness, family, out);
        return ok ? exit_pass : exit_check_failed;
    } catch (const CheckAborted& e) {
        err << "fatal: check " << e.id() << ": " << e.what() << "\n";
        return exit_numeric_error;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const Error& e) {
        err << "fatal: " << stage << ": " << e.what() << "\n";
        return exit_numeric_error;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Evolution-operator verification runner"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    int workers = 0;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    auto* workers_opt = run->add_option("--workers", workers, "Concurrent checks")->check(CLI::PositiveNumber);
    auto* out_opt = run->add_option("--out", out_dir, "Output directory");
    auto* seed_opt = run->add_option("--seed-override", seed, "Replace every configured seed");
    auto* echo_flag = run->add_flag("--echo", "Print the normalized config and exit");
    auto* list = app.add_subcommand("list-checks", "List check ids with their anchors");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_pass;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return exit_config_error;
    }

    if (list->parsed()) {
        list_checks(out);
        return exit_pass;
    }

    if (workers_opt->count())
        overrides.workers = workers;
    if (out_opt->count())
        overrides.out_dir = out_dir;
    if (seed_opt->count())
        overrides.seed = seed;

    std::optional<ExperimentConfig> cfg;
    try {
        auto doc = read_json_file(config_path);
        apply_overrides(doc, overrides);
        try {
            cfg = parse_config(doc);
        } catch (const ConfigError& e) {
            throw ConfigError(config_path + ": " + e.what());
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    if (echo_flag->count()) {
        out << normalized_text(*cfg);
        return exit_pass;
    }
    return run_experiment(*cfg, out, err);
}

}  // namespace evolab::cli
