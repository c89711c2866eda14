#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "output.hpp"
#include "singstep/verify.hpp"

namespace singstep::cli {

int exit_code(solver::Status status)
{
    switch (status) {
    case solver::Status::ConvergedRoot: return kExitRoot;
    case solver::Status::ConvergedSingular: return kExitSingular;
    default: return kExitOther;
    }
}

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        out[key] = value;
    }
    return out;
}

// Fills options the command line left unset. Flags always win.
void apply_config(CLI::App& cmd, const std::string& path)
{
    if (path.empty()) return;
    for (const auto& [key, value] : parse_config(read_file(path))) {
        CLI::Option* opt = cmd.get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") throw UsageError("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size())
            throw UsageError(what + ": '" + t + "' is not a number");
        out.push_back(v);
    }
    return out;
}

struct ProblemArgs {
    std::string name;
    std::string poly;
};

ProblemDefinition load_problem(const ProblemArgs& a, const std::string& fallback = {})
{
    if (!a.poly.empty()) return load_polynomial_system(read_file(a.poly), a.poly);
    const std::string name = a.name.empty() ? fallback : a.name;
    if (name.empty()) throw UsageError("one of --problem or --poly is required");
    try {
        return find_builtin(name);
    } catch (const NotApplicable& e) {
        throw UsageError(e.what());
    }
}

std::string problem_label(const ProblemArgs& a, const std::string& fallback = {})
{
    if (!a.poly.empty()) return a.poly;
    return a.name.empty() ? fallback : a.name;
}

void add_problem_options(CLI::App& cmd, ProblemArgs& a, const std::string& default_name = {})
{
    auto* p = cmd.add_option("--problem", a.name, "Builtin problem name");
    if (!default_name.empty()) p->default_str(default_name);
    auto* f = cmd.add_option("--poly", a.poly, "Polynomial system file");
    p->excludes(f);
}

struct SolverArgs {
    std::string rule = "es";
    solver::SolverConfig config;
};

void add_solver_options(CLI::App& cmd, SolverArgs& a)
{
    cmd.add_option("--rule", a.rule, "Stepsize rule: full, es, as, hybrid")->capture_default_str();
    cmd.add_option("--tol-root", a.config.tol_root)->capture_default_str();
    cmd.add_option("--tol-singular-g", a.config.tol_singular_g)->capture_default_str();
    cmd.add_option("--tol-sigma-ratio", a.config.tol_sigma_ratio)->capture_default_str();
    cmd.add_option("--lambda-min", a.config.lambda_min)->capture_default_str();
    cmd.add_option("--max-iter", a.config.max_iter)->capture_default_str();
    cmd.add_option("--agreement-factor", a.config.agreement_factor)->capture_default_str();
    cmd.add_option("--rank-tol", a.config.rank_tol)->capture_default_str();
}

solver::SolverConfig finish_config(SolverArgs& a)
{
    try {
        a.config.rule = solver::parse_rule(a.rule);
        a.config.validate();
    } catch (const NotApplicable& e) {
        throw UsageError(e.what());
    }
    return a.config;
}

std::vector<std::pair<std::string, std::string>> config_entries(const solver::SolverConfig& c)
{
    return {
        {"rule", std::string(solver::to_string(c.rule))},
        {"tol_root", output::format_double(c.tol_root)},
        {"tol_singular_g", output::format_double(c.tol_singular_g)},
        {"tol_sigma_ratio", output::format_double(c.tol_sigma_ratio)},
        {"lambda_min", output::format_double(c.lambda_min)},
        {"max_iter", std::to_string(c.max_iter)},
        {"agreement_factor", output::format_double(c.agreement_factor)},
        {"rank_tol", output::format_double(c.rank_tol)},
    };
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

struct Box {
    double xmin, xmax, ymin, ymax;
};

Box parse_box(const std::string& text)
{
    const std::vector<double> v = parse_list(text, "--box");
    if (v.size() != 4) throw UsageError("--box needs xmin,xmax,ymin,ymax");
    if (!(v[0] < v[1]) || !(v[2] < v[3])) throw UsageError("--box bounds must increase");
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Damped Newton solver with singularity-aware stepsize control", "singstep"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    // solve
    ProblemArgs solve_problem;
    SolverArgs solve_solver;
    std::string solve_x0, solve_out, solve_config;
    CLI::App* solve = app.add_subcommand("solve", "Run one damped Newton trajectory (JSON lines)");
    add_problem_options(*solve, solve_problem);
    solve->add_option("--x0", solve_x0, "Start point, comma separated")->required();
    add_solver_options(*solve, solve_solver);
    solve->add_option("--out", solve_out, "Output file (default stdout)");
    solve->add_option("--config", solve_config, "File of 'key = value' defaults");

    // grid
    ProblemArgs grid_problem;
    SolverArgs grid_solver;
    std::string grid_box = "-1.5,1.5,-1.5,1.5", grid_out, grid_config;
    int grid_res = 31;
    CLI::App* grid = app.add_subcommand("grid", "Solve from every point of a start grid (CSV)");
    add_problem_options(*grid, grid_problem, "expsin");
    grid->add_option("--box", grid_box, "xmin,xmax,ymin,ymax")->capture_default_str();
    grid->add_option("--res", grid_res, "Points per axis")->capture_default_str();
    add_solver_options(*grid, grid_solver);
    grid->add_option("--out", grid_out, "Output file (default stdout)");
    grid->add_option("--config", grid_config, "File of 'key = value' defaults");

    // field
    ProblemArgs field_problem;
    std::string field_box = "-1,1,-1,1", field_out, field_config;
    int field_res = 101;
    double field_rank_tol = linalg::kDefaultRankTol;
    CLI::App* field = app.add_subcommand("field", "Evaluate the singularity indicator on a grid (CSV)");
    add_problem_options(*field, field_problem);
    field->add_option("--box", field_box, "xmin,xmax,ymin,ymax")->capture_default_str();
    field->add_option("--res", field_res, "Points per axis")->capture_default_str();
    field->add_option("--rank-tol", field_rank_tol)->capture_default_str();
    field->add_option("--out", field_out, "Output file (default stdout)");
    field->add_option("--config", field_config, "File of 'key = value' defaults");

    // verify
    std::uint64_t verify_seed = 0;
    int verify_trials = 0;
    double verify_perturb = 0.0;
    std::string verify_out, verify_config;
    CLI::App* ver = app.add_subcommand("verify", "Run the oracle suites");
    auto* seed_opt = ver->add_option("--seed", verify_seed, "RNG seed (fallback: NEWTON_SEED)");
    ver->add_option("--trials", verify_trials, "Instances per randomized suite (0 = suite default)")
        ->check(CLI::NonNegativeNumber);
    ver->add_option("--perturb", verify_perturb)->group("");
    ver->add_option("--out", verify_out, "Also write the JSON report to this file");
    ver->add_option("--config", verify_config, "File of 'key = value' defaults");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (solve->parsed()) {
            apply_config(*solve, solve_config);
            const ProblemDefinition p = load_problem(solve_problem);
            const solver::SolverConfig cfg = finish_config(solve_solver);
            const std::vector<double> xs = parse_list(solve_x0, "--x0");
            if (static_cast<int>(xs.size()) != p.dimension)
                throw UsageError(fmt::format("--x0 has {} entries, problem '{}' needs {}", xs.size(),
                                             p.name, p.dimension));
            const Vector x0 = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            if (!p.domain.contains(x0)) throw UsageError("--x0 lies outside the problem domain");

            const solver::TerminationReport rep = solver::solve(p, x0, cfg);
            output::RunManifest m{"solve", problem_label(solve_problem), config_entries(cfg), solve_out, {}};
            m.config.emplace_back("x0", solve_x0);
            emit(output::write_jsonl(output::trajectory_lines(rep, m)), solve_out, out);
            return exit_code(rep.status);
        }

        if (grid->parsed()) {
            apply_config(*grid, grid_config);
            const ProblemDefinition p = load_problem(grid_problem, "expsin");
            if (p.dimension != 2) throw UsageError("grid needs a 2-D problem");
            const solver::SolverConfig cfg = finish_config(grid_solver);
            const Box b = parse_box(grid_box);
            if (grid_res < 1) throw UsageError("--res must be positive");
            Vector lo(2), hi(2);
            lo << b.xmin, b.ymin;
            hi << b.xmax, b.ymax;
            const auto cells = solver::grid_run(p, lo, hi, {grid_res, grid_res}, cfg);
            output::RunManifest m{"grid", problem_label(grid_problem, "expsin"), config_entries(cfg),
                                  grid_out, {}};
            m.config.emplace_back("box", grid_box);
            m.config.emplace_back("res", std::to_string(grid_res));
            emit(output::write_csv(output::grid_table(cells, m)), grid_out, out);
            return kExitRoot;
        }

        if (field->parsed()) {
            apply_config(*field, field_config);
            const ProblemDefinition p = load_problem(field_problem);
            if (p.dimension != 2) throw UsageError("field needs a 2-D problem");
            const Box b = parse_box(field_box);
            if (field_res < 1) throw UsageError("--res must be positive");
            indicator::IndicatorOptions opts;
            opts.rank_tol = field_rank_tol;
            const auto cells = indicator::field_scan(p, {b.xmin, b.xmax, b.ymin, b.ymax}, field_res,
                                                     field_res, opts);
            output::RunManifest m{"field", problem_label(field_problem), {}, field_out, {}};
            m.config = {{"box", field_box},
                        {"res", std::to_string(field_res)},
                        {"rank_tol", output::format_double(field_rank_tol)}};
            emit(output::write_csv(output::field_table(cells, m)), field_out, out);
            return kExitRoot;
        }

        if (ver->parsed()) {
            apply_config(*ver, verify_config);
            verify::VerifyOptions o;
            if (seed_opt->count() > 0) {
                o.seed = verify_seed;
            } else if (const char* env = std::getenv("NEWTON_SEED")) {
                char* end = nullptr;
                o.seed = std::strtoull(env, &end, 10);
                if (*env == '\0' || *end != '\0') throw UsageError("NEWTON_SEED is not an integer");
            }
            o.trials = verify_trials;
            o.es_perturbation = verify_perturb;

            const auto results = verify::run_all(o);
            bool all = true;
            output::Json report;
            output::Json suites = output::Json::array();
            out << fmt::format("{:<30} {:<6} {:>12} {:>12} {:>6}  {}\n", "suite", "result",
                               "measured", "threshold", "n", "detail");
            for (const auto& r : results) {
                all = all && r.passed;
                out << fmt::format("{:<30} {:<6} {:>12.4g} {:>12.4g} {:>6}  {}\n", r.name,
                                   r.passed ? "PASS" : "FAIL", r.measured, r.threshold,
                                   r.instances, r.detail);
                output::Json s;
                s["name"] = r.name;
                s["passed"] = r.passed;
                s["measured"] = r.measured;
                s["threshold"] = r.threshold;
                s["instances"] = r.instances;
                s["detail"] = r.detail;
                suites.push_back(std::move(s));
            }
            output::RunManifest m{"verify", "", {}, verify_out, o.seed};
            m.config = {{"trials", std::to_string(o.trials)}};
            report["passed"] = all;
            report["suites"] = suites;
            report["manifest"] = m.to_json();
            out << report.dump() << "\n";
            if (!verify_out.empty()) emit(report.dump() + "\n", verify_out, out);
            return all ? kExitRoot : kExitVerifyFailed;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const DimensionMismatch& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace singstep::cli
