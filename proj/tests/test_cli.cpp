#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "output.hpp"

using namespace singstep;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("singstep_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text)
    {
        const fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }

    static std::string slurp(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

int count_lines(const std::string& s)
{
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

// Starts whose singular termination lands on a different piece than the nearest one.
int mismatches(const output::CsvTable& t)
{
    const ProblemDefinition p = make_expsin();
    int n = 0;
    for (const auto& row : t.rows) {
        if (std::get<std::string>(row[2]) != "ConvergedSingular") continue;
        Vector x0(2), xf(2);
        x0 << std::get<double>(row[0]), std::get<double>(row[1]);
        xf << std::get<double>(row[4]), std::get<double>(row[5]);
        if (p.singular_set->nearest_component(x0) != p.singular_set->nearest_component(xf)) ++n;
    }
    return n;
}

}  // namespace

TEST(ExitCodes, StatusMapping)
{
    EXPECT_EQ(cli::exit_code(solver::Status::ConvergedRoot), 0);
    EXPECT_EQ(cli::exit_code(solver::Status::ConvergedSingular), 2);
    for (auto s : {solver::Status::MaxIter, solver::Status::Stalled, solver::Status::LimitUnstable,
                   solver::Status::Breakdown})
        EXPECT_EQ(cli::exit_code(s), 3);
}

TEST_F(CliTest, SolveIdentity)
{
    const Result r = run({"solve", "--problem", "identity", "--x0", "3,4"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(r.out), 2);
    const auto lines = output::read_jsonl(r.out);
    EXPECT_EQ(lines[0]["k"], 0);
    EXPECT_EQ(lines[0]["x"][0], 3.0);
    EXPECT_TRUE(lines[1]["summary"].get<bool>());
    EXPECT_EQ(lines[1]["status"], "ConvergedRoot");
    EXPECT_EQ(lines[1]["manifest"]["command"], "solve");
    EXPECT_EQ(lines[1]["manifest"]["problem"], "identity");
}

TEST_F(CliTest, SolveExpsinEsEndsSingular)
{
    const Result r = run({"solve", "--problem", "expsin", "--x0", "-0.5,-1.5", "--rule", "es"});
    EXPECT_EQ(r.code, 2) << r.err;
    const auto lines = output::read_jsonl(r.out);
    const auto& summary = lines.back();
    EXPECT_EQ(summary["status"], "ConvergedSingular");
    EXPECT_FALSE(summary["quadratic_tail_ratio"].is_null());
    // The g column falls off quickly over the last steps.
    std::vector<double> g;
    for (const auto& l : lines)
        if (l.contains("g_value")) g.push_back(l["g_value"].get<double>());
    ASSERT_GE(g.size(), 3u);
    for (std::size_t i = g.size() - 3; i + 1 < g.size(); ++i) EXPECT_LT(g[i + 1], 0.1 * g[i]);
    for (const auto& l : lines)
        if (!l.contains("summary")) EXPECT_EQ(l["rule_tag"], "ES");
}

TEST_F(CliTest, SolveExpsinHybridFindsRoot)
{
    const Result r = run({"solve", "--problem", "expsin", "--x0", "0.7,0.2", "--rule", "hybrid"});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, SolveOtherStatus)
{
    const Result r = run({"solve", "--problem", "expsin", "--x0", "-1.2,1.4", "--max-iter", "1"});
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_EQ(output::read_jsonl(r.out).back()["status"], "MaxIter");
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(run({}).code, 64);
    EXPECT_EQ(run({"bogus"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "identity"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3,x"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "nope", "--x0", "3,4"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3,4", "--rule", "fast"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3,4", "--tol-root", "-1"}).code, 64);
    EXPECT_EQ(run({"solve", "--problem", "expsin", "--x0", "9,0"}).code, 64);
    EXPECT_EQ(run({"solve", "--x0", "3,4"}).code, 64);
    EXPECT_EQ(run({"grid", "--box", "1,0,0,1"}).code, 64);
    EXPECT_EQ(run({"grid", "--res", "0"}).code, 64);
    EXPECT_EQ(run({"field", "--problem", "scalar_quadratic"}).code, 64);
    const Result r = run({"solve", "--problem", "identity", "--x0", "3,4", "--frobnicate"});
    EXPECT_EQ(r.code, 64);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ProblemAndPolyAreExclusive)
{
    const std::string f = write("sys.txt", "f1 = x1\n");
    EXPECT_EQ(run({"solve", "--problem", "identity", "--poly", f, "--x0", "1"}).code, 64);
}

TEST_F(CliTest, PolynomialFile)
{
    const std::string f = write("sys.txt", "# shifted parabola\nf1 = x1^2 - 1\nf2 = x2\n");
    const Result r = run({"solve", "--poly", f, "--x0", "2,3", "--rule", "hybrid"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto summary = output::read_jsonl(r.out).back();
    EXPECT_NEAR(summary["final_x"][0].get<double>(), 1.0, 1e-12);
    EXPECT_EQ(summary["manifest"]["problem"], f);
}

TEST_F(CliTest, ParseErrors)
{
    const Result bad = run({"solve", "--poly", write("bad.txt", "f1 = x1 +\n"), "--x0", "1"});
    EXPECT_EQ(bad.code, 65);
    EXPECT_NE(bad.err.find("line 1"), std::string::npos) << bad.err;
    EXPECT_EQ(run({"solve", "--poly", write("dim.txt", "f1 = x2\n"), "--x0", "1,1"}).code, 65);
    EXPECT_EQ(run({"solve", "--poly", path("missing.txt"), "--x0", "1"}).code, 64);
    const std::string cfg = write("bad.cfg", "rule es\n");
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3,4", "--config", cfg}).code, 65);
}

TEST_F(CliTest, GridIdentity)
{
    const Result r = run({"grid", "--problem", "identity", "--res", "3", "--box", "-1,1,-1,1", "--rule", "full"});
    EXPECT_EQ(r.code, 0) << r.err;
    const output::CsvTable t = output::read_csv(r.out);
    ASSERT_EQ(t.rows.size(), 9u);
    const std::vector<std::string> header = {"x0_1", "x0_2", "status", "iters", "final_1", "final_2",
                                             "dist_to_singular_line"};
    EXPECT_EQ(t.header, header);
    for (const auto& row : t.rows) EXPECT_EQ(std::get<std::string>(row[2]), "ConvergedRoot");
    ASSERT_EQ(t.comments.size(), 1u);
    EXPECT_EQ(t.comments[0].rfind("manifest: ", 0), 0u);
    const auto manifest = output::Json::parse(t.comments[0].substr(10));
    EXPECT_EQ(manifest["command"], "grid");
    EXPECT_EQ(manifest["config"]["res"], "3");
}

TEST_F(CliTest, GridExpsinAsNotWorseThanEs)
{
    const Result es = run({"grid", "--rule", "es"});
    const Result as = run({"grid", "--rule", "as"});
    ASSERT_EQ(es.code, 0) << es.err;
    ASSERT_EQ(as.code, 0) << as.err;
    const output::CsvTable te = output::read_csv(es.out);
    const output::CsvTable ta = output::read_csv(as.out);
    ASSERT_EQ(te.rows.size(), 961u);
    ASSERT_EQ(ta.rows.size(), 961u);
    for (const auto& row : te.rows) {
        EXPECT_NE(std::get<std::string>(row[2]), "MaxIter");
        const bool singular = std::get<std::string>(row[2]) == "ConvergedSingular";
        EXPECT_EQ(std::holds_alternative<double>(row[6]), singular);
    }
    EXPECT_LE(mismatches(ta), mismatches(te));
}

TEST_F(CliTest, FieldIdentity)
{
    const Result r = run({"field", "--problem", "identity", "--res", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    const output::CsvTable t = output::read_csv(r.out);
    ASSERT_EQ(t.rows.size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
        if (i == 4)
            EXPECT_EQ(std::get<std::string>(t.rows[i][2]), "Root");
        else
            EXPECT_EQ(std::get<double>(t.rows[i][2]), 1.0);
    }
}

TEST_F(CliTest, FieldCrossingAndCoinciding)
{
    auto ratio = [](const std::vector<output::CsvCell>& row) { return std::get<double>(row[3]); };

    const Result crossing = run({"field", "--problem", "crossing_singular", "--res", "101"});
    EXPECT_EQ(crossing.code, 0) << crossing.err;
    const output::CsvTable t = output::read_csv(crossing.out);
    ASSERT_EQ(t.rows.size(), 101u * 101u);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        if (ratio(t.rows[i]) < ratio(t.rows[arg])) arg = i;
    EXPECT_EQ(arg, 50u * 101u + 50u);

    // DF(0, x2) = -(M x) e1^T has rank one, so the whole x1 = 0 column is singular.
    const Result coinciding = run({"field", "--problem", "coinciding_singular", "--res", "101"});
    EXPECT_EQ(coinciding.code, 0) << coinciding.err;
    const output::CsvTable c = output::read_csv(coinciding.out);
    ASSERT_EQ(c.rows.size(), 101u * 101u);
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        if (i % 101 == 50)
            EXPECT_LE(ratio(c.rows[i]), 1e-12) << i;
        else
            EXPECT_GT(ratio(c.rows[i]), 1e-8) << i;
    }
}

TEST_F(CliTest, OutputsRoundTrip)
{
    const Result solve = run({"solve", "--problem", "expsin", "--x0", "-0.5,-1.5"});
    EXPECT_EQ(output::write_jsonl(output::read_jsonl(solve.out)), solve.out);
    const Result grid = run({"grid", "--res", "11", "--rule", "hybrid"});
    EXPECT_EQ(output::write_csv(output::read_csv(grid.out)), grid.out);
    const Result field = run({"field", "--problem", "expsin", "--res", "21", "--box", "-1.5,1.5,-1.5,1.5"});
    EXPECT_EQ(output::write_csv(output::read_csv(field.out)), field.out);
    const Result verify = run({"verify", "--trials", "1", "--seed", "3"});
    const std::string json = verify.out.substr(verify.out.rfind('{', verify.out.find("{\"passed\"")));
    EXPECT_EQ(output::write_jsonl(output::read_jsonl(json)), json);
}

TEST_F(CliTest, OutFileMatchesStdout)
{
    const std::string out = path("grid.csv");
    const Result to_stdout = run({"grid", "--problem", "identity", "--res", "4"});
    const Result to_file = run({"grid", "--problem", "identity", "--res", "4", "--out", out});
    EXPECT_EQ(to_file.code, 0);
    EXPECT_TRUE(to_file.out.empty());
    const std::string text = slurp(out);
    // Only the manifest's output path differs.
    EXPECT_EQ(text.substr(text.find('\n')), to_stdout.out.substr(to_stdout.out.find('\n')));
    EXPECT_NE(text.find(out), std::string::npos);
}

TEST_F(CliTest, ConfigFilePrecedence)
{
    const std::string cfg = write("run.cfg", "# defaults\nrule = as\nmax_iter = 1\n");
    const Result from_cfg = run({"solve", "--problem", "expsin", "--x0", "-1.2,1.4", "--config", cfg});
    EXPECT_EQ(from_cfg.code, 3);
    auto summary = output::read_jsonl(from_cfg.out).back();
    EXPECT_EQ(summary["manifest"]["config"]["rule"], "as");
    EXPECT_EQ(summary["manifest"]["config"]["max_iter"], "1");

    const Result flag = run({"solve", "--problem", "expsin", "--x0", "-1.2,1.4", "--config", cfg,
                             "--rule", "es", "--max-iter", "50"});
    summary = output::read_jsonl(flag.out).back();
    EXPECT_EQ(summary["manifest"]["config"]["rule"], "es");
    EXPECT_EQ(summary["manifest"]["config"]["max_iter"], "50");

    const std::string unknown = write("unknown.cfg", "colour = blue\n");
    EXPECT_EQ(run({"solve", "--problem", "identity", "--x0", "3,4", "--config", unknown}).code, 64);
}

TEST_F(CliTest, VerifyDeterministicSingleTrial)
{
    const Result a = run({"verify", "--trials", "1", "--seed", "7"});
    const Result b = run({"verify", "--trials", "1", "--seed", "7"});
    EXPECT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
    const auto report = output::Json::parse(a.out.substr(a.out.find("{\"passed\"")));
    EXPECT_TRUE(report["passed"].get<bool>());
    EXPECT_EQ(report["manifest"]["seed"], 7);
    EXPECT_GE(report["suites"].size(), 10u);
}

TEST_F(CliTest, VerifySeedFromEnvironment)
{
    ::setenv("NEWTON_SEED", "99", 1);
    const Result env = run({"verify", "--trials", "1"});
    const Result flag = run({"verify", "--trials", "1", "--seed", "5"});
    ::setenv("NEWTON_SEED", "x9", 1);
    const Result bad = run({"verify", "--trials", "1"});
    ::unsetenv("NEWTON_SEED");
    EXPECT_EQ(output::Json::parse(env.out.substr(env.out.find("{\"passed\"")))["manifest"]["seed"], 99);
    EXPECT_EQ(output::Json::parse(flag.out.substr(flag.out.find("{\"passed\"")))["manifest"]["seed"], 5);
    EXPECT_EQ(bad.code, 64);
}

TEST_F(CliTest, VerifyDetectsInjectedFault)
{
    const Result r = run({"verify", "--perturb", "1e-3"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyReportFile)
{
    const std::string out = path("report.json");
    const Result r = run({"verify", "--trials", "1", "--out", out});
    EXPECT_EQ(r.code, 0);
    const auto report = output::Json::parse(slurp(out));
    EXPECT_TRUE(report["passed"].get<bool>());
}

TEST(Csv, QuotingAndBlanks)
{
    output::CsvTable t;
    t.comments = {"note"};
    t.header = {"a", "b,c"};
    t.rows.push_back({output::CsvCell{1.5}, output::CsvCell{std::string("x,\"y\"")}});
    t.rows.push_back({output::CsvCell{std::monostate{}}, output::CsvCell{std::string("12")}});
    const std::string text = output::write_csv(t);
    EXPECT_EQ(text, "# note\na,\"b,c\"\n1.5,\"x,\"\"y\"\"\"\n,\"12\"\n");
    const output::CsvTable back = output::read_csv(text);
    EXPECT_EQ(back.header[1], "b,c");
    EXPECT_EQ(std::get<std::string>(back.rows[0][1]), "x,\"y\"");
    EXPECT_TRUE(std::holds_alternative<std::monostate>(back.rows[1][0]));
    EXPECT_EQ(std::get<std::string>(back.rows[1][1]), "12");
    EXPECT_EQ(output::write_csv(back), text);
}

TEST(Csv, Errors)
{
    EXPECT_THROW(output::read_csv("a,b\n1\n"), ParseError);
    EXPECT_THROW(output::read_csv("a,b\n\"1,2\n"), ParseError);
    EXPECT_THROW(output::read_csv("# only a comment\n"), ParseError);
    EXPECT_THROW(output::read_jsonl("{\"a\": 1}\n{oops\n"), ParseError);
}

TEST(Csv, DoublesRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1e-17})
        EXPECT_EQ(std::strtod(output::format_double(v).c_str(), nullptr), v);
}
