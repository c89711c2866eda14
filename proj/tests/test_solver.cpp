#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "singstep/solver.hpp"
#include "singstep/verify.hpp"

using namespace singstep;
using namespace singstep::solver;

namespace {

Vector vec(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

Vector scalar(double a)
{
    Vector v(1);
    v << a;
    return v;
}

SolverConfig with_rule(Rule r)
{
    SolverConfig c;
    c.rule = r;
    return c;
}

void expect_report_invariants(const ProblemDefinition& p, const Vector& x0, const SolverConfig& c,
                              const TerminationReport& r)
{
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const IterationRecord& rec = r.records[i];
        EXPECT_EQ(rec.k, static_cast<int>(i));
        EXPECT_TRUE(rec.x.allFinite());
        EXPECT_TRUE(std::isfinite(rec.f_norm));
        if (rec.g_value) EXPECT_TRUE(std::isfinite(*rec.g_value));
        if (rec.step) {
            EXPECT_GT(rec.step->lambda, 0.0);
            EXPECT_LE(rec.step->lambda, 1.0);
        }
    }
    const IterationRecord& last = r.records.back();
    if (r.status == Status::ConvergedRoot)
        EXPECT_LE(last.f_norm, c.tol_root * (1 + p.evaluate(x0).norm()));
    if (r.status == Status::ConvergedSingular) {
        const bool small_g = last.g_value && *last.g_value <= c.tol_singular_g;
        const bool small_ratio = last.sigma_min_ratio && *last.sigma_min_ratio <= c.tol_sigma_ratio;
        EXPECT_TRUE(small_g || small_ratio) << x0.transpose();
    }
}

// Oscillating Jacobian: F is in the range of a singular DF at (0, 1) but the
// directional limit of g does not exist.
ProblemDefinition oscillating()
{
    return make_problem(
        "oscillating", 2, [](const Vector& x) { return vec(x(0) * x(0), 1.0); },
        [](const Vector& x) {
            Matrix j = Matrix::Zero(2, 2);
            j(0, 0) = 2 * x(0);
            j(1, 1) = x(0) == 0.0 ? 1.0 : 1.0 + 0.5 * std::sin(1.0 / x(0));
            return j;
        });
}

}  // namespace

TEST(Solve, IdentityOneFullStep)
{
    const TerminationReport r = solve(make_identity(), vec(3, 4), with_rule(Rule::FullStep));
    EXPECT_EQ(r.status, Status::ConvergedRoot);
    EXPECT_EQ(r.iterations(), 1);
    EXPECT_LE(r.final_x.norm(), 1e-15);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_FALSE(r.records.back().step.has_value());
}

TEST(Solve, ScalarQuadraticLandsOnSingularity)
{
    const TerminationReport r = solve(make_scalar_quadratic(1.0), scalar(0.5), with_rule(Rule::ES));
    EXPECT_EQ(r.status, Status::ConvergedSingular);
    EXPECT_EQ(r.iterations(), 1);
    EXPECT_NEAR(r.final_x(0), 0.0, 1e-15);
    EXPECT_NEAR(r.records.front().step->lambda, 0.4, 1e-15);
}

TEST(Solve, ExpsinEsConvergesToSingularLine)
{
    const ProblemDefinition p = make_expsin();
    const TerminationReport r = solve(p, vec(-0.5, -1.5), with_rule(Rule::ES));
    EXPECT_EQ(r.status, Status::ConvergedSingular);
    EXPECT_LE(expsin_singular_distance(r.final_x), 1e-6);
    ASSERT_TRUE(r.quadratic_tail_ratio.has_value());
    EXPECT_LE(*r.quadratic_tail_ratio, 1e-2);
    expect_report_invariants(p, vec(-0.5, -1.5), with_rule(Rule::ES), r);
}

TEST(Solve, ExpsinHybridFindsRoot)
{
    const ProblemDefinition p = make_expsin();
    const TerminationReport r = solve(p, vec(0.7, 0.2), with_rule(Rule::Hybrid));
    EXPECT_EQ(r.status, Status::ConvergedRoot);
    EXPECT_LE(p.evaluate(r.final_x).norm(), 1e-10);
}

TEST(Solve, MaxIter)
{
    SolverConfig c = with_rule(Rule::ES);
    c.max_iter = 1;
    const TerminationReport r = solve(make_expsin(), vec(-1.2, 1.4), c);
    EXPECT_EQ(r.status, Status::MaxIter);
    EXPECT_EQ(r.iterations(), 1);
}

TEST(Solve, Stalled)
{
    SolverConfig c = with_rule(Rule::ES);
    c.lambda_min = 0.9;
    const TerminationReport r = solve(make_expsin(), vec(-1.5, -1.0), c);
    EXPECT_EQ(r.status, Status::Stalled);
    EXPECT_EQ(r.iterations(), 3);
}

TEST(Solve, BreakdownOnNonFiniteValues)
{
    const ProblemDefinition p = make_problem(
        "half_line", 1,
        [](const Vector& x) { return scalar(x(0) < 0 ? NAN : x(0) * x(0) + 1.0); },
        [](const Vector& x) {
            Matrix j(1, 1);
            j << 2 * x(0);
            return j;
        });
    const TerminationReport r = solve(p, scalar(0.1), with_rule(Rule::FullStep));
    EXPECT_EQ(r.status, Status::Breakdown);
    EXPECT_FALSE(r.message.empty());
}

TEST(Solve, LimitUnstable)
{
    const TerminationReport r = solve(oscillating(), vec(0, 1));
    EXPECT_EQ(r.status, Status::LimitUnstable);
}

TEST(Solve, StaysInsideDomainBox)
{
    const ProblemDefinition p = make_expsin();
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-2.9, 2.9);
    for (int i = 0; i < 100; ++i) {
        const TerminationReport r = solve(p, vec(u(rng), u(rng)), with_rule(Rule::ES));
        for (const IterationRecord& rec : r.records) EXPECT_TRUE(p.domain.contains(rec.x));
        EXPECT_NE(r.status, Status::Breakdown);
    }
}

TEST(Solve, Deterministic)
{
    const ProblemDefinition p = make_expsin();
    for (Rule rule : {Rule::ES, Rule::AS, Rule::Hybrid}) {
        const TerminationReport a = solve(p, vec(-0.5, -1.5), with_rule(rule));
        const TerminationReport b = solve(p, vec(-0.5, -1.5), with_rule(rule));
        EXPECT_EQ(a.status, b.status);
        ASSERT_EQ(a.records.size(), b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            EXPECT_EQ(a.records[i].x, b.records[i].x);
            EXPECT_EQ(a.records[i].g_value, b.records[i].g_value);
            if (a.records[i].step) EXPECT_EQ(a.records[i].step->lambda, b.records[i].step->lambda);
        }
        EXPECT_EQ(a.quadratic_tail_ratio, b.quadratic_tail_ratio);
    }
}

TEST(Solve, AffineCovariantTrajectories)
{
    const ProblemDefinition p = make_expsin();
    verify::Rng rng(62);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 10; ++i) {
        const Matrix m = verify::random_with_singular_values(rng, vec(2.0, 1.0));
        const ProblemDefinition q = left_compose(m, p);
        const Vector x0 = vec(u(rng), u(rng));
        for (Rule rule : {Rule::ES, Rule::AS, Rule::Hybrid}) {
            const TerminationReport a = solve(p, x0, with_rule(rule));
            const TerminationReport b = solve(q, x0, with_rule(rule));
            const std::size_t n = std::min({a.records.size(), b.records.size(), std::size_t{10}});
            for (std::size_t k = 0; k < n; ++k)
                EXPECT_LE((a.records[k].x - b.records[k].x).norm(), 1e-8) << x0.transpose();
        }
    }
}

TEST(Solve, SingularStatusInvariantOnRandomStarts)
{
    const ProblemDefinition p = make_expsin();
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    int singular = 0;
    for (int i = 0; i < 200; ++i) {
        const Vector x0 = vec(u(rng), u(rng));
        for (Rule rule : {Rule::ES, Rule::AS, Rule::Hybrid}) {
            const SolverConfig c = with_rule(rule);
            const TerminationReport r = solve(p, x0, c);
            expect_report_invariants(p, x0, c, r);
            if (r.status == Status::ConvergedSingular) {
                ++singular;
                EXPECT_LE(expsin_singular_distance(r.final_x), 1e-6) << x0.transpose();
            }
        }
    }
    EXPECT_GT(singular, 0);
}

TEST(Solve, NoFalseSingularityNearRoots)
{
    const ProblemDefinition p = make_expsin();
    const double a = 0.74115190368375553792;
    const double b1 = 1.0162459636144362145, b2 = -0.2566250769224934436;
    const std::vector<Vector> roots = {vec(a, -a), vec(-a, a), vec(b1, b2), vec(b2, b1),
                                       vec(-b1, -b2), vec(-b2, -b1)};
    for (const Vector& root : roots) {
        ASSERT_LE(p.evaluate(root).norm(), 1e-14);
        for (int k = 0; k < 8; ++k) {
            const double t = k * std::numbers::pi / 4;
            const Vector x0 = root + 0.05 * vec(std::cos(t), std::sin(t));
            for (Rule rule : {Rule::ES, Rule::AS, Rule::Hybrid}) {
                const TerminationReport r = solve(p, x0, with_rule(rule));
                EXPECT_EQ(r.status, Status::ConvergedRoot) << x0.transpose();
                EXPECT_LE((r.final_x - root).norm(), 1e-8);
            }
        }
    }
}

TEST(TailCheck, LinearConvergenceIsLarge)
{
    std::vector<double> g;
    for (int k = 0; k < 8; ++k) g.push_back(std::ldexp(1.0, -k));
    const auto r = quadratic_tail_check(g);
    ASSERT_TRUE(r.has_value());
    // last transition 6 -> 7: 2^-7 / 2^-12
    EXPECT_DOUBLE_EQ(*r, 32.0);
}

TEST(TailCheck, QuadraticConvergenceIsOne)
{
    std::vector<double> g;
    for (int k = 0; k < 5; ++k) g.push_back(std::pow(10.0, -std::ldexp(1.0, k)));
    const auto r = quadratic_tail_check(g);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(*r, 1.0, 1e-12);
}

TEST(TailCheck, AbsentWhenPreconditionsFail)
{
    const std::vector<double> short_seq = {1.0, 0.1, 0.01};
    EXPECT_FALSE(quadratic_tail_check(short_seq).has_value());
    const std::vector<double> rising = {1.0, 0.1, 0.2, 0.01};
    EXPECT_FALSE(quadratic_tail_check(rising).has_value());
}

TEST(TailCheck, TerminalZeroCountsAsRatioZero)
{
    std::vector<IterationRecord> recs(4);
    const double g[] = {1e-1, 1e-2, 1e-4, 0.0};
    for (int k = 0; k < 4; ++k) {
        recs[k].k = k;
        recs[k].g_value = g[k];
    }
    const auto r = quadratic_tail_check(recs);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(*r, 1.0, 1e-12);
}

TEST(Grid, IdentityAllRootsRowMajor)
{
    const std::vector<GridSummary> cells =
        grid_run(make_identity(), vec(-1, -1), vec(1, 1), {3, 3}, with_rule(Rule::FullStep));
    ASSERT_EQ(cells.size(), 9u);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        EXPECT_EQ(cells[i].status, Status::ConvergedRoot);
        EXPECT_DOUBLE_EQ(cells[i].x0(0), -1.0 + static_cast<double>(i % 3));
        EXPECT_DOUBLE_EQ(cells[i].x0(1), -1.0 + static_cast<double>(i / 3));
    }
}

TEST(Grid, ExpsinEveryCellConverges)
{
    for (Rule rule : {Rule::ES, Rule::AS, Rule::Hybrid}) {
        const std::vector<GridSummary> cells =
            grid_run(make_expsin(), vec(-1.5, -1.5), vec(1.5, 1.5), {31, 31}, with_rule(rule));
        ASSERT_EQ(cells.size(), 961u);
        for (const GridSummary& c : cells) {
            EXPECT_TRUE(c.status == Status::ConvergedRoot || c.status == Status::ConvergedSingular)
                << to_string(rule) << " " << c.x0.transpose() << " " << to_string(c.status);
            EXPECT_LE(c.iterations, 200);
            if (c.status == Status::ConvergedSingular) {
                ASSERT_TRUE(c.dist_to_singular.has_value());
                EXPECT_LE(*c.dist_to_singular, 1e-6);
            } else {
                EXPECT_FALSE(c.dist_to_singular.has_value());
            }
        }
    }
}

TEST(Grid, MatchesIndividualSolves)
{
    const ProblemDefinition p = make_expsin();
    const SolverConfig c = with_rule(Rule::Hybrid);
    const std::vector<GridSummary> cells = grid_run(p, vec(-1, -1), vec(1, 1), {4, 3}, c);
    ASSERT_EQ(cells.size(), 12u);
    for (const GridSummary& cell : cells) {
        const TerminationReport r = solve(p, cell.x0, c);
        EXPECT_EQ(cell.status, r.status);
        EXPECT_EQ(cell.final_x, r.final_x);
        EXPECT_EQ(cell.iterations, r.iterations());
    }
}

TEST(Config, Validate)
{
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.tol_root = 0.0;
    EXPECT_THROW(c.validate(), NotApplicable);
    c = SolverConfig{};
    c.lambda_min = 1.0;
    EXPECT_THROW(c.validate(), NotApplicable);
    c = SolverConfig{};
    c.max_iter = -1;
    EXPECT_THROW(c.validate(), NotApplicable);
    c = SolverConfig{};
    c.agreement_factor = 0.5;
    EXPECT_THROW(c.validate(), NotApplicable);
}

TEST(Config, RuleNames)
{
    EXPECT_EQ(parse_rule("ES"), Rule::ES);
    EXPECT_EQ(parse_rule("hybrid"), Rule::Hybrid);
    EXPECT_EQ(parse_rule("As"), Rule::AS);
    EXPECT_EQ(parse_rule("full"), Rule::FullStep);
    EXPECT_THROW(parse_rule("newton"), NotApplicable);
    EXPECT_EQ(to_string(Status::ConvergedSingular), "ConvergedSingular");
    EXPECT_EQ(to_string(Status::LimitUnstable), "LimitUnstable");
}
