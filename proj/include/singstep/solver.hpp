#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "singstep/indicator.hpp"
#include "singstep/problem.hpp"
#include "singstep/stepsize.hpp"

namespace singstep::solver {

enum class Rule { FullStep, ES, AS, Hybrid };
enum class Status { ConvergedRoot, ConvergedSingular, MaxIter, Stalled, LimitUnstable, Breakdown };

std::string_view to_string(Rule rule);
std::string_view to_string(Status status);
/// Accepts full, es, as, hybrid (case-insensitive). Throws NotApplicable.
Rule parse_rule(std::string_view text);

struct SolverConfig {
    Rule rule = Rule::ES;
    /// Root when ||F|| <= tol_root * (1 + ||F(x0)||).
    double tol_root = 1e-12;
    double tol_singular_g = 1e-10;
    double tol_sigma_ratio = 1e-12;
    double lambda_min = 1e-12;
    int max_iter = 200;
    double agreement_factor = 2.0;
    bool record_diagnostics = true;
    /// DF is treated as rank-deficient when sigma_min <= rank_tol * sigma_max.
    double rank_tol = 1e-12;
    double es_perturbation = 0.0;

    /// Throws NotApplicable if a tolerance is not positive or lambda_min >= 1.
    void validate() const;
};

/// Damping actually applied at one iterate.
struct StepRecord {
    double lambda = 1.0;
    stepsize::RuleTag rule_tag = stepsize::RuleTag::Unrestricted;
    std::optional<double> es_inner;
    std::optional<double> as_norm;
    std::optional<double> lambda_es;
    std::optional<double> lambda_as;
};

/// One evaluated iterate. The terminal iterate carries no step.
struct IterationRecord {
    int k = 0;
    Vector x;
    double f_norm = 0.0;
    std::optional<double> g_value;
    std::optional<indicator::CaseTag> case_tag;
    std::optional<double> sigma_min_ratio;
    std::optional<StepRecord> step;
};

struct TerminationReport {
    Status status = Status::MaxIter;
    Vector final_x;
    std::vector<IterationRecord> records;
    std::optional<double> quadratic_tail_ratio;
    std::string message;

    /// Number of steps taken.
    int iterations() const;
};

/// Damped Newton iteration x <- x + lambda dx with lambda from config.rule.
///
/// Per iterate: root test on ||F||, SVD of DF, indicator g, singularity
/// test (g <= tol_singular_g or sigma ratio <= tol_sigma_ratio on two
/// consecutive iterates, or F outside the range of a rank-deficient DF),
/// Newton step, damping. Steps that would leave the domain box have their
/// damping halved until they stay inside. Failures become statuses; nothing is thrown for
/// numerical trouble.
TerminationReport solve(const ProblemDefinition& problem, const Vector& x0,
                        const SolverConfig& config = {});

/// max of g_{k+1} / g_k^2 over the final three transitions, or nothing when
/// fewer than four values are given or they do not decrease.
std::optional<double> quadratic_tail_check(std::span<const double> g_values);

/// Same, over the g values of the records. A terminal g = 0 counts as a
/// decreasing transition with ratio 0.
std::optional<double> quadratic_tail_check(const std::vector<IterationRecord>& records);

struct GridSummary {
    Vector x0;
    Status status = Status::MaxIter;
    Vector final_x;
    int iterations = 0;
    /// Distance of final_x to the singular set, for ConvergedSingular runs
    /// of problems that describe their singular set.
    std::optional<double> dist_to_singular;
    std::optional<int> start_component;
    std::optional<int> terminal_component;
};

/// Start points on a tensor grid over [lower, upper] with resolution[i]
/// points per axis (endpoints included). Output order is row-major with
/// coordinate 0 varying fastest.
std::vector<GridSummary> grid_run(const ProblemDefinition& problem, const Vector& lower,
                                  const Vector& upper, const std::vector<int>& resolution,
                                  const SolverConfig& config = {});

}  // namespace singstep::solver
