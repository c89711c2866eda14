#include "singstep/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace singstep::solver {

std::string_view to_string(Rule rule)
{
    switch (rule) {
    case Rule::FullStep: return "full";
    case Rule::ES: return "es";
    case Rule::AS: return "as";
    case Rule::Hybrid: return "hybrid";
    }
    return "?";
}

std::string_view to_string(Status status)
{
    switch (status) {
    case Status::ConvergedRoot: return "ConvergedRoot";
    case Status::ConvergedSingular: return "ConvergedSingular";
    case Status::MaxIter: return "MaxIter";
    case Status::Stalled: return "Stalled";
    case Status::LimitUnstable: return "LimitUnstable";
    case Status::Breakdown: return "Breakdown";
    }
    return "?";
}

Rule parse_rule(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "full" || lower == "full_step") return Rule::FullStep;
    if (lower == "es") return Rule::ES;
    if (lower == "as") return Rule::AS;
    if (lower == "hybrid") return Rule::Hybrid;
    throw NotApplicable("unknown stepsize rule '" + std::string(text) + "'");
}

void SolverConfig::validate() const
{
    if (!(tol_root > 0.0) || !(tol_singular_g > 0.0) || !(tol_sigma_ratio > 0.0) ||
        !(lambda_min > 0.0) || !(rank_tol > 0.0))
        throw NotApplicable("solver tolerances must be positive");
    if (!(lambda_min < 1.0)) throw NotApplicable("lambda_min must be below 1");
    if (max_iter < 0) throw NotApplicable("max_iter must be non-negative");
    if (!(agreement_factor >= 1.0)) throw NotApplicable("agreement_factor must be at least 1");
}

int TerminationReport::iterations() const
{
    return static_cast<int>(std::count_if(records.begin(), records.end(),
                                          [](const IterationRecord& r) { return r.step.has_value(); }));
}

namespace {

constexpr int kSingularStreak = 2;
constexpr int kStallStreak = 3;
constexpr int kMaxDomainHalvings = 60;

StepRecord damping(const stepsize::CoreQuantities& q, const SolverConfig& config)
{
    stepsize::StepsizeDecision d;
    switch (config.rule) {
    case Rule::FullStep:
        d = stepsize::exact_control(q);
        d.lambda = 1.0;
        d.rule_tag = stepsize::RuleTag::Unrestricted;
        break;
    case Rule::ES: d = stepsize::exact_control(q); break;
    case Rule::AS: d = stepsize::approximate_control(q); break;
    case Rule::Hybrid: d = stepsize::hybrid_control(q, config.agreement_factor); break;
    }
    return {d.lambda, d.rule_tag, d.es_inner, d.as_norm, d.lambda_es, d.lambda_as};
}

}  // namespace

TerminationReport solve(const ProblemDefinition& problem, const Vector& x0,
                        const SolverConfig& config)
{
    config.validate();
    TerminationReport report;
    report.final_x = x0;

    Vector x = x0;
    double root_tol = 0.0;
    try {
        root_tol = config.tol_root * (1.0 + problem.evaluate(x0).norm());
    } catch (const Error& e) {
        report.status = Status::Breakdown;
        report.message = e.what();
        return report;
    }

    indicator::IndicatorOptions ind_options;
    ind_options.rank_tol = config.rank_tol;
    ind_options.root_tol = root_tol;
    stepsize::ControlOptions control;
    control.rank_tol = config.rank_tol;
    control.es_perturbation = config.es_perturbation;

    Vector direction = Vector::Unit(problem.dimension, 0);
    int singular_streak = 0;
    int stall_streak = 0;

    auto finish = [&](Status status, std::string message = {}) {
        report.status = status;
        report.final_x = x;
        report.message = std::move(message);
        if (status == Status::ConvergedSingular)
            report.quadratic_tail_ratio = quadratic_tail_check(report.records);
        return report;
    };

    for (int k = 0;; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.x = x;
        try {
            const Vector fx = problem.evaluate(x);
            rec.f_norm = fx.norm();
            if (rec.f_norm <= root_tol) {
                report.records.push_back(std::move(rec));
                return finish(Status::ConvergedRoot);
            }

            const linalg::SvdFactorization jsvd = linalg::svd(problem.jacobian(x));
            rec.sigma_min_ratio = jsvd.sigma_ratio();
            const indicator::IndicatorEval ev =
                indicator::compute_g(problem, x, direction, fx, jsvd, ind_options);
            rec.g_value = ev.g_value;
            rec.case_tag = ev.case_tag;

            if (ev.case_tag == indicator::CaseTag::NotInRange) {
                report.records.push_back(std::move(rec));
                return finish(Status::ConvergedSingular, "F outside the range of a singular DF");
            }
            const bool near_singular = ev.g_value <= config.tol_singular_g ||
                                       jsvd.sigma_ratio() <= config.tol_sigma_ratio;
            singular_streak = near_singular ? singular_streak + 1 : 0;
            if (singular_streak >= kSingularStreak) {
                report.records.push_back(std::move(rec));
                return finish(Status::ConvergedSingular);
            }
            if (k >= config.max_iter) {
                report.records.push_back(std::move(rec));
                return finish(Status::MaxIter);
            }

            Vector dx;
            StepRecord step;
            if (ev.case_tag == indicator::CaseTag::Regular) {
                dx = *ev.newton_step;
                step = damping(stepsize::core_quantities(problem, x, dx, jsvd, control), config);
            } else {
                // F in the range of a singular DF: minimum-norm Newton step, undamped.
                dx = -linalg::pseudoinverse_apply(jsvd, fx, config.rank_tol);
                step.lambda = 1.0;
                step.rule_tag = stepsize::RuleTag::Unrestricted;
            }
            rec.step = step;
            report.records.push_back(std::move(rec));

            // Keep iterates inside the domain box by halving the damping.
            {
                int halvings = 0;
                while (!problem.domain.contains(x + step.lambda * dx) && halvings < kMaxDomainHalvings) {
                    step.lambda *= 0.5;
                    ++halvings;
                }
                rec.step->lambda = step.lambda;
            }
            stall_streak = step.lambda < config.lambda_min ? stall_streak + 1 : 0;
            x = x + step.lambda * dx;
            if (!x.allFinite()) return finish(Status::Breakdown, "non-finite iterate");
            if (stall_streak >= kStallStreak) return finish(Status::Stalled);
            if (dx.norm() > 0.0) direction = dx.normalized();
        } catch (const LimitUnstable& e) {
            report.records.push_back(std::move(rec));
            return finish(Status::LimitUnstable, e.what());
        } catch (const Error& e) {
            return finish(Status::Breakdown, e.what());
        }
    }
}

std::optional<double> quadratic_tail_check(std::span<const double> g_values)
{
    const std::size_t n = g_values.size();
    if (n < 4) return std::nullopt;
    double worst = 0.0;
    for (std::size_t i = n - 3; i < n; ++i) {
        const double prev = g_values[i - 1];
        const double next = g_values[i];
        if (!(prev > 0.0) || !(next < prev)) return std::nullopt;
        worst = std::max(worst, next / (prev * prev));
    }
    return worst;
}

std::optional<double> quadratic_tail_check(const std::vector<IterationRecord>& records)
{
    std::vector<double> g;
    for (const IterationRecord& r : records)
        if (r.g_value) g.push_back(*r.g_value);
    return quadratic_tail_check(std::span<const double>(g));
}

std::vector<GridSummary> grid_run(const ProblemDefinition& problem, const Vector& lower,
                                  const Vector& upper, const std::vector<int>& resolution,
                                  const SolverConfig& config)
{
    const std::size_t d = static_cast<std::size_t>(problem.dimension);
    if (static_cast<std::size_t>(lower.size()) != d || static_cast<std::size_t>(upper.size()) != d ||
        resolution.size() != d)
        throw DimensionMismatch("grid_run: box and resolution must match the problem dimension");
    std::size_t total = 1;
    for (int r : resolution) {
        if (r < 1) throw NotApplicable("grid_run: resolution must be positive");
        total *= static_cast<std::size_t>(r);
    }

    std::vector<GridSummary> out;
    out.reserve(total);
    std::vector<int> index(d, 0);
    for (std::size_t cell = 0; cell < total; ++cell) {
        Vector x0(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            x0(ii) = resolution[i] == 1
                         ? 0.5 * (lower(ii) + upper(ii))
                         : lower(ii) + (upper(ii) - lower(ii)) * index[i] / (resolution[i] - 1);
        }

        const TerminationReport rep = solve(problem, x0, config);
        GridSummary s;
        s.x0 = x0;
        s.status = rep.status;
        s.final_x = rep.final_x;
        s.iterations = rep.iterations();
        if (problem.singular_set) {
            s.start_component = problem.singular_set->nearest_component(x0);
            if (rep.status == Status::ConvergedSingular) {
                s.dist_to_singular = problem.singular_set->distance(rep.final_x);
                s.terminal_component = problem.singular_set->nearest_component(rep.final_x);
            }
        }
        out.push_back(std::move(s));

        for (std::size_t i = 0; i < d; ++i) {
            if (++index[i] < resolution[i]) break;
            index[i] = 0;
        }
    }
    return out;
}

}  // namespace singstep::solver
