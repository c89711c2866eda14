#include "singstep/stepsize.hpp"

#include <cmath>

namespace singstep::stepsize {

std::string_view to_string(RuleTag tag)
{
    switch (tag) {
    case RuleTag::ES: return "ES";
    case RuleTag::AS: return "AS";
    case RuleTag::HybridES: return "Hybrid_ES";
    case RuleTag::HybridAS: return "Hybrid_AS";
    case RuleTag::Unrestricted: return "Unrestricted";
    }
    return "?";
}

CoreQuantities core_quantities(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const ControlOptions& options)
{
    return core_quantities(problem, x, dx, linalg::svd(problem.jacobian(x)), options);
}

CoreQuantities core_quantities(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const linalg::SvdFactorization& jacobian_svd,
                               const ControlOptions& options)
{
    const double dx_norm = dx.norm();
    if (!(dx_norm > 0.0)) throw NotApplicable("core_quantities: step must be nonzero");
    const Vector dir = dx / dx_norm;
    CoreQuantities q;
    q.w = linalg::solve(jacobian_svd, problem.second_derivative_action(x, dx, dir),
                        options.rank_tol);
    q.es_inner = dir.dot(q.w) * (1.0 + options.es_perturbation);
    q.as_norm = q.w.norm();
    return q;
}

namespace {

StepsizeDecision base_decision(const CoreQuantities& q)
{
    StepsizeDecision d;
    d.es_inner = q.es_inner;
    d.as_norm = q.as_norm;
    d.toward_singularity = q.es_inner < 0.0;
    d.lambda_es = q.es_inner != 0.0 ? std::min(1.0, 1.0 / std::abs(q.es_inner)) : 1.0;
    d.lambda_as = q.as_norm > 0.0 ? std::min(1.0, 1.0 / q.as_norm) : 1.0;
    return d;
}

}  // namespace

StepsizeDecision exact_control(const CoreQuantities& q)
{
    StepsizeDecision d = base_decision(q);
    d.lambda = d.lambda_es;
    d.rule_tag = q.es_inner != 0.0 ? RuleTag::ES : RuleTag::Unrestricted;
    return d;
}

StepsizeDecision approximate_control(const CoreQuantities& q)
{
    StepsizeDecision d = base_decision(q);
    d.lambda = d.lambda_as;
    d.rule_tag = q.as_norm > 0.0 ? RuleTag::AS : RuleTag::Unrestricted;
    return d;
}

StepsizeDecision hybrid_control(const CoreQuantities& q, double agreement_factor)
{
    if (!(agreement_factor >= 1.0))
        throw NotApplicable("hybrid_control: agreement factor must be at least 1");
    StepsizeDecision d = base_decision(q);
    if (d.lambda_es <= agreement_factor * d.lambda_as) {
        d.lambda = d.lambda_es;
        d.rule_tag = RuleTag::HybridES;
    } else {
        d.lambda = d.lambda_as;
        d.rule_tag = RuleTag::HybridAS;
    }
    return d;
}

StepsizeDecision exact_control(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const ControlOptions& options)
{
    return exact_control(core_quantities(problem, x, dx, options));
}

StepsizeDecision approximate_control(const ProblemDefinition& problem, const Vector& x,
                                     const Vector& dx, const ControlOptions& options)
{
    return approximate_control(core_quantities(problem, x, dx, options));
}

StepsizeDecision hybrid_control(const ProblemDefinition& problem, const Vector& x,
                                const Vector& dx, double agreement_factor,
                                const ControlOptions& options)
{
    return hybrid_control(core_quantities(problem, x, dx, options), agreement_factor);
}

AsDiagnostics as_error_diagnostics(const ProblemDefinition& problem, const Vector& x,
                                   const std::optional<smooth_svd::SmoothSvdState>& svd_state,
                                   const ControlOptions& options)
{
    const Vector fx = problem.evaluate(x);
    const Matrix j = problem.jacobian(x);
    const linalg::SvdFactorization f = linalg::svd(j);
    const smooth_svd::SmoothSvdState state =
        svd_state ? *svd_state : smooth_svd::init_smallest_triple(j);
    const Vector dx = -linalg::solve(f, fx, options.rank_tol);

    AsDiagnostics diag;
    diag.sigma_n = state.sigma;
    const Eigen::Index n = f.sigmas.size();
    if (n >= 2 && f.sigmas(n - 2) > 0.0) diag.sigma_ratio = std::abs(state.sigma) / f.sigmas(n - 2);
    diag.grad_sigma_step = state.u.dot(problem.second_derivative_action(x, state.v, -dx));
    if (diag.grad_sigma_step != 0.0)
        diag.predicted_lambda = std::abs(state.sigma / diag.grad_sigma_step);
    const CoreQuantities q = core_quantities(problem, x, dx, f, options);
    if (q.as_norm > 0.0) diag.as_lambda = 1.0 / q.as_norm;
    return diag;
}

}  // namespace singstep::stepsize
