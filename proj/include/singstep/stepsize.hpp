#pragma once

#include <optional>
#include <string_view>

#include "singstep/linalg.hpp"
#include "singstep/problem.hpp"
#include "singstep/smooth_svd.hpp"

namespace singstep::stepsize {

enum class RuleTag { ES, AS, HybridES, HybridAS, Unrestricted };

std::string_view to_string(RuleTag tag);

struct ControlOptions {
    double rank_tol = linalg::kDefaultRankTol;
    /// Relative perturbation applied to the exact-control inner product.
    /// Test hook for checking that the verification suite notices a wrong formula.
    double es_perturbation = 0.0;
};

/// Terms shared by the exact and approximate controls at (x, dx):
/// w = DF(x)^-1 D^2F(x)(dx, dx/||dx||).
struct CoreQuantities {
    Vector w;
    double es_inner = 0.0;  // <dx/||dx||, w>
    double as_norm = 0.0;   // ||w||
};

struct StepsizeDecision {
    double lambda = 1.0;
    RuleTag rule_tag = RuleTag::Unrestricted;
    double es_inner = 0.0;
    double as_norm = 0.0;
    /// g decreases along dx (Dg(x)(dx) < 0, equivalently es_inner < 0).
    bool toward_singularity = false;
    double lambda_es = 1.0;  // min(1, 1/|es_inner|)
    double lambda_as = 1.0;  // min(1, 1/as_norm)
};

/// Throws SingularMatrix when DF(x) fails the rank test, NotApplicable for dx = 0.
CoreQuantities core_quantities(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const ControlOptions& options = {});
CoreQuantities core_quantities(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const linalg::SvdFactorization& jacobian_svd,
                               const ControlOptions& options = {});

/// lambda = min(1, 1/|<dx/||dx||, w>|); Unrestricted when the inner product vanishes.
StepsizeDecision exact_control(const CoreQuantities& q);
/// lambda = min(1, 1/||w||); Unrestricted when w = 0.
StepsizeDecision approximate_control(const CoreQuantities& q);
/// Exact control when lambda_es / lambda_as <= agreement_factor, approximate otherwise.
StepsizeDecision hybrid_control(const CoreQuantities& q, double agreement_factor = 2.0);

StepsizeDecision exact_control(const ProblemDefinition& problem, const Vector& x, const Vector& dx,
                               const ControlOptions& options = {});
StepsizeDecision approximate_control(const ProblemDefinition& problem, const Vector& x,
                                     const Vector& dx, const ControlOptions& options = {});
StepsizeDecision hybrid_control(const ProblemDefinition& problem, const Vector& x,
                                const Vector& dx, double agreement_factor = 2.0,
                                const ControlOptions& options = {});

/// Quantities of the smallest-singular-value expansion of the approximate control.
struct AsDiagnostics {
    double sigma_n = 0.0;               // signed when taken from a tracked state
    std::optional<double> sigma_ratio;  // |sigma_n| / sigma_{n-1}; absent for d = 1
    double grad_sigma_step = 0.0;       // <u_n, D^2F(x)(v_n, -dx)>
    std::optional<double> predicted_lambda;  // |sigma_n / grad_sigma_step|
    std::optional<double> as_lambda;         // 1 / ||w||, unclamped
};

/// Uses the tracked triple when given, else seeds one from DF(x).
/// Throws ClusteredSingularValues or SingularMatrix.
AsDiagnostics as_error_diagnostics(const ProblemDefinition& problem, const Vector& x,
                                   const std::optional<smooth_svd::SmoothSvdState>& svd_state = {},
                                   const ControlOptions& options = {});

}  // namespace singstep::stepsize
