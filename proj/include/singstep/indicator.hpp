#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "singstep/linalg.hpp"
#include "singstep/problem.hpp"

namespace singstep::indicator {

enum class CaseTag {
    Regular,           // DF(x) nonsingular: g = ||F|| / ||DF^-1 F||
    NotInRange,        // DF(x) singular, F(x) outside its range: g = 0
    DirectionalLimit,  // DF(x) singular, F(x) in its range: g = lim g(x + eps v)
};

std::string_view to_string(CaseTag tag);

struct IndicatorOptions {
    double rank_tol = linalg::kDefaultRankTol;
    double range_tol = linalg::kRangeMembershipTol;
    /// RootEncountered is raised when ||F(x)|| <= root_tol.
    double root_tol = 1e-13;
    /// Directional limit: g is sampled at eps0 * 2^-k, k = 0 .. levels-1.
    double limit_eps0 = 1e-3;
    int limit_levels = 9;
    /// LimitUnstable when the last two extrapolants differ by more than this, relatively.
    double limit_rel_tol = 1e-3;
};

struct IndicatorEval {
    double g_value = 0.0;
    CaseTag case_tag = CaseTag::Regular;
    std::optional<Vector> newton_step;       // -DF^-1 F, Regular only
    std::optional<Vector> unit_direction_t;  // DF^-1 F / ||DF^-1 F||, Regular only
    double residual_norm = 0.0;
    double sigma_min_ratio = 0.0;
    double sigma_min = 0.0;
};

/// Singularity indicator g(x, v). v only matters in the DirectionalLimit case.
///
/// Throws RootEncountered if ||F(x)|| <= root_tol and LimitUnstable if the
/// directional limit does not settle.
IndicatorEval compute_g(const ProblemDefinition& problem, const Vector& x, const Vector& v,
                        const IndicatorOptions& options = {});

/// Same, reusing F(x) and the SVD of DF(x).
IndicatorEval compute_g(const ProblemDefinition& problem, const Vector& x, const Vector& v,
                        const Vector& fx, const linalg::SvdFactorization& jacobian_svd,
                        const IndicatorOptions& options = {});

/// Dg(x)(v) = ||J^-1 R||^-2 <T, J^-1 H(v, J^-1 R) - J^-1 DR(v)> with
/// R = F/||F||, DR(v) = (Id - R R^T) J v / ||F||. Throws SingularMatrix.
double directional_derivative_g(const ProblemDefinition& problem, const Vector& x,
                                const Vector& v, double rank_tol = linalg::kDefaultRankTol);

/// Dg(x)(dx) along the Newton step dx, where DR(dx) = 0:
/// (||F|| / ||dx||) <dx/||dx||, J^-1 H(dx, dx/||dx||)>.
double newton_direction_derivative_g(const ProblemDefinition& problem, const Vector& x,
                                     double rank_tol = linalg::kDefaultRankTol);

/// Solution of the bordered system A V = R g, T^T V = 1 together with the
/// left vector u (u^T A = g T^T, u^T R = 1).
struct BorderedIndicator {
    double g = 0.0;
    Vector v;
    Vector u;
};

/// Throws BorderedSingular when [[A, -R], [T^T, 0]] fails the rank test.
BorderedIndicator griewank_reddien_g(const Matrix& a, const Vector& t, const Vector& r,
                                     double rank_tol = linalg::kDefaultRankTol);

enum class CellStatus { Regular, NotInRange, DirectionalLimit, Root, LimitUnstable, Failed };

std::string_view to_string(CellStatus status);

struct FieldCell {
    Vector x;
    CellStatus status = CellStatus::Failed;
    std::optional<double> g_value;
    std::optional<double> sigma_min_ratio;
};

struct Rectangle {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;
};

/// Evaluates g on an nx x ny grid over a rectangle (d = 2 only). Cells are
/// row-major: x1 varies fastest, x2 increases from row to row. The limit
/// direction of DirectionalLimit cells is e1. Per-cell failures are
/// recorded, not thrown.
std::vector<FieldCell> field_scan(const ProblemDefinition& problem, const Rectangle& box, int nx,
                                  int ny, const IndicatorOptions& options = {});

}  // namespace singstep::indicator
