#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "singstep/linalg.hpp"

namespace singstep {

using linalg::Matrix;
using linalg::Vector;

enum class JacobianMode { Analytic, ForwardFd, CentralFd };
enum class SecondDerivativeMode { Analytic, FdOfJacobian };

using VectorFn = std::function<Vector(const Vector&)>;
using MatrixFn = std::function<Matrix(const Vector&)>;
/// (x, u, w) -> D^2F(x)(u, w)
using SecondDerivativeAction = std::function<Vector(const Vector&, const Vector&, const Vector&)>;

/// Axis-aligned box; an empty box means no restriction.
struct DomainBox {
    Vector lower;
    Vector upper;

    bool contains(const Vector& x) const;
};

/// Closed-form description of where DF is singular, for problems that have one.
struct SingularSet {
    std::function<double(const Vector&)> distance;
    /// Integer label of the nearest connected piece of the singular set.
    std::function<int(const Vector&)> nearest_component;
};

/// A nonlinear system F: R^d -> R^d with first and second derivative access.
///
/// Derivatives are analytic when evaluators are supplied and the mode asks
/// for them; otherwise they come from difference quotients of F (for DF)
/// or of DF (for D^2F).
struct ProblemDefinition {
    std::string name;
    int dimension = 0;
    VectorFn f_eval;
    MatrixFn jacobian_eval;
    SecondDerivativeAction second_derivative_eval;
    JacobianMode jacobian_mode = JacobianMode::CentralFd;
    SecondDerivativeMode d2f_mode = SecondDerivativeMode::FdOfJacobian;
    double fd_step_jacobian = 1e-6;
    double fd_step_hessian = 1e-4;
    DomainBox domain;
    std::optional<SingularSet> singular_set;

    /// F(x). Throws OutOfDomain or NonFinite.
    Vector evaluate(const Vector& x) const;

    /// DF(x), analytic or by differences with step fd_step_jacobian * max(1, |x_i|).
    Matrix jacobian(const Vector& x) const;

    /// D^2F(x)(u, w); the difference quotient uses
    /// h = fd_step_hessian * max(1, ||x||) / max(1, ||u||).
    Vector second_derivative_action(const Vector& x, const Vector& u, const Vector& w) const;

    bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_eval); }
    bool has_analytic_second_derivative() const
    {
        return static_cast<bool>(second_derivative_eval);
    }

    /// Same problem with derivatives forced to difference quotients.
    ProblemDefinition with_fd_derivatives(JacobianMode mode = JacobianMode::CentralFd) const;
};

/// Builds a problem with analytic derivatives where evaluators are given.
ProblemDefinition make_problem(std::string name, int dimension, VectorFn f, MatrixFn jacobian = {},
                               SecondDerivativeAction second_derivative = {},
                               DomainBox domain = {});

/// M o F for a fixed square matrix M.
ProblemDefinition left_compose(const Matrix& m, const ProblemDefinition& problem);

struct DerivativeCheckResult {
    double max_jacobian_error = 0.0;
    double max_second_derivative_error = 0.0;
    int points_checked = 0;
};

/// Compares the analytic derivatives against central differences at the given
/// points. Errors are relative to the analytic value, with a floor for the
/// rounding noise of the difference quotient.
DerivativeCheckResult check_derivatives(const ProblemDefinition& problem,
                                        const std::vector<Vector>& points,
                                        double jacobian_step = 1e-6,
                                        double hessian_step = 1e-4);

ProblemDefinition make_identity(int dimension = 2);
/// F(x) = x^2 + c.
ProblemDefinition make_scalar_quadratic(double c = 1.0);
/// F(x) = (x1^2, x2^2).
ProblemDefinition make_diag_quadratic();
/// F(x, y) = (exp(x^2 + y^2) - 3, x + y - sin(3(x + y))).
ProblemDefinition make_expsin();
/// F(x) = -(x1 A + x2 B) x - 1e6 (1.1, 1), A = [[5,10],[2,4]], B = [[4,2],[6,3]].
ProblemDefinition make_crossing_singular();
/// F(x) = -x1 M x - 1e6 (1.1, 1), M = [[1,7],[8,3]].
ProblemDefinition make_coinciding_singular();
/// F(x) = (x1^2, x2); DF is singular on x1 = 0 where F lies in its range.
ProblemDefinition make_not_in_range_demo();

/// Offsets c with x + y = c on the singular lines of expsin other than y = x:
/// c = +-(1/3) arccos(1/3) + (2/3) pi k.
double expsin_singular_offset(int k, bool plus_branch);
double expsin_singular_distance(const Vector& x);

std::vector<ProblemDefinition> builtin_registry();

/// Looks up a builtin by name. "scalar_quadratic:c" selects the constant.
/// Throws NotApplicable for unknown names.
ProblemDefinition find_builtin(std::string_view name);

/// Parses a polynomial system (see polynomial.hpp for the format).
ProblemDefinition load_polynomial_system(std::string_view text, std::string name = "polynomial");

}  // namespace singstep
