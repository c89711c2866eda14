#include "singstep/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace singstep {

bool DomainBox::contains(const Vector& x) const
{
    if (lower.size() == 0 && upper.size() == 0) return true;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i < lower.size() && x(i) < lower(i)) return false;
        if (i < upper.size() && x(i) > upper(i)) return false;
    }
    return true;
}

Vector ProblemDefinition::evaluate(const Vector& x) const
{
    if (x.size() != dimension)
        throw DimensionMismatch(name + ": point has dimension " + std::to_string(x.size()));
    if (!x.allFinite()) throw NonFinite(name + ": non-finite point");
    if (!domain.contains(x)) throw OutOfDomain(name + ": point outside the domain box");
    Vector fx = f_eval(x);
    if (fx.size() != dimension) throw DimensionMismatch(name + ": F returned wrong dimension");
    if (!fx.allFinite()) throw NonFinite(name + ": F is not finite");
    return fx;
}

Matrix ProblemDefinition::jacobian(const Vector& x) const
{
    Matrix j;
    if (jacobian_mode == JacobianMode::Analytic && jacobian_eval) {
        if (!domain.contains(x)) throw OutOfDomain(name + ": point outside the domain box");
        j = jacobian_eval(x);
    } else {
        const Eigen::Index d = dimension;
        j.resize(d, d);
        // Difference points are not checked against the box; they may cross it by h.
        const Vector f0 = jacobian_mode == JacobianMode::ForwardFd ? f_eval(x) : Vector();
        for (Eigen::Index i = 0; i < d; ++i) {
            const double h = fd_step_jacobian * std::max(1.0, std::abs(x(i)));
            Vector xp = x;
            xp(i) += h;
            if (jacobian_mode == JacobianMode::ForwardFd) {
                j.col(i) = (f_eval(xp) - f0) / (xp(i) - x(i));
            } else {
                Vector xm = x;
                xm(i) -= h;
                j.col(i) = (f_eval(xp) - f_eval(xm)) / (xp(i) - xm(i));
            }
        }
    }
    if (!j.allFinite()) throw NonFinite(name + ": DF is not finite");
    return j;
}

Vector ProblemDefinition::second_derivative_action(const Vector& x, const Vector& u,
                                                   const Vector& w) const
{
    Vector out;
    if (d2f_mode == SecondDerivativeMode::Analytic && second_derivative_eval) {
        out = second_derivative_eval(x, u, w);
    } else {
        const double unorm = u.norm();
        if (unorm == 0.0) return Vector::Zero(dimension);
        const double h = fd_step_hessian * std::max(1.0, x.norm()) / std::max(1.0, unorm);
        out = (jacobian(x + h * u) * w - jacobian(x - h * u) * w) / (2.0 * h);
    }
    if (!out.allFinite()) throw NonFinite(name + ": D^2F action is not finite");
    return out;
}

ProblemDefinition ProblemDefinition::with_fd_derivatives(JacobianMode mode) const
{
    ProblemDefinition p = *this;
    p.jacobian_mode = mode;
    p.d2f_mode = SecondDerivativeMode::FdOfJacobian;
    return p;
}

ProblemDefinition make_problem(std::string name, int dimension, VectorFn f, MatrixFn jacobian,
                               SecondDerivativeAction second_derivative, DomainBox domain)
{
    ProblemDefinition p;
    p.name = std::move(name);
    p.dimension = dimension;
    p.f_eval = std::move(f);
    p.jacobian_mode = jacobian ? JacobianMode::Analytic : JacobianMode::CentralFd;
    p.jacobian_eval = std::move(jacobian);
    p.d2f_mode = second_derivative ? SecondDerivativeMode::Analytic
                                   : SecondDerivativeMode::FdOfJacobian;
    p.second_derivative_eval = std::move(second_derivative);
    p.domain = std::move(domain);
    return p;
}

ProblemDefinition left_compose(const Matrix& m, const ProblemDefinition& problem)
{
    if (m.rows() != problem.dimension || m.cols() != problem.dimension)
        throw DimensionMismatch("left_compose: matrix size does not match the problem");
    ProblemDefinition p = problem;
    p.name = problem.name + "_composed";
    p.f_eval = [m, f = problem.f_eval](const Vector& x) -> Vector { return m * f(x); };
    if (problem.jacobian_eval)
        p.jacobian_eval = [m, j = problem.jacobian_eval](const Vector& x) -> Matrix {
            return m * j(x);
        };
    if (problem.second_derivative_eval)
        p.second_derivative_eval = [m, h = problem.second_derivative_eval](
                                       const Vector& x, const Vector& u,
                                       const Vector& w) -> Vector { return m * h(x, u, w); };
    return p;
}

DerivativeCheckResult check_derivatives(const ProblemDefinition& problem,
                                        const std::vector<Vector>& points, double jacobian_step,
                                        double hessian_step)
{
    ProblemDefinition fd = problem.with_fd_derivatives();
    fd.fd_step_jacobian = jacobian_step;
    // Second differences are taken of the analytic Jacobian.
    ProblemDefinition fd_hess = problem;
    fd_hess.d2f_mode = SecondDerivativeMode::FdOfJacobian;
    fd_hess.fd_step_hessian = hessian_step;
    const double eps = std::numeric_limits<double>::epsilon();

    DerivativeCheckResult res;
    for (const Vector& x : points) {
        const Matrix ja = problem.jacobian(x);
        const Matrix jf = fd.jacobian(x);
        // Rounding floor of a central difference: |F| eps / h.
        const double jac_noise = problem.evaluate(x).norm() * eps / jacobian_step;
        const double jac_err = (ja - jf).norm() / std::max(ja.norm(), jac_noise);
        res.max_jacobian_error = std::max(res.max_jacobian_error, jac_err);

        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const Vector u = Vector::Unit(x.size(), i);
            for (Eigen::Index k = 0; k < x.size(); ++k) {
                const Vector w = Vector::Unit(x.size(), k);
                const Vector ha = problem.second_derivative_action(x, u, w);
                const Vector hf = fd_hess.second_derivative_action(x, u, w);
                const double h_noise = ja.norm() * eps / hessian_step;
                const double scale = std::max({ha.norm(), h_noise, 1e-8 * ja.norm()});
                if (scale == 0.0) continue;
                res.max_second_derivative_error =
                    std::max(res.max_second_derivative_error, (ha - hf).norm() / scale);
            }
        }
        ++res.points_checked;
    }
    return res;
}

}  // namespace singstep
