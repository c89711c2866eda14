#include "singstep/indicator.hpp"

#include <cmath>
#include <limits>

namespace singstep::indicator {

std::string_view to_string(CaseTag tag)
{
    switch (tag) {
    case CaseTag::Regular: return "Regular";
    case CaseTag::NotInRange: return "NotInRange";
    case CaseTag::DirectionalLimit: return "DirectionalLimit";
    }
    return "?";
}

std::string_view to_string(CellStatus status)
{
    switch (status) {
    case CellStatus::Regular: return "Regular";
    case CellStatus::NotInRange: return "NotInRange";
    case CellStatus::DirectionalLimit: return "DirectionalLimit";
    case CellStatus::Root: return "Root";
    case CellStatus::LimitUnstable: return "LimitUnstable";
    case CellStatus::Failed: return "Failed";
    }
    return "?";
}

namespace {

// g at a point that is expected to be off the singular set; nested
// directional limits are not followed.
double nearby_g(const ProblemDefinition& problem, const Vector& x, const IndicatorOptions& options)
{
    const Vector fx = problem.evaluate(x);
    if (fx.norm() <= options.root_tol) throw RootEncountered("directional limit sample hit a root");
    const linalg::SvdFactorization f = linalg::svd(problem.jacobian(x));
    if (!f.is_singular(options.rank_tol)) return fx.norm() / linalg::solve(f, fx, options.rank_tol).norm();
    if (!linalg::in_range(f, fx, options.rank_tol, options.range_tol)) return 0.0;
    throw LimitUnstable("singular points are dense along the limit direction");
}

double directional_limit(const ProblemDefinition& problem, const Vector& x, const Vector& v,
                         const IndicatorOptions& options)
{
    const double vnorm = v.norm();
    if (!(vnorm > 0.0)) throw NotApplicable("compute_g: direction v must be nonzero");
    const Vector dir = v / vnorm;
    const int levels = std::max(options.limit_levels, 3);

    std::vector<double> g(levels);
    double eps = options.limit_eps0;
    for (int k = 0; k < levels; ++k, eps *= 0.5) g[k] = nearby_g(problem, x + eps * dir, options);

    // Richardson on halving steps: first removes O(eps), second O(eps^2).
    std::vector<double> r1(levels - 1);
    for (int k = 0; k + 1 < levels; ++k) r1[k] = 2.0 * g[k + 1] - g[k];
    std::vector<double> r2(levels - 2);
    for (int k = 0; k + 1 < levels - 1; ++k) r2[k] = (4.0 * r1[k + 1] - r1[k]) / 3.0;

    const double last = r2.back();
    const double prev = r2[r2.size() - 2];
    const double scale = std::max(std::abs(last), 1e-12);
    if (!std::isfinite(last) || std::abs(last - prev) > options.limit_rel_tol * scale)
        throw LimitUnstable("directional limit of g did not settle");
    return std::max(last, 0.0);
}

}  // namespace

IndicatorEval compute_g(const ProblemDefinition& problem, const Vector& x, const Vector& v,
                        const IndicatorOptions& options)
{
    const Vector fx = problem.evaluate(x);
    return compute_g(problem, x, v, fx, linalg::svd(problem.jacobian(x)), options);
}

IndicatorEval compute_g(const ProblemDefinition& problem, const Vector& x, const Vector& v,
                        const Vector& fx, const linalg::SvdFactorization& jacobian_svd,
                        const IndicatorOptions& options)
{
    IndicatorEval e;
    e.residual_norm = fx.norm();
    e.sigma_min = jacobian_svd.sigma_min();
    e.sigma_min_ratio = jacobian_svd.sigma_ratio();
    if (e.residual_norm <= options.root_tol)
        throw RootEncountered("compute_g: ||F(x)|| is below the root tolerance");

    if (!jacobian_svd.is_singular(options.rank_tol)) {
        const Vector jinv_f = linalg::solve(jacobian_svd, fx, options.rank_tol);
        const double step_norm = jinv_f.norm();
        e.case_tag = CaseTag::Regular;
        e.g_value = e.residual_norm / step_norm;
        e.newton_step = -jinv_f;
        e.unit_direction_t = jinv_f / step_norm;
        return e;
    }
    if (!linalg::in_range(jacobian_svd, fx, options.rank_tol, options.range_tol)) {
        e.case_tag = CaseTag::NotInRange;
        e.g_value = 0.0;
        return e;
    }
    e.case_tag = CaseTag::DirectionalLimit;
    e.g_value = directional_limit(problem, x, v, options);
    return e;
}

double directional_derivative_g(const ProblemDefinition& problem, const Vector& x,
                                const Vector& v, double rank_tol)
{
    const Vector fx = problem.evaluate(x);
    const Matrix j = problem.jacobian(x);
    const linalg::SvdFactorization f = linalg::svd(j);
    const double fnorm = fx.norm();
    const Vector r = fx / fnorm;
    const Vector h = linalg::solve(f, r, rank_tol);
    const double hnorm = h.norm();
    const Vector t = h / hnorm;
    const Vector jv = j * v;
    const Vector dr = (jv - r * r.dot(jv)) / fnorm;
    const Vector inner = linalg::solve(f, problem.second_derivative_action(x, v, h) - dr, rank_tol);
    return t.dot(inner) / (hnorm * hnorm);
}

double newton_direction_derivative_g(const ProblemDefinition& problem, const Vector& x,
                                     double rank_tol)
{
    const Vector fx = problem.evaluate(x);
    const linalg::SvdFactorization f = linalg::svd(problem.jacobian(x));
    const Vector dx = -linalg::solve(f, fx, rank_tol);
    const double dx_norm = dx.norm();
    const Vector dir = dx / dx_norm;
    const Vector w = linalg::solve(f, problem.second_derivative_action(x, dx, dir), rank_tol);
    return fx.norm() / dx_norm * dir.dot(w);
}

BorderedIndicator griewank_reddien_g(const Matrix& a, const Vector& t, const Vector& r,
                                     double rank_tol)
{
    const Eigen::Index n = a.rows();
    if (a.cols() != n || t.size() != n || r.size() != n)
        throw DimensionMismatch("griewank_reddien_g: inconsistent sizes");

    Matrix bordered = Matrix::Zero(n + 1, n + 1);
    bordered.topLeftCorner(n, n) = a;
    bordered.topRightCorner(n, 1) = -r;
    bordered.bottomLeftCorner(1, n) = t.transpose();
    const linalg::SvdFactorization f = linalg::svd(bordered);
    if (f.is_singular(rank_tol))
        throw BorderedSingular("griewank_reddien_g: bordered matrix is singular");

    const Vector rhs = Vector::Unit(n + 1, n);
    const Vector right = linalg::solve(f, rhs, rank_tol);

    // Transposed system: A^T u = g T, R^T u = 1.
    Matrix bordered_t = Matrix::Zero(n + 1, n + 1);
    bordered_t.topLeftCorner(n, n) = a.transpose();
    bordered_t.topRightCorner(n, 1) = -t;
    bordered_t.bottomLeftCorner(1, n) = r.transpose();
    const Vector left = linalg::solve(bordered_t, rhs, rank_tol);

    BorderedIndicator b;
    b.v = right.head(n);
    b.g = right(n);
    b.u = left.head(n);
    return b;
}

std::vector<FieldCell> field_scan(const ProblemDefinition& problem, const Rectangle& box, int nx,
                                  int ny, const IndicatorOptions& options)
{
    if (problem.dimension != 2) throw DimensionMismatch("field_scan: needs a 2-D problem");
    if (nx < 1 || ny < 1) throw NotApplicable("field_scan: resolution must be positive");
    auto coord = [](double lo, double hi, int n, int i) {
        return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
    };
    const Vector e1 = Vector::Unit(2, 0);

    std::vector<FieldCell> cells;
    cells.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            FieldCell cell;
            cell.x = Vector(2);
            cell.x << coord(box.x_min, box.x_max, nx, ix), coord(box.y_min, box.y_max, ny, iy);
            try {
                const Vector fx = problem.evaluate(cell.x);
                const linalg::SvdFactorization f = linalg::svd(problem.jacobian(cell.x));
                cell.sigma_min_ratio = f.sigma_ratio();
                const IndicatorEval e = compute_g(problem, cell.x, e1, fx, f, options);
                cell.g_value = e.g_value;
                cell.status = e.case_tag == CaseTag::Regular      ? CellStatus::Regular
                              : e.case_tag == CaseTag::NotInRange ? CellStatus::NotInRange
                                                                  : CellStatus::DirectionalLimit;
            } catch (const RootEncountered&) {
                cell.status = CellStatus::Root;
            } catch (const LimitUnstable&) {
                cell.status = CellStatus::LimitUnstable;
            } catch (const Error&) {
                cell.status = CellStatus::Failed;
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace singstep::indicator
