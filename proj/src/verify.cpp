#include "singstep/verify.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "singstep/indicator.hpp"
#include "singstep/problem.hpp"
#include "singstep/smooth_svd.hpp"
#include "singstep/stepsize.hpp"

namespace singstep::verify {

Matrix random_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

Vector random_unit(Rng& rng, Eigen::Index n)
{
    Vector v = random_gaussian(rng, n, 1).col(0);
    while (v.norm() < 1e-6) v = random_gaussian(rng, n, 1).col(0);
    return v.normalized();
}

Matrix random_orthogonal(Rng& rng, Eigen::Index n)
{
    Eigen::HouseholderQR<Matrix> qr(random_gaussian(rng, n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
}

Matrix random_with_singular_values(Rng& rng, const Vector& sigmas)
{
    const Eigen::Index n = sigmas.size();
    return random_orthogonal(rng, n) * sigmas.asDiagonal() * random_orthogonal(rng, n).transpose();
}

namespace {

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Dense LU inverse, deliberately independent of the SVD code under test.
Matrix dense_inverse(const Matrix& a) { return a.fullPivLu().inverse(); }

Matrix rank_deficient(Rng& rng, Eigen::Index n)
{
    Vector s(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) s(i) = uniform(rng, 1.0, 3.0);
    s(n - 1) = 0.0;
    return random_with_singular_values(rng, s);
}

// Rank-deficient A with a B for which the splitting is well conditioned.
bool generic_pair(Rng& rng, Eigen::Index n, Matrix& a, Matrix& b,
                  linalg::ComplementChoice choice, linalg::PerturbationDecomposition& d)
{
    a = rank_deficient(rng, n);
    b = random_gaussian(rng, n, n);
    try {
        d = linalg::perturbation_decompose(a, b, choice);
    } catch (const Error&) {
        return false;
    }
    Matrix stacked(n, n);
    stacked << d.range_basis_a, d.image_basis_bn;
    const linalg::SvdFactorization fs = linalg::svd(stacked);
    const linalg::SvdFactorization fb = linalg::svd(b);
    return fs.sigma_min() > 0.1 && fb.sigma_ratio() > 1e-2;
}

int pick(int trials, int fallback) { return trials > 0 ? trials : fallback; }

CheckResult result(std::string name, double measured, double threshold, bool passed,
                   int instances, std::string detail = {})
{
    CheckResult r;
    r.name = std::move(name);
    r.measured = measured;
    r.threshold = threshold;
    r.passed = passed;
    r.instances = instances;
    r.detail = std::move(detail);
    return r;
}

double spread(const std::vector<double>& values)
{
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
    return *hi / *lo;
}

struct RegularPoint {
    Vector x;
    double g;
};

// Uniform point of [-1.5, 1.5]^2 where expsin is comfortably regular.
RegularPoint regular_expsin_point(Rng& rng, const ProblemDefinition& p)
{
    for (;;) {
        Vector x(2);
        x << uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5);
        const Vector fx = p.evaluate(x);
        if (fx.norm() < 1e-3) continue;
        const linalg::SvdFactorization f = linalg::svd(p.jacobian(x));
        if (f.sigma_ratio() < 1e-4) continue;
        return {x, fx.norm() / linalg::solve(f, fx).norm()};
    }
}

double g_at(const ProblemDefinition& p, const Vector& x)
{
    return indicator::compute_g(p, x, Vector::Unit(p.dimension, 0)).g_value;
}

}  // namespace

CheckResult check_inverse_bounds(Rng& rng, int trials)
{
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(t % 6);
        Matrix l = random_gaussian(rng, n, n) + 3.0 * Matrix::Identity(n, n);
        const Matrix l_inv = dense_inverse(l);
        const double l_inv_norm = linalg::spectral_norm(l_inv);
        Matrix e = random_gaussian(rng, n, n);
        e *= uniform(rng, 0.05, 0.95) / (l_inv_norm * linalg::spectral_norm(e));
        const Matrix m = l + e;
        const linalg::InverseBounds bounds =
            linalg::inverse_perturbation_bounds(l_inv_norm, linalg::spectral_norm(e));
        const Matrix m_inv = dense_inverse(m);
        worst = std::max(worst, linalg::spectral_norm(m_inv) / bounds.inverse_norm);
        worst = std::max(worst, linalg::spectral_norm(l_inv - m_inv) / bounds.inverse_difference);
    }
    const double limit = 1.0 + 1e-10;
    return result("inverse_bounds", worst, limit, worst <= limit, trials,
                  "max of measured / bound");
}

CheckResult check_perturbed_inverse(Rng& rng, bool simplified, int trials)
{
    const std::vector<double> eps_values{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double worst = 0.0;
    int done = 0;
    while (done < trials) {
        Matrix a, b;
        linalg::PerturbationDecomposition d;
        if (!generic_pair(rng, 5, a, b, linalg::ComplementChoice::Orthogonal, d)) continue;
        std::vector<double> diffs;
        for (double eps : eps_values) {
            Matrix approx = d.restricted_inverse_bstar * d.projector_p / eps;
            if (!simplified)
                approx += d.restricted_inverse_astar * (Matrix::Identity(5, 5) - d.projector_p);
            diffs.push_back(linalg::spectral_norm(approx - dense_inverse(a + eps * b)));
        }
        worst = std::max(worst, spread(diffs));
        ++done;
    }
    return result(simplified ? "perturbed_inverse_simplified" : "perturbed_inverse", worst, 10.0,
                  worst < 10.0, done, "max/min of the difference norm across eps");
}

CheckResult check_range_restricted_inverse(Rng& rng, int trials)
{
    const std::vector<double> eps_values{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double worst = 0.0;
    double worst_solve = 0.0;
    int done = 0;
    while (done < trials) {
        Matrix a, b;
        linalg::PerturbationDecomposition d;
        if (!generic_pair(rng, 5, a, b, linalg::ComplementChoice::BPreimageOfRange, d)) continue;
        for (int j = 0; j < 10; ++j) {
            const Vector y = a * random_gaussian(rng, 5, 1).col(0);
            std::vector<double> scaled;
            for (double eps : eps_values) {
                const Vector exact = (a + eps * b).fullPivLu().solve(y);
                scaled.push_back((d.restricted_inverse_astar * y - exact).norm() / eps);
                try {
                    const Vector x = linalg::range_restricted_inverse_apply(d, a, b, eps, y);
                    // Both solutions carry forward error ~ cond * roundoff; compare on that scale.
                    const double cond = 1.0 / linalg::svd(a + eps * b).sigma_ratio();
                    worst_solve = std::max(worst_solve, (x - exact).norm() / exact.norm() / cond);
                } catch (const NoConvergence&) {
                    // Outside the asymptotic regime for this instance.
                }
            }
            worst = std::max(worst, spread(scaled));
        }
        ++done;
    }
    const bool ok = worst < 10.0 && worst_solve <= 1e-13;
    return result("range_restricted_inverse", worst, 10.0, ok, done,
                  fmt::format("max/min of ||Astar y - x|| / eps; fixed-point vs dense, per unit condition number, {:.3g}",
                              worst_solve));
}

CheckResult check_directional_derivative_existence()
{
    const ProblemDefinition p = make_expsin();
    Vector x0(2);
    x0 << 0.6, 0.6;
    Vector v(2);
    v << 0.8, -0.6;

    const indicator::IndicatorEval at_x0 = indicator::compute_g(p, x0, v);
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> first;
    for (double e : eps) first.push_back((g_at(p, x0 + e * v) - at_x0.g_value) / e);

    double worst_shrink = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 2 < first.size(); ++k) {
        const double gap_a = std::abs(first[k + 1] - first[k]);
        const double gap_b = std::abs(first[k + 2] - first[k + 1]);
        worst_shrink = std::min(worst_shrink, gap_b > 0.0 ? gap_a / gap_b
                                                          : std::numeric_limits<double>::infinity());
    }
    std::vector<double> second;
    for (std::size_t k = 0; k + 1 < first.size(); ++k)
        second.push_back(std::abs((first[k] - first[k + 1]) / (eps[k] - eps[k + 1])));
    const double second_spread = spread(second);

    const bool ok = at_x0.case_tag == indicator::CaseTag::NotInRange && worst_shrink >= 1.5 &&
                    second_spread <= 10.0;
    return result("directional_derivative_existence", worst_shrink, 1.5, ok, 1,
                  fmt::format("min gap shrink factor; second difference spread {:.3g}",
                              second_spread));
}

CheckResult check_bordered_equivalence(Rng& rng, int trials, int singular_trials)
{
    double worst_rel = 0.0;
    for (int t = 0; t < trials; ++t) {
        Matrix a = random_gaussian(rng, 4, 4);
        while (linalg::svd(a).sigma_ratio() < 1e-3) a = random_gaussian(rng, 4, 4);
        const Vector tv = random_unit(rng, 4);
        const Vector rv = random_unit(rng, 4);
        const double closed = tv.squaredNorm() / tv.dot(a.fullPivLu().solve(rv));
        const double g = indicator::griewank_reddien_g(a, tv, rv).g;
        worst_rel = std::max(worst_rel, std::abs(g - closed) / std::abs(closed));
    }
    double worst_singular = 0.0;
    for (int t = 0; t < singular_trials;) {
        const Matrix a = rank_deficient(rng, 4);
        try {
            const double g =
                indicator::griewank_reddien_g(a, random_unit(rng, 4), random_unit(rng, 4)).g;
            worst_singular = std::max(worst_singular, std::abs(g));
            ++t;
        } catch (const BorderedSingular&) {
        }
    }
    const bool ok = worst_rel <= 1e-10 && worst_singular <= 1e-8;
    return result("bordered_equivalence", worst_rel, 1e-10, ok, trials + singular_trials,
                  fmt::format("max relative gap; max |g| on singular instances {:.3g}",
                              worst_singular));
}

namespace {

// Walks a matrix path, halving the step whenever propagate refuses it.
smooth_svd::SmoothSvdState track(const smooth_svd::SmoothSvdState& from,
                                 const std::function<Matrix(double)>& path, double t0, double t1)
{
    try {
        return smooth_svd::propagate(from, path(t1));
    } catch (const StepTooLarge&) {
        if (t1 - t0 < 1e-12) throw;
        const double mid = 0.5 * (t0 + t1);
        return track(track(from, path, t0, mid), path, mid, t1);
    }
}

}  // namespace

CheckResult check_smooth_svd(Rng& rng, int paths, int steps)
{
    double worst_sigma = 0.0;
    double worst_deriv = 0.0;
    for (int p = 0; p < paths; ++p) {
        Vector s(4);
        s << 4.0, 3.0, 2.0, 0.5;
        const Matrix a0 = random_with_singular_values(rng, s);
        const Matrix a1 = 0.3 * random_gaussian(rng, 4, 4);
        const Matrix a2 = 0.3 * random_gaussian(rng, 4, 4);
        const std::function<Matrix(double)> path = [&](double t) {
            return Matrix(a0 + t * a1 + t * t * a2);
        };
        smooth_svd::SmoothSvdState state = smooth_svd::init_smallest_triple(path(0.0));
        const double h = 1.0 / steps;
        for (int k = 1; k <= steps; ++k) {
            state = track(state, path, (k - 1) * h, k * h);
            const Matrix a = path(k * h);
            const double ref = linalg::svd(a).sigma_min();
            worst_sigma = std::max(worst_sigma,
                                   std::abs(std::abs(state.sigma) - ref) / std::max(1.0, linalg::spectral_norm(a)));
        }
        // d sigma at the path end versus central differences of the tracked value.
        const double t = 1.0;
        const double fd_h = 1e-5;
        const Matrix da = a1 + 2.0 * t * a2;
        const double analytic = smooth_svd::sigma_directional_derivative(state, da);
        const double up = track(state, path, t, t + fd_h).sigma;
        const double down = track(state, path, t, t - fd_h).sigma;
        const double fd = (up - down) / (2.0 * fd_h);
        worst_deriv = std::max(worst_deriv, std::abs(analytic - fd) / std::max(std::abs(fd), 1e-3));
    }

    // diag(t, 2) through t = 0: sigma must follow t, not |t|.
    double worst_crossing = 0.0;
    Matrix m(2, 2);
    m << -0.1, 0.0, 0.0, 2.0;
    smooth_svd::SmoothSvdState state = smooth_svd::init_smallest_triple(m);
    const double sign = state.sigma * -0.1 > 0.0 ? 1.0 : -1.0;
    for (int k = -9; k <= 10; ++k) {
        m(0, 0) = 0.01 * k;
        state = smooth_svd::propagate(state, m);
        worst_crossing = std::max(worst_crossing, std::abs(state.sigma - sign * 0.01 * k));
    }

    const bool ok = worst_sigma <= 1e-8 && worst_deriv <= 1e-5 && worst_crossing <= 1e-12;
    return result("smooth_svd", worst_sigma, 1e-8, ok, paths,
                  fmt::format("d sigma vs FD {:.3g}; diag(t,2) crossing error {:.3g}", worst_deriv,
                              worst_crossing));
}

CheckResult check_dg_formula(Rng& rng, int trials)
{
    const ProblemDefinition p = make_expsin();
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const RegularPoint pt = regular_expsin_point(rng, p);
        const Vector v = random_unit(rng, 2);
        const double h = 1e-6;
        const double fd = (g_at(p, pt.x + h * v) - g_at(p, pt.x - h * v)) / (2.0 * h);
        const double formula = indicator::directional_derivative_g(p, pt.x, v);
        worst = std::max(worst, std::abs(formula - fd) / std::max(std::abs(fd), 1e-2 * pt.g));
    }
    return result("dg_formula", worst, 1e-4, worst <= 1e-4, trials,
                  "max relative gap to central differences");
}

CheckResult check_es_formula(Rng& rng, int trials, double es_perturbation)
{
    const ProblemDefinition p = make_expsin();
    stepsize::ControlOptions control;
    control.es_perturbation = es_perturbation;
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const RegularPoint pt = regular_expsin_point(rng, p);
        const Vector dx = -linalg::solve(p.jacobian(pt.x), p.evaluate(pt.x));
        const Vector dir = dx.normalized();
        const stepsize::CoreQuantities q = stepsize::core_quantities(p, pt.x, dx, control);
        // Dg(x)(dx / ||dx||) = (g / ||dx||) * es_inner.
        const double predicted = pt.g / dx.norm() * q.es_inner;
        const double h = 1e-6;
        const double fd = (g_at(p, pt.x + h * dir) - g_at(p, pt.x - h * dir)) / (2.0 * h);
        const double scale = std::max(std::abs(fd), 1e-2 * pt.g / dx.norm() * q.as_norm);
        worst = std::max(worst, std::abs(predicted - fd) / scale);
    }
    return result("es_formula", worst, 1e-5, worst <= 1e-5, trials,
                  "max relative gap of g * es_inner to central differences of g");
}

CheckResult check_control_ordering(Rng& rng, int trials, double es_perturbation)
{
    stepsize::ControlOptions control;
    control.es_perturbation = es_perturbation;
    const ProblemDefinition p = make_expsin();
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const RegularPoint pt = regular_expsin_point(rng, p);
        const Vector dx = -linalg::solve(p.jacobian(pt.x), p.evaluate(pt.x));
        const stepsize::CoreQuantities q = stepsize::core_quantities(p, pt.x, dx, control);
        const double es = stepsize::exact_control(q).lambda;
        const double as = stepsize::approximate_control(q).lambda;
        worst = std::max(worst, as - es);
    }

    int mismatches = 0;
    int one_d = 0;
    std::vector<ProblemDefinition> scalars;
    for (double c : {1.0, -1.0, 0.5, -4.0, 2.0}) scalars.push_back(make_scalar_quadratic(c));
    for (const ProblemDefinition& s : scalars) {
        for (double x : {-3.0, -1.7, -0.5, 0.25, 0.5, 1.3, 3.0}) {
            Vector xv(1);
            xv << x;
            const Vector fx = s.evaluate(xv);
            if (fx.norm() < 1e-12) continue;
            const Vector dx = -linalg::solve(s.jacobian(xv), fx);
            const stepsize::CoreQuantities q = stepsize::core_quantities(s, xv, dx, control);
            if (stepsize::exact_control(q).lambda != stepsize::approximate_control(q).lambda)
                ++mismatches;
            ++one_d;
        }
    }
    const bool ok = worst <= 1e-12 && mismatches == 0;
    return result("control_ordering", worst, 1e-12, ok, trials + one_d,
                  fmt::format("max lambda_AS - lambda_ES; 1-D mismatches {}", mismatches));
}

std::vector<CheckResult> run_all(const VerifyOptions& options)
{
    Rng rng(options.seed);
    const int n = options.trials;
    std::vector<CheckResult> out;
    out.push_back(check_inverse_bounds(rng, pick(n, 200)));
    out.push_back(check_perturbed_inverse(rng, false, pick(n, 50)));
    out.push_back(check_perturbed_inverse(rng, true, pick(n, 50)));
    out.push_back(check_range_restricted_inverse(rng, pick(n, 50)));
    out.push_back(check_directional_derivative_existence());
    out.push_back(check_bordered_equivalence(rng, pick(n, 100), pick(n, 20)));
    out.push_back(check_smooth_svd(rng, pick(n, 10)));
    out.push_back(check_dg_formula(rng, pick(n, 200)));
    out.push_back(check_es_formula(rng, pick(n, 200), options.es_perturbation));
    out.push_back(check_control_ordering(rng, pick(n, 1000), options.es_perturbation));
    return out;
}

}  // namespace singstep::verify
