#include <cmath>
#include <numbers>
#include <string>

#include "singstep/problem.hpp"

namespace singstep {

namespace {

Matrix mat2(double a, double b, double c, double d)
{
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Vector vec2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

DomainBox square_box(double half_width)
{
    return {Vector::Constant(2, -half_width), Vector::Constant(2, half_width)};
}

const double kExpsinArc = std::acos(1.0 / 3.0) / 3.0;
constexpr double kExpsinPeriod = 2.0 * std::numbers::pi / 3.0;

// Distance and label of the nearest line x + y = c_k of one branch.
std::pair<double, int> nearest_offset_line(double s, bool plus_branch)
{
    const double base = plus_branch ? kExpsinArc : -kExpsinArc;
    const int k = static_cast<int>(std::lround((s - base) / kExpsinPeriod));
    const double c = base + kExpsinPeriod * k;
    return {std::abs(s - c) / std::numbers::sqrt2, 1000 + 2 * k + (plus_branch ? 0 : 1)};
}

}  // namespace

double expsin_singular_offset(int k, bool plus_branch)
{
    return (plus_branch ? kExpsinArc : -kExpsinArc) + kExpsinPeriod * k;
}

double expsin_singular_distance(const Vector& x)
{
    const double s = x(0) + x(1);
    return std::min({std::abs(x(0) - x(1)) / std::numbers::sqrt2,
                     nearest_offset_line(s, true).first, nearest_offset_line(s, false).first});
}

ProblemDefinition make_identity(int dimension)
{
    return make_problem(
        "identity", dimension, [](const Vector& x) -> Vector { return x; },
        [dimension](const Vector&) -> Matrix { return Matrix::Identity(dimension, dimension); },
        [dimension](const Vector&, const Vector&, const Vector&) -> Vector {
            return Vector::Zero(dimension);
        });
}

ProblemDefinition make_scalar_quadratic(double c)
{
    ProblemDefinition p = make_problem(
        "scalar_quadratic", 1,
        [c](const Vector& x) -> Vector { return Vector::Constant(1, x(0) * x(0) + c); },
        [](const Vector& x) -> Matrix { return Matrix::Constant(1, 1, 2.0 * x(0)); },
        [](const Vector&, const Vector& u, const Vector& w) -> Vector {
            return Vector::Constant(1, 2.0 * u(0) * w(0));
        });
    p.singular_set = SingularSet{[](const Vector& x) { return std::abs(x(0)); },
                                 [](const Vector&) { return 0; }};
    return p;
}

ProblemDefinition make_diag_quadratic()
{
    ProblemDefinition p = make_problem(
        "diag_quadratic", 2,
        [](const Vector& x) -> Vector { return vec2(x(0) * x(0), x(1) * x(1)); },
        [](const Vector& x) -> Matrix { return mat2(2.0 * x(0), 0.0, 0.0, 2.0 * x(1)); },
        [](const Vector&, const Vector& u, const Vector& w) -> Vector {
            return vec2(2.0 * u(0) * w(0), 2.0 * u(1) * w(1));
        });
    p.singular_set = SingularSet{
        [](const Vector& x) { return std::min(std::abs(x(0)), std::abs(x(1))); },
        [](const Vector& x) { return std::abs(x(0)) <= std::abs(x(1)) ? 0 : 1; }};
    return p;
}

ProblemDefinition make_expsin()
{
    ProblemDefinition p = make_problem(
        "expsin", 2,
        [](const Vector& x) -> Vector {
            const double s = x(0) + x(1);
            return vec2(std::exp(x(0) * x(0) + x(1) * x(1)) - 3.0, s - std::sin(3.0 * s));
        },
        [](const Vector& x) -> Matrix {
            const double e = std::exp(x(0) * x(0) + x(1) * x(1));
            const double c = 1.0 - 3.0 * std::cos(3.0 * (x(0) + x(1)));
            return mat2(2.0 * x(0) * e, 2.0 * x(1) * e, c, c);
        },
        [](const Vector& x, const Vector& u, const Vector& w) -> Vector {
            const double e = std::exp(x(0) * x(0) + x(1) * x(1));
            const double h11 = (2.0 + 4.0 * x(0) * x(0)) * e;
            const double h12 = 4.0 * x(0) * x(1) * e;
            const double h22 = (2.0 + 4.0 * x(1) * x(1)) * e;
            const double first =
                h11 * u(0) * w(0) + h12 * (u(0) * w(1) + u(1) * w(0)) + h22 * u(1) * w(1);
            const double second =
                9.0 * std::sin(3.0 * (x(0) + x(1))) * (u(0) + u(1)) * (w(0) + w(1));
            return vec2(first, second);
        },
        square_box(3.0));
    p.singular_set = SingularSet{
        [](const Vector& x) { return expsin_singular_distance(x); },
        [](const Vector& x) {
            const double s = x(0) + x(1);
            const double diag = std::abs(x(0) - x(1)) / std::numbers::sqrt2;
            const auto plus = nearest_offset_line(s, true);
            const auto minus = nearest_offset_line(s, false);
            if (diag <= plus.first && diag <= minus.first) return 0;
            return plus.first <= minus.first ? plus.second : minus.second;
        }};
    return p;
}

ProblemDefinition make_crossing_singular()
{
    const Matrix a = mat2(5.0, 10.0, 2.0, 4.0);
    const Matrix b = mat2(4.0, 2.0, 6.0, 3.0);
    const Vector offset = 1e6 * vec2(1.1, 1.0);
    return make_problem(
        "crossing_singular", 2,
        [a, b, offset](const Vector& x) -> Vector {
            return -(x(0) * a + x(1) * b) * x - offset;
        },
        [a, b](const Vector& x) -> Matrix {
            Matrix j = -(x(0) * a + x(1) * b);
            j.col(0) -= a * x;
            j.col(1) -= b * x;
            return j;
        },
        [a, b](const Vector&, const Vector& u, const Vector& w) -> Vector {
            return -(u(0) * a + u(1) * b) * w - (w(0) * a + w(1) * b) * u;
        });
}

ProblemDefinition make_coinciding_singular()
{
    const Matrix m = mat2(1.0, 7.0, 8.0, 3.0);
    const Vector offset = 1e6 * vec2(1.1, 1.0);
    return make_problem(
        "coinciding_singular", 2,
        [m, offset](const Vector& x) -> Vector { return -x(0) * (m * x) - offset; },
        [m](const Vector& x) -> Matrix {
            Matrix j = -x(0) * m;
            j.col(0) -= m * x;
            return j;
        },
        [m](const Vector&, const Vector& u, const Vector& w) -> Vector {
            return -u(0) * (m * w) - w(0) * (m * u);
        });
}

ProblemDefinition make_not_in_range_demo()
{
    ProblemDefinition p = make_problem(
        "not_in_range_demo", 2,
        [](const Vector& x) -> Vector { return vec2(x(0) * x(0), x(1)); },
        [](const Vector& x) -> Matrix { return mat2(2.0 * x(0), 0.0, 0.0, 1.0); },
        [](const Vector&, const Vector& u, const Vector& w) -> Vector {
            return vec2(2.0 * u(0) * w(0), 0.0);
        });
    p.singular_set = SingularSet{[](const Vector& x) { return std::abs(x(0)); },
                                 [](const Vector&) { return 0; }};
    return p;
}

std::vector<ProblemDefinition> builtin_registry()
{
    return {make_identity(2),        make_scalar_quadratic(1.0), make_diag_quadratic(),
            make_expsin(),           make_crossing_singular(),   make_coinciding_singular(),
            make_not_in_range_demo()};
}

ProblemDefinition find_builtin(std::string_view name)
{
    constexpr std::string_view kScalarPrefix = "scalar_quadratic:";
    if (name.starts_with(kScalarPrefix)) {
        const std::string arg(name.substr(kScalarPrefix.size()));
        std::size_t used = 0;
        double c = 0.0;
        try {
            c = std::stod(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != arg.size() || arg.empty())
            throw NotApplicable("bad scalar_quadratic constant: '" + arg + "'");
        return make_scalar_quadratic(c);
    }
    for (ProblemDefinition& p : builtin_registry())
        if (p.name == name) return p;
    throw NotApplicable("unknown problem '" + std::string(name) + "'");
}

}  // namespace singstep
