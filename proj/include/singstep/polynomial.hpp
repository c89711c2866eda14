#pragma once

#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "singstep/linalg.hpp"

namespace singstep::poly {

/// Sorted (variable index, power) pairs with positive powers; variables are 0-based.
using Monomial = std::vector<std::pair<int, int>>;

/// Sparse multivariate polynomial with real coefficients.
class Polynomial {
public:
    Polynomial() = default;

    static Polynomial constant(double c);
    static Polynomial variable(int index);

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator-() const;
    Polynomial pow(int k) const;

    Polynomial derivative(int index) const;
    double evaluate(const linalg::Vector& x) const;

    /// Largest variable index plus one.
    int variable_count() const;
    const std::map<Monomial, double>& terms() const { return terms_; }

private:
    void add_term(const Monomial& m, double c);

    std::map<Monomial, double> terms_;
};

/// Polynomial system text format: one equation per line, "fK = <expr>" with
/// K in 1..d. Expressions use variables x1..xd, real literals, parentheses,
/// binary + - *, unary minus and ^ with a positive integer exponent. d is the
/// largest variable index; '#' starts a comment; blank lines are ignored.
///
/// Throws ParseError{line, reason} on malformed input and DimensionMismatch
/// when the equations do not cover f1..fd exactly.
std::vector<Polynomial> parse_polynomial_system(std::string_view text);

}  // namespace singstep::poly
