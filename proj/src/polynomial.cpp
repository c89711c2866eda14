#include "singstep/polynomial.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>

#include "singstep/problem.hpp"

namespace singstep::poly {

Polynomial Polynomial::constant(double c)
{
    Polynomial p;
    p.add_term({}, c);
    return p;
}

Polynomial Polynomial::variable(int index)
{
    Polynomial p;
    p.add_term({{index, 1}}, 1.0);
    return p;
}

void Polynomial::add_term(const Monomial& m, double c)
{
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const
{
    Polynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator-() const
{
    Polynomial r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const
{
    Polynomial r;
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            Monomial m;
            auto ia = ma.begin();
            auto ib = mb.begin();
            while (ia != ma.end() || ib != mb.end()) {
                if (ib == mb.end() || (ia != ma.end() && ia->first < ib->first)) {
                    m.push_back(*ia++);
                } else if (ia == ma.end() || ib->first < ia->first) {
                    m.push_back(*ib++);
                } else {
                    m.emplace_back(ia->first, ia->second + ib->second);
                    ++ia;
                    ++ib;
                }
            }
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::pow(int k) const
{
    Polynomial r = constant(1.0);
    for (int i = 0; i < k; ++i) r = r * *this;
    return r;
}

Polynomial Polynomial::derivative(int index) const
{
    Polynomial r;
    for (const auto& [m, c] : terms_) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i].first != index) continue;
            Monomial dm = m;
            const int power = dm[i].second;
            if (power == 1)
                dm.erase(dm.begin() + static_cast<std::ptrdiff_t>(i));
            else
                dm[i].second = power - 1;
            r.add_term(dm, c * power);
        }
    }
    return r;
}

double Polynomial::evaluate(const linalg::Vector& x) const
{
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
        double t = c;
        for (const auto& [var, power] : m) t *= std::pow(x(var), power);
        sum += t;
    }
    return sum;
}

int Polynomial::variable_count() const
{
    int n = 0;
    for (const auto& [m, c] : terms_)
        for (const auto& [var, power] : m) n = std::max(n, var + 1);
    return n;
}

namespace {

// Recursive-descent parser over a single equation's right-hand side.
class ExpressionParser {
public:
    ExpressionParser(std::string_view src, std::size_t line) : src_(src), line_(line) {}

    Polynomial parse_all()
    {
        Polynomial p = expression();
        skip_space();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return p;
    }

    int max_variable() const { return max_var_; }

private:
    [[noreturn]] void fail(const std::string& reason) const { throw ParseError(line_, reason); }

    void skip_space()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    std::optional<char> peek()
    {
        skip_space();
        if (pos_ >= src_.size()) return std::nullopt;
        return src_[pos_];
    }

    Polynomial expression()
    {
        Polynomial p = term();
        while (auto c = peek()) {
            if (*c != '+' && *c != '-') break;
            ++pos_;
            Polynomial rhs = term();
            p = *c == '+' ? p + rhs : p - rhs;
        }
        return p;
    }

    Polynomial term()
    {
        Polynomial p = unary();
        while (auto c = peek()) {
            if (*c != '*') break;
            ++pos_;
            p = p * unary();
        }
        return p;
    }

    Polynomial unary()
    {
        auto c = peek();
        if (c && (*c == '-' || *c == '+')) {
            ++pos_;
            Polynomial p = unary();
            return *c == '-' ? -p : p;
        }
        return power();
    }

    Polynomial power()
    {
        Polynomial base = primary();
        auto c = peek();
        if (c && *c == '^') {
            ++pos_;
            skip_space();
            const int k = integer("exponent");
            if (k < 1) fail("exponent must be a positive integer");
            return base.pow(k);
        }
        return base;
    }

    int integer(const char* what)
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start) fail(std::string("expected ") + what);
        if (pos_ - start > 6) fail(std::string(what) + " too large");
        return std::stoi(std::string(src_.substr(start, pos_ - start)));
    }

    Polynomial primary()
    {
        auto c = peek();
        if (!c) fail("unexpected end of expression");
        if (*c == '(') {
            ++pos_;
            Polynomial p = expression();
            auto close = peek();
            if (!close || *close != ')') fail("expected ')'");
            ++pos_;
            return p;
        }
        if (*c == 'x') {
            ++pos_;
            const int index = integer("variable index");
            if (index < 1) fail("variable indices start at 1");
            max_var_ = std::max(max_var_, index);
            return Polynomial::variable(index - 1);
        }
        if (std::isdigit(static_cast<unsigned char>(*c)) || *c == '.') {
            const std::string rest(src_.substr(pos_));
            char* end = nullptr;
            const double value = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("bad number");
            if (!std::isfinite(value)) fail("number out of range");
            pos_ += static_cast<std::size_t>(end - rest.c_str());
            return Polynomial::constant(value);
        }
        fail("unexpected '" + std::string(1, *c) + "'");
    }

    std::string_view src_;
    std::size_t line_;
    std::size_t pos_ = 0;
    int max_var_ = 0;
};

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<Polynomial> parse_polynomial_system(std::string_view text)
{
    std::map<int, Polynomial> equations;
    int max_var = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'fK = <expr>'");
        const std::string_view lhs = trim(line.substr(0, eq));
        if (lhs.size() < 2 || lhs[0] != 'f') throw ParseError(line_no, "left side must be fK");
        int index = 0;
        for (char ch : lhs.substr(1)) {
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw ParseError(line_no, "left side must be fK");
            index = index * 10 + (ch - '0');
            if (index > 1000000) throw ParseError(line_no, "equation index too large");
        }
        if (index < 1) throw ParseError(line_no, "equation indices start at 1");
        if (equations.contains(index))
            throw ParseError(line_no, "duplicate equation f" + std::to_string(index));

        ExpressionParser parser(line.substr(eq + 1), line_no);
        equations.emplace(index, parser.parse_all());
        max_var = std::max(max_var, parser.max_variable());
    }

    if (equations.empty()) throw DimensionMismatch("polynomial system has no equations");
    const int d = std::max(max_var, static_cast<int>(equations.size()));
    if (static_cast<int>(equations.size()) != d || equations.rbegin()->first != d)
        throw DimensionMismatch("expected equations f1..f" + std::to_string(d) + ", got " +
                                std::to_string(equations.size()));
    std::vector<Polynomial> out;
    out.reserve(equations.size());
    for (auto& [k, p] : equations) out.push_back(std::move(p));
    return out;
}

}  // namespace singstep::poly

namespace singstep {

ProblemDefinition load_polynomial_system(std::string_view text, std::string name)
{
    using poly::Polynomial;
    const std::vector<Polynomial> eqs = poly::parse_polynomial_system(text);
    const int d = static_cast<int>(eqs.size());

    std::vector<std::vector<Polynomial>> jac(d, std::vector<Polynomial>(d));
    std::vector<std::vector<std::vector<Polynomial>>> hess(
        d, std::vector<std::vector<Polynomial>>(d, std::vector<Polynomial>(d)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            jac[i][j] = eqs[i].derivative(j);
            for (int k = 0; k < d; ++k) hess[i][j][k] = jac[i][j].derivative(k);
        }

    return make_problem(
        std::move(name), d,
        [eqs, d](const Vector& x) -> Vector {
            Vector f(d);
            for (int i = 0; i < d; ++i) f(i) = eqs[i].evaluate(x);
            return f;
        },
        [jac, d](const Vector& x) -> Matrix {
            Matrix j(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) j(r, c) = jac[r][c].evaluate(x);
            return j;
        },
        [hess, d](const Vector& x, const Vector& u, const Vector& w) -> Vector {
            Vector out = Vector::Zero(d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k) {
                        if (u(j) == 0.0 || w(k) == 0.0) continue;
                        out(i) += hess[i][j][k].evaluate(x) * u(j) * w(k);
                    }
            return out;
        });
}

}  // namespace singstep
