#include "girsanov/field.hpp"

#include <cmath>

#include "girsanov/errors.hpp"

namespace girsanov {

std::string to_string(Domain d) {
    switch (d) {
        case Domain::RealLine: return "RealLine";
        case Domain::PositiveHalfLine: return "PositiveHalfLine";
        default: return "EuclideanD";
    }
}

void CoefficientField::eval_b(std::span<const double> x, double t, std::span<double> out) const {
    for (int i = 0; i < dimension; ++i) out[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)].evaluate(x, t);
}

void CoefficientField::eval_beta(std::span<const double> x, double t, std::span<double> out) const {
    for (int i = 0; i < dimension; ++i)
        out[static_cast<std::size_t>(i)] = beta[static_cast<std::size_t>(i)].evaluate(x, t);
}

void CoefficientField::eval_c(std::span<const double> x, double t, std::span<double> out) const {
    const int d = dimension;
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            double v = c[static_cast<std::size_t>(ut_index(i, j))].evaluate(x, t);
            out[static_cast<std::size_t>(i * d + j)] = v;
            out[static_cast<std::size_t>(j * d + i)] = v;
        }
    }
}

double CoefficientField::beta_c_beta(std::span<const double> x, double t) const {
    const int d = dimension;
    if (d == 1) {
        double bt = beta[0].evaluate(x, t);
        return bt * c[0].evaluate(x, t) * bt;
    }
    std::vector<double> bt(static_cast<std::size_t>(d)), cm(static_cast<std::size_t>(d * d));
    eval_beta(x, t, bt);
    eval_c(x, t, cm);
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            acc += bt[static_cast<std::size_t>(i)] * cm[static_cast<std::size_t>(i * d + j)] *
                   bt[static_cast<std::size_t>(j)];
    return acc;
}

void CoefficientField::eval_candidate_drift(std::span<const double> x, double t,
                                            std::span<double> out) const {
    const int d = dimension;
    if (d == 1) {
        out[0] = b[0].evaluate(x, t) + c[0].evaluate(x, t) * beta[0].evaluate(x, t);
        return;
    }
    std::vector<double> bt(static_cast<std::size_t>(d)), cm(static_cast<std::size_t>(d * d));
    eval_beta(x, t, bt);
    eval_c(x, t, cm);
    eval_b(x, t, out);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j)
            acc += cm[static_cast<std::size_t>(i * d + j)] * bt[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] += acc;
    }
}

bool CoefficientField::beta_is_syntactically_zero() const {
    for (const auto& e : beta) {
        if (!e.is_syntactically_zero()) return false;
    }
    return true;
}

bool CoefficientField::uses_time() const {
    for (const auto& e : b)
        if (e.uses_time()) return true;
    for (const auto& e : c)
        if (e.uses_time()) return true;
    for (const auto& e : beta)
        if (e.uses_time()) return true;
    return false;
}

void validate_field(const CoefficientField& field) {
    const int d = field.dimension;
    if (d < 1 || d > 9) throw usage_error("field dimension must be in 1..9");
    if (d == 1 && field.domain == Domain::EuclideanD)
        throw usage_error("domain EuclideanD requires dimension > 1");
    if (d > 1 && field.domain != Domain::EuclideanD)
        throw usage_error("dimension > 1 requires domain EuclideanD");

    auto expect_size = [](const std::vector<Expression>& v, std::size_t n, const char* what) {
        if (v.size() != n)
            throw usage_error(std::string(what) + ": expected " + std::to_string(n) +
                              " expression(s), got " + std::to_string(v.size()));
    };
    expect_size(field.b, static_cast<std::size_t>(d), "b");
    expect_size(field.beta, static_cast<std::size_t>(d), "beta");
    expect_size(field.c, static_cast<std::size_t>(d * (d + 1) / 2), "c");
    if (field.x0.size() != static_cast<std::size_t>(d))
        throw usage_error("x0: expected " + std::to_string(d) + " coordinate(s)");

    auto check_vars = [d](const Expression& e, const char* what) {
        if (e.max_variable_dimension() > d)
            throw usage_error(std::string(what) + " uses variable beyond dimension " +
                              std::to_string(d) + ": " + e.source());
        if (d > 1) {
            auto vars = e.free_variables();
            if (vars.count("x"))
                throw usage_error(std::string(what) +
                                  ": plain 'x' is ambiguous for dimension > 1; use x1..x" +
                                  std::to_string(d));
        }
    };
    for (const auto& e : field.b) check_vars(e, "b");
    for (const auto& e : field.c) check_vars(e, "c");
    for (const auto& e : field.beta) check_vars(e, "beta");

    if (field.domain == Domain::PositiveHalfLine && field.x0[0] <= 0.0)
        throw usage_error("x0 must be positive on the half-line");
}

CoefficientField make_scalar_field(Domain domain, const std::string& b, const std::string& c,
                                   const std::string& beta, double x0) {
    CoefficientField f;
    f.dimension = 1;
    f.domain = domain;
    f.b.push_back(Expression::parse(b));
    f.c.push_back(Expression::parse(c));
    f.beta.push_back(Expression::parse(beta));
    f.x0.push_back(x0);
    validate_field(f);
    return f;
}

CoefficientField swapped_roles(const CoefficientField& field) {
    CoefficientField out;
    out.dimension = field.dimension;
    out.domain = field.domain;
    out.x0 = field.x0;
    const int d = field.dimension;

    auto wrap = [](const std::string& s) { return "(" + s + ")"; };

    for (int i = 0; i < d; ++i) {
        // b'_i = b_i + sum_j c_ij * beta_j
        std::string src = wrap(field.b[static_cast<std::size_t>(i)].source());
        for (int j = 0; j < d; ++j) {
            int idx = field.ut_index(std::min(i, j), std::max(i, j));
            const std::string& cij = field.c[static_cast<std::size_t>(idx)].source();
            const std::string& bj = field.beta[static_cast<std::size_t>(j)].source();
            src += " + " + wrap(cij) + "*" + wrap(bj);
        }
        out.b.push_back(Expression::parse(src));
        out.beta.push_back(
            Expression::parse("-" + wrap(field.beta[static_cast<std::size_t>(i)].source())));
    }
    for (const auto& e : field.c) out.c.push_back(Expression::parse(e.source()));
    return out;
}

}  // namespace girsanov
