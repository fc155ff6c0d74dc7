#pragma once

#include <span>
#include <string>
#include <vector>

#include "girsanov/expr.hpp"

namespace girsanov {

// ============================================================================
// Diffusion coefficient fields
//
// A field bundles the drift b, the diffusion matrix c, the perturbation beta
// and the start point x0 of the SDE
//
//     dX = b(X) dt + sqrt(c)(X) dW,        (reference law)
//
// together with the domain the process lives on.  The candidate law produced
// by the exponential change of measure has drift b + c*beta.
//
// For d = 1 each coefficient is a single scalar expression.  For d > 1, b and
// beta are entered component-wise and c as its upper triangle (row-major:
// (1,1),(1,2),...,(1,d),(2,2),...); the lower triangle is mirrored, so c is
// symmetric by construction.
// ============================================================================

enum class Domain { RealLine, PositiveHalfLine, EuclideanD };

std::string to_string(Domain d);

struct CoefficientField {
    int dimension = 1;
    Domain domain = Domain::RealLine;
    std::vector<Expression> b;     // d components
    std::vector<Expression> c;     // d*(d+1)/2 upper-triangle entries
    std::vector<Expression> beta;  // d components
    std::vector<double> x0;        // d coordinates

    // --- scalar (d = 1) conveniences -------------------------------------
    double b1(double x, double t = 0.0) const { return b[0].evaluate1(x, t); }
    double c1(double x, double t = 0.0) const { return c[0].evaluate1(x, t); }
    double beta1(double x, double t = 0.0) const { return beta[0].evaluate1(x, t); }

    // --- general evaluation ----------------------------------------------
    // Index of entry (i,j), i <= j, inside the upper-triangle vector.
    int ut_index(int i, int j) const { return i * dimension - i * (i - 1) / 2 + (j - i); }

    void eval_b(std::span<const double> x, double t, std::span<double> out) const;
    void eval_beta(std::span<const double> x, double t, std::span<double> out) const;
    // Fills a d*d row-major symmetric matrix.
    void eval_c(std::span<const double> x, double t, std::span<double> out) const;

    // <beta, c beta> at a point.
    double beta_c_beta(std::span<const double> x, double t = 0.0) const;
    // b + c*beta (the candidate law's drift) at a point.
    void eval_candidate_drift(std::span<const double> x, double t, std::span<double> out) const;

    bool beta_is_syntactically_zero() const;
    bool uses_time() const;
};

// Throws usage_error when shapes, domain markers or variable usage are
// inconsistent.
void validate_field(const CoefficientField& field);

// Builds a convenient 1-d field from source strings.
CoefficientField make_scalar_field(Domain domain, const std::string& b, const std::string& c,
                                   const std::string& beta, double x0);

// Role swap for the reverse absolute-continuity question: the swapped field
// has drift b' = b + c*beta and perturbation beta' = -beta, so its candidate
// law is the original reference law.  Implemented by composing source text,
// which keeps the swapped coefficients printable.
CoefficientField swapped_roles(const CoefficientField& field);

}  // namespace girsanov
