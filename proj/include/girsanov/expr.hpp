#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "girsanov/errors.hpp"

namespace girsanov {

// ============================================================================
// Scalar expression trees
//
// Coefficient functions arrive as text ("2*x + exp(-x^2)") and are parsed
// into immutable trees.  Grammar:
//
//   expr     := additive
//   additive := multiplicative (('+' | '-') multiplicative)*
//   multi    := unary (('*' | '/') unary)*
//   unary    := '-' unary | power
//   power    := primary ('^' unary)?                      (right-associative)
//   primary  := number | variable | func '(' args ')' | '(' expr ')'
//   func     := exp | log | sqrt | abs | sign | min | max | piecewise
//
// piecewise(cond, a, b) selects a when cond holds, b otherwise; cond must be
// a comparison (l < r, l <= r, l > r, l >= r) and is only legal there.  The
// declared convention is that equality falls to the second branch, i.e. the
// canonical guard is a strict '<'.
//
// Variables: "x" (alias for x1), "x1".."x9", and "t".  Unknown identifiers
// are rejected at parse time.
//
// Evaluation is total: any operation that would produce a non-finite value
// (division by zero, log of a non-positive number, overflow) raises
// eval_error instead of returning NaN or infinity.
// ============================================================================

enum class NodeKind : std::uint8_t {
    Number,     // literal constant
    Variable,   // x1..x9 or t
    Negate,     // unary minus
    Add, Sub, Mul, Div, Pow,
    Exp, Log, Sqrt, Abs, Sign,  // one-argument calls
    Min, Max,                   // two-argument calls
    CmpLt, CmpLe, CmpGt, CmpGe, // comparisons (piecewise guards only)
    Piecewise,                  // (guard, then, else)
};

// Variable slot: 0..8 map to x1..x9 (0 is also plain "x"); kTimeVar is "t".
inline constexpr int kTimeVar = -1;

struct ExprNode {
    NodeKind kind = NodeKind::Number;
    double value = 0.0;           // Number payload
    int var = 0;                  // Variable payload (slot index)
    bool indexed = false;         // Variable payload: written "x1" rather than "x"
    int child[3] = {-1, -1, -1};  // indices into the node pool
};

class Expression {
  public:
    // Parses `source`; throws parse_error with a byte offset on bad input.
    static Expression parse(const std::string& source);

    // Renders the tree with full parenthesization so that
    // parse(print()) reproduces a structurally identical tree.
    std::string print() const;

    // Evaluates at a spatial point (size >= number of x-variables used) and
    // time.  Throws eval_error on any domain violation or non-finite result.
    double evaluate(std::span<const double> point, double time = 0.0) const;

    // Convenience for one-dimensional use.
    double evaluate1(double x, double time = 0.0) const {
        return evaluate(std::span<const double>(&x, 1), time);
    }

    // True when constant folding collapses the tree to the literal 0.
    // (False is not a proof that the function is nonzero almost everywhere.)
    bool is_syntactically_zero() const;

    // Exact set of variable names appearing in the tree ("x", "x2", "t", ...).
    std::set<std::string> free_variables() const;

    // Structural identity of two trees (same shape, same payloads).
    static bool structurally_equal(const Expression& a, const Expression& b);

    // Returns a copy with constants folded (numeric subtrees collapsed,
    // x - x rewritten to 0, multiplication by literal 0 collapsed).
    Expression folded() const;

    // Highest x-variable index used, as a 1-based dimension (0 if none).
    int max_variable_dimension() const;

    // True if the time variable appears.
    bool uses_time() const;

    const std::string& source() const { return source_; }

  private:
    friend class Parser;
    friend class Compiler;

    std::string source_;
    std::vector<ExprNode> nodes_;  // pool; root is nodes_.back()
    int root_ = -1;

    // Compiled postfix program for fast repeated evaluation.
    struct Instr {
        NodeKind op;
        double value;  // Number payload
        int var;       // Variable payload
        int jump;      // target for branch instructions
    };
    enum class JumpKind : std::uint8_t { None, JumpIfZero, Jump };
    struct Step {
        NodeKind op = NodeKind::Number;
        JumpKind jump_kind = JumpKind::None;
        double value = 0.0;
        int var = 0;
        int target = 0;
    };
    std::vector<Step> program_;

    void compile();
    std::string print_node(int idx) const;
};

}  // namespace girsanov
