#include "girsanov/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace girsanov {

namespace {

bool is_ident_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) != 0; }
bool is_ident_char(char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) != 0 || ch == '_';
}

struct FuncSig {
    const char* name;
    NodeKind kind;
    int arity;
};

constexpr FuncSig kFuncs[] = {
    {"exp", NodeKind::Exp, 1},   {"log", NodeKind::Log, 1}, {"sqrt", NodeKind::Sqrt, 1},
    {"abs", NodeKind::Abs, 1},   {"sign", NodeKind::Sign, 1}, {"min", NodeKind::Min, 2},
    {"max", NodeKind::Max, 2},
};

}  // namespace

// ---------------------------------------------------------------------------
// Parser (recursive descent)
// ---------------------------------------------------------------------------

class Parser {
  public:
    explicit Parser(const std::string& src) : src_(src) {}

    Expression run() {
        Expression e;
        e.source_ = src_;
        nodes_ = &e.nodes_;
        skip_ws();
        if (pos_ >= src_.size()) throw parse_error("empty expression", pos_);
        e.root_ = parse_additive();
        skip_ws();
        if (pos_ < src_.size())
            throw parse_error(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        e.compile();
        return e;
    }

  private:
    const std::string& src_;
    std::size_t pos_ = 0;
    std::vector<ExprNode>* nodes_ = nullptr;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char ch) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == ch) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    int add_node(ExprNode n) {
        nodes_->push_back(n);
        return static_cast<int>(nodes_->size()) - 1;
    }

    int make_binary(NodeKind kind, int lhs, int rhs) {
        ExprNode n;
        n.kind = kind;
        n.child[0] = lhs;
        n.child[1] = rhs;
        return add_node(n);
    }

    int parse_additive() {
        int lhs = parse_multiplicative();
        for (;;) {
            if (eat('+')) {
                lhs = make_binary(NodeKind::Add, lhs, parse_multiplicative());
            } else if (eat('-')) {
                lhs = make_binary(NodeKind::Sub, lhs, parse_multiplicative());
            } else {
                return lhs;
            }
        }
    }

    int parse_multiplicative() {
        int lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                lhs = make_binary(NodeKind::Mul, lhs, parse_unary());
            } else if (eat('/')) {
                lhs = make_binary(NodeKind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    int parse_unary() {
        if (eat('-')) {
            int inner = parse_unary();
            // Fold a negated literal into the literal itself so that printing
            // "-3" and re-parsing gives the same tree shape.
            if ((*nodes_)[inner].kind == NodeKind::Number && inner == int(nodes_->size()) - 1) {
                (*nodes_)[inner].value = -(*nodes_)[inner].value;
                return inner;
            }
            ExprNode n;
            n.kind = NodeKind::Negate;
            n.child[0] = inner;
            return add_node(n);
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (eat('^')) {
            // right-associative; exponent may carry a unary minus
            int exponent = parse_unary();
            return make_binary(NodeKind::Pow, base, exponent);
        }
        return base;
    }

    int parse_comparison() {
        std::size_t at = pos_;
        int lhs = parse_additive();
        skip_ws();
        NodeKind kind;
        if (eat('<')) {
            kind = eat('=') ? NodeKind::CmpLe : NodeKind::CmpLt;
        } else if (eat('>')) {
            kind = eat('=') ? NodeKind::CmpGe : NodeKind::CmpGt;
        } else {
            throw parse_error("piecewise guard must be a comparison", at);
        }
        int rhs = parse_additive();
        return make_binary(kind, lhs, rhs);
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw parse_error("unexpected end of input", pos_);
        char ch = src_[pos_];

        if (ch == '(') {
            ++pos_;
            int inner = parse_additive();
            if (!eat(')')) throw parse_error("expected ')'", pos_);
            return inner;
        }

        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return parse_number();

        if (is_ident_start(ch)) return parse_identifier();

        throw parse_error(std::string("unexpected character '") + ch + "'", pos_);
    }

    int parse_number() {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double value = 0.0;
        auto res = std::from_chars(begin, end, value);
        if (res.ec != std::errc()) throw parse_error("malformed number", pos_);
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        ExprNode n;
        n.kind = NodeKind::Number;
        n.value = value;
        return add_node(n);
    }

    int parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string name = src_.substr(start, pos_ - start);

        if (name == "piecewise") {
            if (!eat('(')) throw parse_error("expected '(' after piecewise", pos_);
            int guard = parse_comparison();
            if (!eat(',')) throw parse_error("expected ',' in piecewise", pos_);
            int then_branch = parse_additive();
            if (!eat(',')) throw parse_error("expected ',' in piecewise", pos_);
            int else_branch = parse_additive();
            if (!eat(')')) throw parse_error("expected ')'", pos_);
            ExprNode n;
            n.kind = NodeKind::Piecewise;
            n.child[0] = guard;
            n.child[1] = then_branch;
            n.child[2] = else_branch;
            return add_node(n);
        }

        for (const auto& f : kFuncs) {
            if (name == f.name) {
                if (!eat('(')) throw parse_error("expected '(' after " + name, pos_);
                int a0 = parse_additive();
                int a1 = -1;
                if (f.arity == 2) {
                    if (!eat(',')) throw parse_error("expected ',' in " + name, pos_);
                    a1 = parse_additive();
                }
                if (!eat(')')) throw parse_error("expected ')'", pos_);
                ExprNode n;
                n.kind = f.kind;
                n.child[0] = a0;
                n.child[1] = a1;
                return add_node(n);
            }
        }

        // Variables: x, t, x1..x9
        if (name == "t") {
            ExprNode n;
            n.kind = NodeKind::Variable;
            n.var = kTimeVar;
            return add_node(n);
        }
        if (name == "x") {
            ExprNode n;
            n.kind = NodeKind::Variable;
            n.var = 0;
            return add_node(n);
        }
        if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9') {
            ExprNode n;
            n.kind = NodeKind::Variable;
            n.var = name[1] - '1';
            n.indexed = true;
            return add_node(n);
        }
        throw parse_error("unknown identifier '" + name + "'", start);
    }
};

Expression Expression::parse(const std::string& source) { return Parser(source).run(); }

// ---------------------------------------------------------------------------
// Printing (full parenthesization, %.17g literals: both chosen so that a
// printed tree re-parses to a structurally identical tree)
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* op_text(NodeKind k) {
    switch (k) {
        case NodeKind::Add: return " + ";
        case NodeKind::Sub: return " - ";
        case NodeKind::Mul: return "*";
        case NodeKind::Div: return "/";
        case NodeKind::Pow: return "^";
        case NodeKind::CmpLt: return " < ";
        case NodeKind::CmpLe: return " <= ";
        case NodeKind::CmpGt: return " > ";
        case NodeKind::CmpGe: return " >= ";
        default: return "?";
    }
}

const char* func_text(NodeKind k) {
    switch (k) {
        case NodeKind::Exp: return "exp";
        case NodeKind::Log: return "log";
        case NodeKind::Sqrt: return "sqrt";
        case NodeKind::Abs: return "abs";
        case NodeKind::Sign: return "sign";
        case NodeKind::Min: return "min";
        case NodeKind::Max: return "max";
        default: return "?";
    }
}

}  // namespace

std::string Expression::print_node(int idx) const {
    const ExprNode& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.kind) {
        case NodeKind::Number:
            return format_double(n.value);
        case NodeKind::Variable:
            if (n.var == kTimeVar) return "t";
            if (!n.indexed) return "x";
            return "x" + std::to_string(n.var + 1);
        case NodeKind::Negate:
            return "(-" + print_node(n.child[0]) + ")";
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
        case NodeKind::Pow:
        case NodeKind::CmpLt:
        case NodeKind::CmpLe:
        case NodeKind::CmpGt:
        case NodeKind::CmpGe:
            return "(" + print_node(n.child[0]) + op_text(n.kind) + print_node(n.child[1]) + ")";
        case NodeKind::Exp:
        case NodeKind::Log:
        case NodeKind::Sqrt:
        case NodeKind::Abs:
        case NodeKind::Sign:
            return std::string(func_text(n.kind)) + "(" + print_node(n.child[0]) + ")";
        case NodeKind::Min:
        case NodeKind::Max:
            return std::string(func_text(n.kind)) + "(" + print_node(n.child[0]) + ", " +
                   print_node(n.child[1]) + ")";
        case NodeKind::Piecewise:
            return "piecewise(" + print_node(n.child[0]) + ", " + print_node(n.child[1]) + ", " +
                   print_node(n.child[2]) + ")";
    }
    return "?";
}

std::string Expression::print() const { return print_node(root_); }

// ---------------------------------------------------------------------------
// Compilation to a flat postfix program with explicit jumps (piecewise
// branches are evaluated lazily so a guarded singular branch never runs).
// ---------------------------------------------------------------------------

void Expression::compile() {
    program_.clear();
    std::function<void(int)> emit = [&](int idx) {
        const ExprNode& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.kind) {
            case NodeKind::Number:
            case NodeKind::Variable: {
                Step s;
                s.op = n.kind;
                s.value = n.value;
                s.var = n.var;
                program_.push_back(s);
                return;
            }
            case NodeKind::Piecewise: {
                emit(n.child[0]);
                std::size_t jz_at = program_.size();
                program_.push_back(Step{NodeKind::Number, JumpKind::JumpIfZero, 0.0, 0, 0});
                emit(n.child[1]);
                std::size_t jmp_at = program_.size();
                program_.push_back(Step{NodeKind::Number, JumpKind::Jump, 0.0, 0, 0});
                program_[jz_at].target = static_cast<int>(program_.size());
                emit(n.child[2]);
                program_[jmp_at].target = static_cast<int>(program_.size());
                return;
            }
            default: {
                emit(n.child[0]);
                if (n.child[1] >= 0) emit(n.child[1]);
                Step s;
                s.op = n.kind;
                program_.push_back(s);
                return;
            }
        }
    };
    emit(root_);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void eval_fail(const char* what, std::span<const double> point, double time) {
    std::string msg = what;
    msg += " at point (";
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (i) msg += ", ";
        msg += format_double(point[i]);
    }
    msg += "), t=" + format_double(time);
    throw eval_error(msg);
}

}  // namespace

double Expression::evaluate(std::span<const double> point, double time) const {
    double stack[64];
    int top = -1;
    std::size_t ip = 0;
    const std::size_t n = program_.size();

    while (ip < n) {
        const Step& s = program_[ip];
        if (s.jump_kind == JumpKind::Jump) {
            ip = static_cast<std::size_t>(s.target);
            continue;
        }
        if (s.jump_kind == JumpKind::JumpIfZero) {
            double guard = stack[top--];
            ip = (guard == 0.0) ? static_cast<std::size_t>(s.target) : ip + 1;
            continue;
        }
        switch (s.op) {
            case NodeKind::Number:
                stack[++top] = s.value;
                break;
            case NodeKind::Variable: {
                if (s.var == kTimeVar) {
                    stack[++top] = time;
                } else {
                    if (static_cast<std::size_t>(s.var) >= point.size())
                        eval_fail("variable beyond point dimension", point, time);
                    stack[++top] = point[static_cast<std::size_t>(s.var)];
                }
                break;
            }
            case NodeKind::Negate:
                stack[top] = -stack[top];
                break;
            case NodeKind::Add: {
                double r = stack[top--];
                stack[top] += r;
                if (!std::isfinite(stack[top])) eval_fail("overflow in '+'", point, time);
                break;
            }
            case NodeKind::Sub: {
                double r = stack[top--];
                stack[top] -= r;
                if (!std::isfinite(stack[top])) eval_fail("overflow in '-'", point, time);
                break;
            }
            case NodeKind::Mul: {
                double r = stack[top--];
                stack[top] *= r;
                if (!std::isfinite(stack[top])) eval_fail("overflow in '*'", point, time);
                break;
            }
            case NodeKind::Div: {
                double r = stack[top--];
                stack[top] /= r;
                if (!std::isfinite(stack[top])) eval_fail("division by zero or overflow", point, time);
                break;
            }
            case NodeKind::Pow: {
                double e = stack[top--];
                stack[top] = std::pow(stack[top], e);
                if (!std::isfinite(stack[top])) eval_fail("invalid power", point, time);
                break;
            }
            case NodeKind::Exp:
                stack[top] = std::exp(stack[top]);
                if (!std::isfinite(stack[top])) eval_fail("overflow in exp", point, time);
                break;
            case NodeKind::Log:
                if (stack[top] <= 0.0) eval_fail("log of non-positive value", point, time);
                stack[top] = std::log(stack[top]);
                break;
            case NodeKind::Sqrt:
                if (stack[top] < 0.0) eval_fail("sqrt of negative value", point, time);
                stack[top] = std::sqrt(stack[top]);
                break;
            case NodeKind::Abs:
                stack[top] = std::fabs(stack[top]);
                break;
            case NodeKind::Sign:
                stack[top] = (stack[top] > 0.0) ? 1.0 : (stack[top] < 0.0 ? -1.0 : 0.0);
                break;
            case NodeKind::Min: {
                double r = stack[top--];
                stack[top] = std::fmin(stack[top], r);
                break;
            }
            case NodeKind::Max: {
                double r = stack[top--];
                stack[top] = std::fmax(stack[top], r);
                break;
            }
            case NodeKind::CmpLt: {
                double r = stack[top--];
                stack[top] = stack[top] < r ? 1.0 : 0.0;
                break;
            }
            case NodeKind::CmpLe: {
                double r = stack[top--];
                stack[top] = stack[top] <= r ? 1.0 : 0.0;
                break;
            }
            case NodeKind::CmpGt: {
                double r = stack[top--];
                stack[top] = stack[top] > r ? 1.0 : 0.0;
                break;
            }
            case NodeKind::CmpGe: {
                double r = stack[top--];
                stack[top] = stack[top] >= r ? 1.0 : 0.0;
                break;
            }
            case NodeKind::Piecewise:
                break;  // compiled away into jumps
        }
        ++ip;
    }
    return stack[0];
}

// ---------------------------------------------------------------------------
// Constant folding and structural queries
// ---------------------------------------------------------------------------

namespace {

bool nodes_equal(const std::vector<ExprNode>& an, int a, const std::vector<ExprNode>& bn, int b) {
    const ExprNode& x = an[static_cast<std::size_t>(a)];
    const ExprNode& y = bn[static_cast<std::size_t>(b)];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case NodeKind::Number: {
            // bitwise comparison so 0.0 and -0.0 stay distinguishable
            return x.value == y.value && std::signbit(x.value) == std::signbit(y.value);
        }
        case NodeKind::Variable:
            return x.var == y.var;
        default:
            for (int i = 0; i < 3; ++i) {
                if ((x.child[i] >= 0) != (y.child[i] >= 0)) return false;
                if (x.child[i] >= 0 && !nodes_equal(an, x.child[i], bn, y.child[i])) return false;
            }
            return true;
    }
}

bool is_literal(const std::vector<ExprNode>& nodes, int idx, double v) {
    const ExprNode& n = nodes[static_cast<std::size_t>(idx)];
    return n.kind == NodeKind::Number && n.value == v;
}

// Folds the subtree rooted at `idx` of `src` into `dst`, returning the new
// root index.  Purely constant subexpressions collapse to literals; a few
// zero-propagation rules (x - x, 0 * e) let syntactic-zero detection work on
// the forms that occur in practice.
int fold_node(const std::vector<ExprNode>& src, int idx, std::vector<ExprNode>& dst) {
    const ExprNode& n = src[static_cast<std::size_t>(idx)];

    auto push = [&dst](ExprNode node) {
        dst.push_back(node);
        return static_cast<int>(dst.size()) - 1;
    };
    auto push_number = [&push](double v) {
        ExprNode n2;
        n2.kind = NodeKind::Number;
        n2.value = v;
        return push(n2);
    };

    if (n.kind == NodeKind::Number || n.kind == NodeKind::Variable) return push(n);

    int c0 = fold_node(src, n.child[0], dst);
    int c1 = (n.child[1] >= 0) ? fold_node(src, n.child[1], dst) : -1;
    int c2 = (n.child[2] >= 0) ? fold_node(src, n.child[2], dst) : -1;

    auto number_of = [&dst](int i) -> const ExprNode* {
        const ExprNode& m = dst[static_cast<std::size_t>(i)];
        return m.kind == NodeKind::Number ? &m : nullptr;
    };

    const ExprNode* l = number_of(c0);
    const ExprNode* r = (c1 >= 0) ? number_of(c1) : nullptr;

    // Pure-constant collapse (guarded: a folding failure keeps the node).
    if (l && (c1 < 0 || r) && n.kind != NodeKind::Piecewise) {
        double a = l->value;
        double b = r ? r->value : 0.0;
        double out = 0.0;
        bool ok = true;
        switch (n.kind) {
            case NodeKind::Negate: out = -a; break;
            case NodeKind::Add: out = a + b; break;
            case NodeKind::Sub: out = a - b; break;
            case NodeKind::Mul: out = a * b; break;
            case NodeKind::Div: out = (b != 0.0) ? a / b : 0.0; ok = (b != 0.0); break;
            case NodeKind::Pow: out = std::pow(a, b); break;
            case NodeKind::Exp: out = std::exp(a); break;
            case NodeKind::Log: out = (a > 0.0) ? std::log(a) : 0.0; ok = (a > 0.0); break;
            case NodeKind::Sqrt: out = (a >= 0.0) ? std::sqrt(a) : 0.0; ok = (a >= 0.0); break;
            case NodeKind::Abs: out = std::fabs(a); break;
            case NodeKind::Sign: out = (a > 0.0) ? 1.0 : (a < 0.0 ? -1.0 : 0.0); break;
            case NodeKind::Min: out = std::fmin(a, b); break;
            case NodeKind::Max: out = std::fmax(a, b); break;
            case NodeKind::CmpLt: out = a < b ? 1.0 : 0.0; break;
            case NodeKind::CmpLe: out = a <= b ? 1.0 : 0.0; break;
            case NodeKind::CmpGt: out = a > b ? 1.0 : 0.0; break;
            case NodeKind::CmpGe: out = a >= b ? 1.0 : 0.0; break;
            default: ok = false; break;
        }
        if (ok && std::isfinite(out)) return push_number(out);
    }

    // Zero-propagation rules.
    switch (n.kind) {
        case NodeKind::Sub:
            if (nodes_equal(dst, c0, dst, c1)) return push_number(0.0);
            if (is_literal(dst, c1, 0.0)) return c0;
            break;
        case NodeKind::Add:
            if (is_literal(dst, c0, 0.0)) return c1;
            if (is_literal(dst, c1, 0.0)) return c0;
            break;
        case NodeKind::Mul:
            if (is_literal(dst, c0, 0.0) || is_literal(dst, c1, 0.0)) return push_number(0.0);
            if (is_literal(dst, c0, 1.0)) return c1;
            if (is_literal(dst, c1, 1.0)) return c0;
            break;
        case NodeKind::Div:
            if (is_literal(dst, c0, 0.0) && !is_literal(dst, c1, 0.0)) return push_number(0.0);
            break;
        case NodeKind::Piecewise: {
            const ExprNode* guard = number_of(c0);
            if (guard) return guard->value != 0.0 ? c1 : c2;
            if (nodes_equal(dst, c1, dst, c2)) return c1;
            break;
        }
        default:
            break;
    }

    ExprNode out = n;
    out.child[0] = c0;
    out.child[1] = c1;
    out.child[2] = c2;
    return push(out);
}

}  // namespace

Expression Expression::folded() const {
    Expression out;
    out.source_ = source_;
    out.root_ = fold_node(nodes_, root_, out.nodes_);
    out.compile();
    return out;
}

bool Expression::is_syntactically_zero() const {
    Expression f = folded();
    const ExprNode& root = f.nodes_[static_cast<std::size_t>(f.root_)];
    return root.kind == NodeKind::Number && root.value == 0.0;
}

bool Expression::structurally_equal(const Expression& a, const Expression& b) {
    return nodes_equal(a.nodes_, a.root_, b.nodes_, b.root_);
}

namespace {

// Walks only the live tree from the root; folding may leave orphan nodes in
// the pool that must not count as occurrences.
template <typename Fn>
void visit_from_root(const std::vector<ExprNode>& nodes, int idx, Fn&& fn) {
    const ExprNode& n = nodes[static_cast<std::size_t>(idx)];
    fn(n);
    for (int i = 0; i < 3; ++i) {
        if (n.child[i] >= 0) visit_from_root(nodes, n.child[i], fn);
    }
}

}  // namespace

std::set<std::string> Expression::free_variables() const {
    std::set<std::string> out;
    visit_from_root(nodes_, root_, [&out](const ExprNode& n) {
        if (n.kind != NodeKind::Variable) return;
        if (n.var == kTimeVar) {
            out.insert("t");
        } else if (!n.indexed) {
            out.insert("x");
        } else {
            out.insert("x" + std::to_string(n.var + 1));
        }
    });
    return out;
}

int Expression::max_variable_dimension() const {
    int dim = 0;
    visit_from_root(nodes_, root_, [&dim](const ExprNode& n) {
        if (n.kind == NodeKind::Variable && n.var != kTimeVar) dim = std::max(dim, n.var + 1);
    });
    return dim;
}

bool Expression::uses_time() const {
    bool found = false;
    visit_from_root(nodes_, root_, [&found](const ExprNode& n) {
        if (n.kind == NodeKind::Variable && n.var == kTimeVar) found = true;
    });
    return found;
}

}  // namespace girsanov
