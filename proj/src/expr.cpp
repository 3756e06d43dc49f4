#include "fracvar/expr.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "fracvar/specfun.hpp"

namespace fracvar {

enum class Op { Number, Slot, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Ln, Sqrt, Abs, Gamma, Mlf };

namespace detail {

struct Node {
    Op op;
    double value = 0.0;  // Number
    int slot = -1;       // Slot
    std::vector<std::shared_ptr<const Node>> kids;
};

}  // namespace detail

using NodePtr = std::shared_ptr<const detail::Node>;

struct LagrangianExpr::Instr {
    Op op;
    int a = -1;  // operand tape indices
    int b = -1;
    double value = 0.0;
    int slot = -1;
    bool b_varies = true;  // second operand depends on some argument slot
    bool a_varies = true;
};

namespace {

NodePtr make_number(double v) {
    auto n = std::make_shared<detail::Node>();
    n->op = Op::Number;
    n->value = v;
    return n;
}

NodePtr make_slot(int s) {
    auto n = std::make_shared<detail::Node>();
    n->op = Op::Slot;
    n->slot = s;
    return n;
}

NodePtr make_node(Op op, std::vector<NodePtr> kids) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
}

struct FunctionInfo {
    Op op;
    int arity;
};

const std::unordered_map<std::string_view, FunctionInfo>& function_table() {
    static const std::unordered_map<std::string_view, FunctionInfo> table = {
        {"sin", {Op::Sin, 1}},   {"cos", {Op::Cos, 1}},   {"exp", {Op::Exp, 1}},
        {"ln", {Op::Ln, 1}},     {"sqrt", {Op::Sqrt, 1}}, {"abs", {Op::Abs, 1}},
        {"gamma", {Op::Gamma, 1}}, {"mlf", {Op::Mlf, 2}},
    };
    return table;
}

const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Ln: return "ln";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Gamma: return "gamma";
        case Op::Mlf: return "mlf";
        default: return "?";
    }
}

class Parser {
public:
    Parser(std::string_view src, int n_components, int n_params)
        : src_(src), n_(n_components), r_(n_params) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("empty expression");
        }
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ < src_.size()) {
            fail(fmt::format("unexpected '{}'", src_[pos_]));
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(fmt::format("syntax error at column {}: {}", pos_ + 1, msg), 0,
                         static_cast<int>(pos_) + 1);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make_node(Op::Add, {lhs, parse_product()});
            } else if (accept('-')) {
                lhs = make_node(Op::Sub, {lhs, parse_product()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_node(Op::Mul, {lhs, parse_unary()});
            } else if (accept('/')) {
                lhs = make_node(Op::Div, {lhs, parse_unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) {
            return make_node(Op::Neg, {parse_unary()});
        }
        if (accept('+')) {
            return parse_unary();
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) {
            // Right associative; the exponent may carry its own sign.
            return make_node(Op::Pow, {base, parse_unary()});
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail("unexpected end of input");
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier();
        }
        fail(fmt::format("unexpected '{}'", c));
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) {
                ++look;
            }
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    ++pos_;
                }
            }
        }
        double value = 0.0;
        const auto* first = src_.data() + start;
        const auto* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            pos_ = start;
            fail("malformed number");
        }
        return make_number(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);

        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            const auto& table = function_table();
            auto it = table.find(name);
            if (it == table.end()) {
                pos_ = start;
                fail(fmt::format("unknown function '{}'", name));
            }
            ++pos_;
            std::vector<NodePtr> args;
            if (!accept(')')) {
                do {
                    args.push_back(parse_sum());
                } while (accept(','));
                if (!accept(')')) {
                    fail("expected ')' after function arguments");
                }
            }
            if (static_cast<int>(args.size()) != it->second.arity) {
                pos_ = start;
                fail(fmt::format("function '{}' expects {} argument(s), got {}", name,
                                 it->second.arity, args.size()));
            }
            return make_node(it->second.op, std::move(args));
        }

        if (name == "x") {
            return make_slot(0);
        }
        if (name == "pi") {
            return make_number(std::numbers::pi);
        }
        if (name.size() >= 2 && (name[0] == 'y' || name[0] == 'v' || name[0] == 'p')) {
            int index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec == std::errc() && ptr == name.data() + name.size() && name[1] != '0') {
                const int limit = name[0] == 'p' ? r_ : n_;
                if (index >= 1 && index <= limit) {
                    switch (name[0]) {
                        case 'y': return make_slot(index);
                        case 'v': return make_slot(n_ + index);
                        default: return make_slot(2 * n_ + index);
                    }
                }
            }
        }
        pos_ = start;
        fail(fmt::format("unknown identifier '{}'", name));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int n_;
    int r_;
};

void collect_slots(const detail::Node& n, std::vector<bool>& uses) {
    if (n.op == Op::Slot) {
        uses[n.slot] = true;
    }
    for (const auto& k : n.kids) {
        collect_slots(*k, uses);
    }
}

bool subtree_varies(const detail::Node& n) {
    if (n.op == Op::Slot) {
        return true;
    }
    for (const auto& k : n.kids) {
        if (subtree_varies(*k)) {
            return true;
        }
    }
    return false;
}

int emit(const detail::Node& n, std::vector<LagrangianExpr::Instr>& tape) {
    LagrangianExpr::Instr ins{n.op};
    if (n.op == Op::Number) {
        ins.value = n.value;
    } else if (n.op == Op::Slot) {
        ins.slot = n.slot;
    } else {
        ins.a = emit(*n.kids[0], tape);
        ins.a_varies = subtree_varies(*n.kids[0]);
        if (n.kids.size() > 1) {
            ins.b = emit(*n.kids[1], tape);
            ins.b_varies = subtree_varies(*n.kids[1]);
        }
    }
    tape.push_back(ins);
    return static_cast<int>(tape.size()) - 1;
}

void print_node(const detail::Node& n, const std::vector<std::string>& names, std::string& out) {
    switch (n.op) {
        case Op::Number:
            if (std::signbit(n.value)) {
                out += fmt::format("({:.17g})", n.value);
            } else {
                out += fmt::format("{:.17g}", n.value);
            }
            return;
        case Op::Slot:
            out += names[n.slot];
            return;
        case Op::Neg:
            out += "(-";
            print_node(*n.kids[0], names, out);
            out += ")";
            return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow: {
            const char sym = n.op == Op::Add   ? '+'
                             : n.op == Op::Sub ? '-'
                             : n.op == Op::Mul ? '*'
                             : n.op == Op::Div ? '/'
                                               : '^';
            out += "(";
            print_node(*n.kids[0], names, out);
            out += sym;
            print_node(*n.kids[1], names, out);
            out += ")";
            return;
        }
        default:
            out += function_name(n.op);
            out += "(";
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                if (i > 0) {
                    out += ",";
                }
                print_node(*n.kids[i], names, out);
            }
            out += ")";
            return;
    }
}

double checked_pow(double base, double exponent) {
    if (base < 0.0 && exponent != std::floor(exponent)) {
        throw DomainError(
            fmt::format("pow: negative base {} with non-integer exponent {}", base, exponent));
    }
    return std::pow(base, exponent);
}

double checked_ln(double a) {
    if (!(a > 0.0)) {
        throw DomainError(fmt::format("ln: argument must be > 0, got {}", a));
    }
    return std::log(a);
}

double checked_sqrt(double a) {
    if (a < 0.0) {
        throw DomainError(fmt::format("sqrt: argument must be >= 0, got {}", a));
    }
    return std::sqrt(a);
}

using Tape = std::vector<LagrangianExpr::Instr>;

void forward(const Tape& tape, std::span<const double> args, std::vector<double>& vals) {
    vals.resize(tape.size());
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const auto& t = tape[i];
        const double a = t.a >= 0 ? vals[t.a] : 0.0;
        const double b = t.b >= 0 ? vals[t.b] : 0.0;
        double r = 0.0;
        switch (t.op) {
            case Op::Number: r = t.value; break;
            case Op::Slot: r = args[t.slot]; break;
            case Op::Neg: r = -a; break;
            case Op::Add: r = a + b; break;
            case Op::Sub: r = a - b; break;
            case Op::Mul: r = a * b; break;
            case Op::Div: r = a / b; break;
            case Op::Pow: r = checked_pow(a, b); break;
            case Op::Sin: r = std::sin(a); break;
            case Op::Cos: r = std::cos(a); break;
            case Op::Exp: r = std::exp(a); break;
            case Op::Ln: r = checked_ln(a); break;
            case Op::Sqrt: r = checked_sqrt(a); break;
            case Op::Abs: r = std::abs(a); break;
            case Op::Gamma: r = gamma_fn(a); break;
            case Op::Mlf: r = mittag_leffler(a, b); break;
        }
        vals[i] = r;
    }
}

}  // namespace

LagrangianExpr::LagrangianExpr(NodePtr root, int n_components, int n_params, std::string source)
    : root_(std::move(root)), n_components_(n_components), n_params_(n_params),
      source_(std::move(source)) {
    auto tape = std::make_shared<Tape>();
    emit(*root_, *tape);
    tape_ = std::move(tape);
    uses_slot_.assign(static_cast<std::size_t>(arity()), false);
    collect_slots(*root_, uses_slot_);
}

LagrangianExpr LagrangianExpr::parse(std::string_view src, int n_components, int n_params) {
    if (n_components < 1) {
        throw PreconditionError("parse_lagrangian: n_components must be >= 1");
    }
    if (n_params < 0) {
        throw PreconditionError("parse_lagrangian: n_params must be >= 0");
    }
    Parser parser(src, n_components, n_params);
    NodePtr root = parser.parse();
    return LagrangianExpr(std::move(root), n_components, n_params, std::string(src));
}

LagrangianExpr LagrangianExpr::constant(double value, int n_components, int n_params) {
    return LagrangianExpr(make_number(value), n_components, n_params,
                          fmt::format("{:.17g}", value));
}

void LagrangianExpr::check_arity(std::span<const double> args) const {
    if (static_cast<int>(args.size()) != arity()) {
        throw DimensionError(fmt::format("expression '{}' expects {} arguments, got {}", source_,
                                         arity(), args.size()));
    }
}

double LagrangianExpr::eval(std::span<const double> args) const {
    check_arity(args);
    thread_local std::vector<double> vals;
    forward(*tape_, args, vals);
    return vals.back();
}

double LagrangianExpr::partials(std::span<const double> args, std::span<double> grad) const {
    check_arity(args);
    if (static_cast<int>(grad.size()) != arity()) {
        throw DimensionError("partials: gradient buffer has the wrong length");
    }
    const Tape& tape = *tape_;
    thread_local std::vector<double> vals;
    thread_local std::vector<double> adj;
    forward(tape, args, vals);
    adj.assign(tape.size(), 0.0);
    adj.back() = 1.0;
    std::fill(grad.begin(), grad.end(), 0.0);

    for (std::size_t idx = tape.size(); idx-- > 0;) {
        const auto& t = tape[idx];
        const double g = adj[idx];
        if (g == 0.0 && t.op != Op::Mlf) {
            continue;
        }
        const double a = t.a >= 0 ? vals[t.a] : 0.0;
        const double b = t.b >= 0 ? vals[t.b] : 0.0;
        switch (t.op) {
            case Op::Number: break;
            case Op::Slot: grad[t.slot] += g; break;
            case Op::Neg: adj[t.a] -= g; break;
            case Op::Add:
                adj[t.a] += g;
                adj[t.b] += g;
                break;
            case Op::Sub:
                adj[t.a] += g;
                adj[t.b] -= g;
                break;
            case Op::Mul:
                adj[t.a] += g * b;
                adj[t.b] += g * a;
                break;
            case Op::Div:
                adj[t.a] += g / b;
                adj[t.b] -= g * a / (b * b);
                break;
            case Op::Pow:
                if (t.a_varies) {
                    adj[t.a] += g * (b == 0.0 ? 0.0 : b * checked_pow(a, b - 1.0));
                }
                if (t.b_varies) {
                    if (a > 0.0) {
                        adj[t.b] += g * vals[idx] * std::log(a);
                    } else if (a < 0.0) {
                        throw DomainError("pow: derivative in the exponent needs a positive base");
                    }
                }
                break;
            case Op::Sin: adj[t.a] += g * std::cos(a); break;
            case Op::Cos: adj[t.a] -= g * std::sin(a); break;
            case Op::Exp: adj[t.a] += g * vals[idx]; break;
            case Op::Ln: adj[t.a] += g / a; break;
            case Op::Sqrt: adj[t.a] += g * 0.5 / vals[idx]; break;
            case Op::Abs: adj[t.a] += g * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0)); break;
            case Op::Gamma: adj[t.a] += g * vals[idx] * digamma(a); break;
            case Op::Mlf:
                if (t.a_varies) {
                    throw DifferentiationError(
                        "partials: mlf is not differentiable in its order argument");
                }
                if (g != 0.0) {
                    adj[t.b] += g * mittag_leffler_derivative(a, b);
                }
                break;
        }
    }
    return vals.back();
}

std::vector<double> LagrangianExpr::partials(std::span<const double> args) const {
    std::vector<double> grad(static_cast<std::size_t>(arity()));
    partials(args, grad);
    return grad;
}

bool LagrangianExpr::depends_on(int slot) const {
    if (slot < 0 || slot >= arity()) {
        return false;
    }
    return uses_slot_[static_cast<std::size_t>(slot)];
}

std::string LagrangianExpr::print() const {
    std::vector<std::string> names;
    names.emplace_back("x");
    for (int i = 1; i <= n_components_; ++i) {
        names.push_back(fmt::format("y{}", i));
    }
    for (int i = 1; i <= n_components_; ++i) {
        names.push_back(fmt::format("v{}", i));
    }
    for (int j = 1; j <= n_params_; ++j) {
        names.push_back(fmt::format("p{}", j));
    }
    std::string out;
    print_node(*root_, names, out);
    return out;
}

LagrangianExpr LagrangianExpr::with_params(int n_params) const {
    if (n_params < n_params_) {
        throw PreconditionError("with_params: cannot drop parameter slots");
    }
    if (n_params == n_params_) {
        return *this;
    }
    // Parameter slots come last, so existing slot numbers stay valid.
    return LagrangianExpr(root_, n_components_, n_params, source_);
}

LagrangianExpr LagrangianExpr::weighted_sum(std::span<const LagrangianExpr> terms,
                                            std::span<const double> weights) {
    if (terms.empty() || terms.size() != weights.size()) {
        throw DimensionError("weighted_sum: need one weight per term");
    }
    const int n = terms[0].n_components();
    const int r = terms[0].n_params();
    NodePtr acc;
    std::string src;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].n_components() != n || terms[i].n_params() != r) {
            throw DimensionError("weighted_sum: terms have different signatures");
        }
        NodePtr term = make_node(Op::Mul, {make_number(weights[i]), terms[i].root_});
        acc = acc ? make_node(Op::Add, {acc, term}) : term;
        src += fmt::format("{}{:.17g}*({})", i == 0 ? "" : " + ", weights[i], terms[i].source());
    }
    return LagrangianExpr(acc, n, r, src);
}

LagrangianExpr LagrangianExpr::parameter_combination(const LagrangianExpr& base,
                                                     std::span<const LagrangianExpr> terms,
                                                     double sign, int first_param) {
    const int n = base.n_components();
    const int r = std::max(base.n_params(), first_param + static_cast<int>(terms.size()));
    NodePtr acc = base.root_;
    std::string src = base.source();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        if (terms[j].n_components() != n) {
            throw DimensionError("parameter_combination: component counts differ");
        }
        if (terms[j].n_params() > first_param) {
            throw DimensionError("parameter_combination: term uses the multiplier slots");
        }
        const int slot = 1 + 2 * n + first_param + static_cast<int>(j);
        NodePtr scaled = make_node(Op::Mul, {make_slot(slot), terms[j].root_});
        acc = make_node(sign < 0.0 ? Op::Sub : Op::Add, {acc, scaled});
        src += fmt::format(" {} p{}*({})", sign < 0.0 ? '-' : '+',
                           first_param + static_cast<int>(j) + 1, terms[j].source());
    }
    return LagrangianExpr(acc, n, r, src);
}

}  // namespace fracvar
