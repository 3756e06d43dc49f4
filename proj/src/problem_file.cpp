#include "fracvar/problem_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "fracvar/error.hpp"

namespace fracvar {
namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, Entry> entries;
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ParseError(line > 0 ? fmt::format("line {}: {}", line, msg) : msg, line, 0);
}

/// Splits on commas outside parentheses.
std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            --depth;
        }
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double number(const std::string& text, int line) {
    try {
        const auto e = LagrangianExpr::parse(text, 1, 0);
        if (e.depends_on(e.slot_x()) || e.depends_on(e.slot_y(0)) || e.depends_on(e.slot_v(0))) {
            fail(line, fmt::format("'{}' must be a constant", text));
        }
        const double args[3] = {0.0, 0.0, 0.0};
        const double v = e.eval(args);
        if (!std::isfinite(v)) {
            fail(line, fmt::format("'{}' is not finite", text));
        }
        return v;
    } catch (const ParseError& e) {
        if (e.line() > 0) {
            throw;
        }
        fail(line, fmt::format("bad number '{}': {}", text, e.what()));
    } catch (const std::exception& e) {
        fail(line, fmt::format("bad number '{}': {}", text, e.what()));
    }
}

int integer(const std::string& text, int line) {
    const double v = number(text, line);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        fail(line, fmt::format("'{}' must be an integer", text));
    }
    return static_cast<int>(v);
}

std::vector<Section> read_sections(std::string_view text) {
    std::vector<Section> sections;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw.substr(0, raw.find('#'));
        s = trim(s);
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                fail(line, "unterminated section header");
            }
            std::string name = trim(std::string_view(s).substr(1, s.size() - 2));
            for (const auto& prev : sections) {
                if (prev.name == name) {
                    fail(line, fmt::format("section [{}] repeated (first at line {})", name, prev.line));
                }
            }
            sections.push_back({name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            fail(line, "expected 'key = value'");
        }
        if (sections.empty()) {
            fail(line, "key outside of any section");
        }
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string value = trim(std::string_view(s).substr(eq + 1));
        if (key.empty() || value.empty()) {
            fail(line, "empty key or value");
        }
        auto& entries = sections.back().entries;
        if (entries.count(key) != 0) {
            fail(line, fmt::format("duplicate key '{}'", key));
        }
        entries[key] = {value, line, false};
    }
    return sections;
}

class Reader {
public:
    explicit Reader(std::vector<Section> sections) : sections_(std::move(sections)) {}

    Section* find(const std::string& name) {
        for (auto& s : sections_) {
            if (s.name == name) {
                return &s;
            }
        }
        return nullptr;
    }

    Section& require(const std::string& name) {
        Section* s = find(name);
        if (s == nullptr) {
            fail(0, fmt::format("missing section [{}]", name));
        }
        return *s;
    }

    /// Sections name.1, name.2, ... in order; gaps and stray suffixes are errors.
    std::vector<Section*> numbered(const std::string& prefix) {
        std::map<int, Section*> found;
        for (auto& s : sections_) {
            if (s.name.rfind(prefix + ".", 0) != 0) {
                continue;
            }
            const std::string suffix = s.name.substr(prefix.size() + 1);
            if (suffix.empty() || !std::all_of(suffix.begin(), suffix.end(), [](char c) { return c >= '0' && c <= '9'; })) {
                fail(s.line, fmt::format("bad section name [{}]", s.name));
            }
            found[std::stoi(suffix)] = &s;
        }
        std::vector<Section*> out;
        int expect = 1;
        for (auto& [k, s] : found) {
            if (k != expect) {
                fail(s->line, fmt::format("[{}.{}] found but [{}.{}] is missing", prefix, k, prefix, expect));
            }
            out.push_back(s);
            ++expect;
        }
        return out;
    }

    void check_all_known() {
        for (auto& s : sections_) {
            const bool known = s.name == "interval" || s.name == "orders" || s.name == "boundary" ||
                               s.name == "run" || s.name.rfind("objective.", 0) == 0 ||
                               s.name.rfind("constraint.", 0) == 0;
            if (!known) {
                fail(s.line, fmt::format("unknown section [{}]", s.name));
            }
            for (auto& [key, e] : s.entries) {
                if (!e.used) {
                    fail(e.line, fmt::format("unknown key '{}' in [{}]", key, s.name));
                }
            }
        }
    }

private:
    std::vector<Section> sections_;
};

Entry* get(Section& s, const std::string& key) {
    auto it = s.entries.find(key);
    if (it == s.entries.end()) {
        return nullptr;
    }
    it->second.used = true;
    return &it->second;
}

Entry& need(Section& s, const std::string& key) {
    Entry* e = get(s, key);
    if (e == nullptr) {
        fail(s.line, fmt::format("[{}] needs '{}'", s.name, key));
    }
    return *e;
}

/// Scalar lists broadcast to n; other lengths must equal n.
template <class T>
std::vector<T> broadcast(const std::vector<T>& v, int n, int line, const std::string& what) {
    if (static_cast<int>(v.size()) == n) {
        return v;
    }
    if (v.size() == 1) {
        return std::vector<T>(static_cast<std::size_t>(n), v.front());
    }
    fail(line, fmt::format("{} has {} entries for {} components", what, v.size(), n));
}

EndCondition end_condition(const std::string& text, bool right, int line) {
    if (text == "free") {
        return EndCondition::free();
    }
    if (text.rfind("fixed:", 0) == 0) {
        return EndCondition::fixed(number(text.substr(6), line));
    }
    if (right && text.rfind("ub:", 0) == 0) {
        return EndCondition::upper_bounded(number(text.substr(3), line));
    }
    fail(line, fmt::format("bad endpoint '{}' (expected fixed:<v>, free{})", text, right ? " or ub:<v>" : ""));
}

LagrangianExpr expression(const Entry& e, int n_components) {
    try {
        return LagrangianExpr::parse(e.value, n_components, 0);
    } catch (const ParseError& err) {
        fail(e.line, err.what());
    }
}

ConstraintKind constraint_kind(const Entry& e) {
    for (auto k : {ConstraintKind::IsoEq, ConstraintKind::IsoIneq, ConstraintKind::PointwiseEq,
                   ConstraintKind::PointwiseIneq}) {
        if (e.value == to_string(k)) {
            return k;
        }
    }
    fail(e.line, fmt::format("unknown constraint kind '{}'", e.value));
}

}  // namespace

std::string ProblemFile::output_path() const {
    if (!run.out.empty()) {
        return run.out;
    }
    return std::filesystem::path(path).stem().string() + ".csv";
}

ProblemFile parse_problem_text(std::string_view text, std::string path) {
    Reader rd(read_sections(text));
    ProblemFile pf;
    pf.path = std::move(path);
    ProblemSpec& p = pf.problem;

    Section& interval = rd.require("interval");
    p.a = number(need(interval, "a").value, need(interval, "a").line);
    p.b = number(need(interval, "b").value, need(interval, "b").line);
    if (!(p.b > p.a)) {
        fail(interval.line, fmt::format("interval needs b > a, got a={} b={}", p.a, p.b));
    }

    Section& orders = rd.require("orders");
    Section& boundary = rd.require("boundary");
    std::vector<double> alpha, beta, gamma;
    for (auto [key, dst] : {std::pair{"alpha", &alpha}, std::pair{"beta", &beta}, std::pair{"gamma", &gamma}}) {
        const Entry& e = need(orders, key);
        for (const auto& item : split_list(e.value)) {
            dst->push_back(number(item, e.line));
        }
    }
    const Entry& left = need(boundary, "left");
    const Entry& right = need(boundary, "right");
    const auto left_items = split_list(left.value);
    const auto right_items = split_list(right.value);
    const int n_comp = static_cast<int>(std::max({alpha.size(), beta.size(), gamma.size(), left_items.size(),
                                                  right_items.size()}));

    alpha = broadcast(alpha, n_comp, need(orders, "alpha").line, "alpha");
    beta = broadcast(beta, n_comp, need(orders, "beta").line, "beta");
    gamma = broadcast(gamma, n_comp, need(orders, "gamma").line, "gamma");
    std::vector<ComponentOrders> per;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] > 0.0 && alpha[i] < 1.0)) {
            fail(need(orders, "alpha").line, fmt::format("alpha must lie in (0, 1), got {}", alpha[i]));
        }
        if (!(beta[i] > 0.0 && beta[i] < 1.0)) {
            fail(need(orders, "beta").line, fmt::format("beta must lie in (0, 1), got {}", beta[i]));
        }
        if (!(gamma[i] >= 0.0 && gamma[i] <= 1.0)) {
            fail(need(orders, "gamma").line, fmt::format("gamma must lie in [0, 1], got {}", gamma[i]));
        }
        per.push_back({alpha[i], beta[i], gamma[i]});
    }
    p.orders = FracOrders(std::move(per));

    const auto lefts = broadcast(left_items, n_comp, left.line, "left");
    const auto rights = broadcast(right_items, n_comp, right.line, "right");
    std::vector<ComponentBoundary> ends;
    for (int i = 0; i < n_comp; ++i) {
        ComponentBoundary cb{end_condition(lefts[static_cast<std::size_t>(i)], false, left.line),
                             end_condition(rights[static_cast<std::size_t>(i)], true, right.line)};
        if (cb.left.kind == EndKind::Free && cb.right.kind == EndKind::Free) {
            fail(left.line, fmt::format("component {} has no fixed or bounded endpoint", i + 1));
        }
        ends.push_back(cb);
    }
    p.boundary = BoundarySpec(std::move(ends));

    const auto objectives = rd.numbered("objective");
    if (objectives.empty()) {
        fail(0, "missing section [objective.1]");
    }
    for (Section* s : objectives) {
        p.objectives.push_back(expression(need(*s, "lagrangian"), n_comp));
    }
    for (Section* s : rd.numbered("constraint")) {
        const ConstraintKind kind = constraint_kind(need(*s, "kind"));
        ConstraintSpec c{kind, expression(need(*s, "integrand"), n_comp), 0.0};
        if (Entry* t = get(*s, "target")) {
            c.target = number(t->value, t->line);
        } else if (is_isoperimetric(c.kind)) {
            fail(s->line, fmt::format("[{}] needs 'target'", s->name));
        }
        p.constraints.push_back(std::move(c));
    }

    RunSettings& run = pf.run;
    run.window_lo = p.a;
    run.window_hi = p.b;
    if (Section* s = rd.find("run")) {
        if (Entry* e = get(*s, "n")) {
            run.n = integer(e->value, e->line);
            if (run.n < kMinGridCells) {
                fail(e->line, fmt::format("n must be at least {}", kMinGridCells));
            }
        }
        if (Entry* e = get(*s, "weights")) {
            run.weights = integer(e->value, e->line);
            if (run.weights < 1) {
                fail(e->line, "weights must be at least 1");
            }
        }
        if (Entry* e = get(*s, "max_iters")) {
            run.solve.max_iters = integer(e->value, e->line);
        }
        for (auto [key, dst] : {std::pair{"grad_tol", &run.solve.grad_tol},
                                std::pair{"constraint_tol", &run.solve.constraint_tol},
                                std::pair{"residual_tol", &run.residual_tol}}) {
            if (Entry* e = get(*s, key)) {
                *dst = number(e->value, e->line);
                if (!(*dst > 0.0)) {
                    fail(e->line, fmt::format("{} must be positive", key));
                }
            }
        }
        if (Entry* e = get(*s, "window")) {
            const auto items = split_list(e->value);
            if (items.size() != 2) {
                fail(e->line, "window needs two values lo, hi");
            }
            run.window_lo = number(items[0], e->line);
            run.window_hi = number(items[1], e->line);
            if (!(run.window_lo < run.window_hi)) {
                fail(e->line, "window needs lo < hi");
            }
        }
        if (Entry* e = get(*s, "out")) {
            run.out = e->value;
        }
        try {
            run.solve.validate();
        } catch (const std::exception& err) {
            fail(s->line, err.what());
        }
    }
    rd.check_all_known();

    try {
        p.validate();
    } catch (const std::exception& err) {
        fail(0, fmt::format("invalid problem: {}", err.what()));
    }
    return pf;
}

ProblemFile parse_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(fmt::format("cannot read problem file '{}'", path), 0, 0);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem_text(ss.str(), path);
}

}  // namespace fracvar
