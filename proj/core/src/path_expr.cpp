#include "archint/path_expr.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "archint/error.hpp"

namespace archint {

namespace {

enum class Axis { child, descendant, self, parent, attribute };
enum class TestKind { name, any, text };

struct Predicate;

struct Step {
    Axis axis = Axis::child;
    TestKind test = TestKind::name;
    std::string name;
    std::vector<Predicate> predicates;
};

struct RelPath {
    std::vector<Step> steps;
};

struct Predicate {
    std::optional<std::size_t> index;
    RelPath path;
    std::optional<std::string> literal;
};

// A match is an element/text node or one attribute of an element.
struct Item {
    const xml::Node* node;
    const xml::Attribute* attr = nullptr;
    bool operator==(const Item&) const = default;
};

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    RelPath parse_path(bool& absolute) {
        RelPath path;
        absolute = false;
        Axis next_axis = Axis::child;
        if (peek("//")) {
            pos_ += 2;
            absolute = true;
            next_axis = Axis::descendant;
        } else if (peek("/")) {
            ++pos_;
            absolute = true;
        }
        path.steps.push_back(parse_step(next_axis));
        while (!at_end() && peek("/")) {
            if (peek("//")) {
                pos_ += 2;
                path.steps.push_back(parse_step(Axis::descendant));
            } else {
                ++pos_;
                path.steps.push_back(parse_step(Axis::child));
            }
        }
        return path;
    }

    bool at_end() const { return pos_ >= src_.size(); }
    char current() const { return at_end() ? '\0' : src_[pos_]; }
    std::size_t position() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error("parse-error", "bad path expression '" + std::string(src_) + "': " + what + " at offset " +
                                       std::to_string(pos_),
                    {{"expression", std::string(src_)}, {"offset", pos_}});
    }

private:
    bool peek(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    std::string parse_name() {
        if (!is_name_start(current())) fail("expected a name");
        std::size_t start = pos_;
        while (!at_end() && is_name_char(current())) ++pos_;
        if (current() == ':' && pos_ + 1 < src_.size() && is_name_start(src_[pos_ + 1])) {
            ++pos_;
            while (!at_end() && is_name_char(current())) ++pos_;
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    Step parse_step(Axis axis) {
        Step step;
        step.axis = axis;
        if (peek("..")) {
            if (axis == Axis::descendant) fail("'..' cannot follow '//'");
            pos_ += 2;
            step.axis = Axis::parent;
            step.test = TestKind::any;
        } else if (peek(".")) {
            if (axis == Axis::descendant) fail("'.' cannot follow '//'");
            ++pos_;
            step.axis = Axis::self;
            step.test = TestKind::any;
        } else if (peek("@")) {
            ++pos_;
            if (axis == Axis::descendant) fail("'//@' is not supported");
            step.axis = Axis::attribute;
            if (peek("*")) {
                ++pos_;
                step.test = TestKind::any;
            } else {
                step.name = parse_name();
            }
        } else if (peek("*")) {
            ++pos_;
            step.test = TestKind::any;
        } else if (peek("text()")) {
            pos_ += 6;
            step.test = TestKind::text;
        } else {
            step.name = parse_name();
        }
        while (peek("[")) {
            ++pos_;
            step.predicates.push_back(parse_predicate());
        }
        return step;
    }

    Predicate parse_predicate() {
        Predicate p;
        skip_space();
        if (std::isdigit(static_cast<unsigned char>(current()))) {
            std::size_t value = 0;
            while (std::isdigit(static_cast<unsigned char>(current()))) value = value * 10 + (src_[pos_++] - '0');
            if (value == 0) fail("index predicates start at 1");
            p.index = value;
        } else {
            Step first = parse_step(Axis::child);
            p.path.steps.push_back(std::move(first));
            while (peek("/")) {
                if (peek("//")) {
                    pos_ += 2;
                    p.path.steps.push_back(parse_step(Axis::descendant));
                } else {
                    ++pos_;
                    p.path.steps.push_back(parse_step(Axis::child));
                }
            }
            skip_space();
            if (peek("=")) {
                ++pos_;
                skip_space();
                p.literal = parse_literal();
            }
        }
        skip_space();
        if (!peek("]")) fail("expected ']'");
        ++pos_;
        return p;
    }

    std::string parse_literal() {
        char quote = current();
        if (quote != '\'' && quote != '"') fail("expected a quoted literal");
        auto end = src_.find(quote, pos_ + 1);
        if (end == std::string_view::npos) fail("unterminated literal");
        std::string value(src_.substr(pos_ + 1, end - pos_ - 1));
        pos_ = end + 1;
        return value;
    }

    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(current()))) ++pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

std::string_view local_of(std::string_view qname) {
    auto colon = qname.find(':');
    return colon == std::string_view::npos ? qname : qname.substr(colon + 1);
}

bool is_namespace_declaration(std::string_view name) { return name == "xmlns" || name.substr(0, 6) == "xmlns:"; }

bool name_matches(const std::string& test, const std::string& name, std::string_view local) {
    if (test.find(':') != std::string::npos) return test == name;
    return test == local;
}

bool element_passes(const Step& step, const xml::Node& n) {
    switch (step.test) {
        case TestKind::any: return n.is_element();
        case TestKind::text: return n.kind() == xml::NodeKind::Text;
        case TestKind::name: return n.is_element() && name_matches(step.name, n.name(), n.local_name());
    }
    return false;
}

void descendants_or_self(const xml::Node* n, std::vector<const xml::Node*>& out) {
    out.push_back(n);
    for (const auto& c : n->children())
        if (c->is_element()) descendants_or_self(c.get(), out);
}

std::vector<std::size_t> order_key(const Item& item) {
    std::vector<std::size_t> key;
    for (const xml::Node* n = item.node; n && n->parent(); n = n->parent()) key.push_back(n->index_in_parent() + 1);
    std::reverse(key.begin(), key.end());
    // Attributes sort after their element and before its children.
    if (item.attr) {
        key.push_back(0);
        key.push_back(static_cast<std::size_t>(item.attr - item.node->attributes().data()));
    }
    return key;
}

std::vector<Item> in_document_order(std::vector<Item> items) {
    std::vector<std::pair<std::vector<std::size_t>, Item>> keyed;
    keyed.reserve(items.size());
    for (const auto& i : items) keyed.emplace_back(order_key(i), i);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.second == b.second; }),
                keyed.end());
    std::vector<Item> out;
    out.reserve(keyed.size());
    for (auto& [k, i] : keyed) out.push_back(i);
    return out;
}

std::string item_value(const Item& item) {
    if (item.attr) return item.attr->value;
    if (item.node->kind() == xml::NodeKind::Text) return item.node->text();
    return item.node->string_value();
}

std::vector<Item> eval(const RelPath& path, std::vector<Item> context, bool from_virtual_root);

bool predicate_holds(const Predicate& p, const Item& item) {
    std::vector<Item> matched = eval(p.path, {item}, false);
    if (!p.literal) return !matched.empty();
    return std::any_of(matched.begin(), matched.end(), [&](const Item& m) { return item_value(m) == *p.literal; });
}

std::vector<Item> apply_predicates(const Step& step, std::vector<Item> candidates) {
    for (const auto& p : step.predicates) {
        std::vector<Item> kept;
        if (p.index) {
            if (*p.index <= candidates.size()) kept.push_back(candidates[*p.index - 1]);
        } else {
            for (const auto& c : candidates)
                if (predicate_holds(p, c)) kept.push_back(c);
        }
        candidates = std::move(kept);
    }
    return candidates;
}

// Candidates of `step` for one context node. A null context stands for a
// virtual document node above a detached root element.
std::vector<Item> step_candidates(const Step& step, const xml::Node* ctx, const xml::Node* detached_root) {
    std::vector<Item> out;
    auto add_children = [&](const xml::Node* n) {
        if (!n) {
            if (element_passes(step, *detached_root)) out.push_back({detached_root});
            return;
        }
        for (const auto& c : n->children())
            if (element_passes(step, *c)) out.push_back({c.get()});
    };
    switch (step.axis) {
        case Axis::child: add_children(ctx); break;
        case Axis::self:
            if (ctx) out.push_back({ctx});
            break;
        case Axis::parent:
            if (ctx && ctx->parent() && ctx->parent()->kind() != xml::NodeKind::Document) out.push_back({ctx->parent()});
            break;
        case Axis::attribute:
            if (ctx && ctx->is_element())
                for (const auto& a : ctx->attributes()) {
                    if (is_namespace_declaration(a.name)) continue;
                    if (step.test == TestKind::any || name_matches(step.name, a.name, local_of(a.name)))
                        out.push_back({ctx, &a});
                }
            break;
        case Axis::descendant: break;  // expanded by the caller
    }
    return out;
}


std::vector<Item> eval(const RelPath& path, std::vector<Item> context, bool from_virtual_root) {
    const xml::Node* detached_root = nullptr;
    if (from_virtual_root) {
        // Start above the topmost ancestor: the document node when the tree
        // has one, otherwise a virtual parent of the detached root element.
        const xml::Node* top = context.front().node;
        while (top->parent()) top = top->parent();
        if (top->kind() == xml::NodeKind::Document) {
            context = {Item{top}};
        } else {
            detached_root = top;
            context = {Item{nullptr}};
        }
    }
    for (const Step& step : path.steps) {
        std::vector<Item> next;
        for (const Item& ctx : context) {
            if (ctx.attr) continue;  // attributes have no children
            if (step.axis == Axis::descendant) {
                std::vector<const xml::Node*> expanded;
                if (ctx.node) {
                    descendants_or_self(ctx.node, expanded);
                } else {
                    expanded.push_back(nullptr);
                    descendants_or_self(detached_root, expanded);
                }
                Step as_child = step;
                as_child.axis = Axis::child;
                for (const xml::Node* n : expanded) {
                    auto c = apply_predicates(step, step_candidates(as_child, n, detached_root));
                    next.insert(next.end(), c.begin(), c.end());
                }
            } else {
                auto c = apply_predicates(step, step_candidates(step, ctx.node, detached_root));
                next.insert(next.end(), c.begin(), c.end());
            }
        }
        context = next.size() > 1 ? in_document_order(std::move(next)) : std::move(next);
        if (context.empty()) break;
    }
    return context;
}

}  // namespace

struct PathExpr::Impl {
    RelPath path;
    bool absolute = false;
};

PathExpr PathExpr::parse(std::string_view source) {
    std::string trimmed(source);
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front()))) trimmed.erase(0, 1);
    Parser parser(trimmed);
    if (trimmed.empty()) parser.fail("empty expression");
    PathExpr expr;
    expr.source_ = trimmed;
    expr.impl_->path = parser.parse_path(expr.impl_->absolute);
    if (!parser.at_end()) parser.fail(std::string("unexpected '") + parser.current() + "'");
    return expr;
}

PathExpr::PathExpr() : impl_(std::make_unique<Impl>()) {}
PathExpr::PathExpr(const PathExpr& other) : source_(other.source_), impl_(std::make_unique<Impl>(*other.impl_)) {}
PathExpr::PathExpr(PathExpr&&) noexcept = default;
PathExpr& PathExpr::operator=(const PathExpr& other) {
    if (this != &other) {
        source_ = other.source_;
        impl_ = std::make_unique<Impl>(*other.impl_);
    }
    return *this;
}
PathExpr& PathExpr::operator=(PathExpr&&) noexcept = default;
PathExpr::~PathExpr() = default;

bool PathExpr::absolute() const noexcept { return impl_->absolute; }

bool PathExpr::selects_elements() const noexcept {
    if (impl_->path.steps.empty()) return false;
    const Step& last = impl_->path.steps.back();
    return last.axis != Axis::attribute && last.test != TestKind::text;
}

std::vector<const xml::Node*> PathExpr::select(const xml::Node& context) const {
    std::vector<const xml::Node*> out;
    for (const Item& i : eval(impl_->path, {Item{&context}}, impl_->absolute))
        if (!i.attr) out.push_back(i.node);
    return out;
}

std::vector<std::string> PathExpr::values(const xml::Node& context) const {
    std::vector<std::string> out;
    for (const Item& i : eval(impl_->path, {Item{&context}}, impl_->absolute)) out.push_back(item_value(i));
    return out;
}

std::vector<PathExpr::Match> PathExpr::matches(const xml::Node& context) const {
    std::vector<Match> out;
    for (const Item& i : eval(impl_->path, {Item{&context}}, impl_->absolute)) {
        const xml::Node* owner = i.node;
        if (!i.attr && owner->kind() == xml::NodeKind::Text) owner = owner->parent();
        out.push_back({owner, item_value(i)});
    }
    return out;
}

Template Template::parse(std::string_view source) {
    Template t;
    t.source_ = std::string(source);
    std::string literal;
    auto fail = [&](const std::string& what) {
        throw Error("parse-error", what + " in template '" + std::string(source) + "'",
                    {{"expression", std::string(source)}});
    };
    for (std::size_t i = 0; i < source.size(); ++i) {
        char c = source[i];
        if (c == '{' && i + 1 < source.size() && source[i + 1] == '{') {
            literal += '{';
            ++i;
        } else if (c == '}' && i + 1 < source.size() && source[i + 1] == '}') {
            literal += '}';
            ++i;
        } else if (c == '{') {
            auto end = source.find('}', i + 1);
            if (end == std::string_view::npos) fail("unterminated '{'");
            if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
            literal.clear();
            t.parts_.emplace_back(PathExpr::parse(source.substr(i + 1, end - i - 1)));
            i = end;
        } else if (c == '}') {
            fail("unbalanced '}'");
        } else {
            literal += c;
        }
    }
    if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
    return t;
}

std::string Template::render(const xml::Node& context) const {
    std::string out;
    for (const auto& part : parts_) {
        if (const auto* lit = std::get_if<std::string>(&part)) {
            out += *lit;
            continue;
        }
        auto values = std::get<PathExpr>(part).values(context);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out += ' ';
            out += values[i];
        }
    }
    return out;
}

}  // namespace archint
