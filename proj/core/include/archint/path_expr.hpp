#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "archint/xml.hpp"

namespace archint {

/// Compiled path over the XML DOM.
///
///   path      := '/'? step (('/' | '//') step)*  |  '//' step ...
///   step      := ('.' | '..' | name | '*' | '@' name | '@*' | 'text()') predicate*
///   predicate := '[' integer ']' | '[' '@' name ('=' literal)? ']' | '[' relpath ('=' literal)? ']'
///
/// Unprefixed name tests match on local name, so `c` selects both `c` and
/// `ead:c`; prefixed tests match the qualified name exactly. Index
/// predicates are 1-based and count within each context node.
class PathExpr {
public:
    /// Throws Error{"parse-error"} with the offending expression.
    static PathExpr parse(std::string_view source);

    PathExpr();
    PathExpr(const PathExpr&);
    PathExpr(PathExpr&&) noexcept;
    PathExpr& operator=(const PathExpr&);
    PathExpr& operator=(PathExpr&&) noexcept;
    ~PathExpr();

    const std::string& source() const noexcept { return source_; }
    bool absolute() const noexcept;

    /// Matched nodes in document order. Attribute matches are returned as
    /// values only; use `values` for a uniform string view.
    std::vector<const xml::Node*> select(const xml::Node& context) const;
    /// String value of every match (attributes, text nodes, elements).
    std::vector<std::string> values(const xml::Node& context) const;
    struct Match {
        /// The matched element; for attributes and text, the owning element.
        const xml::Node* element;
        std::string value;
    };
    std::vector<Match> matches(const xml::Node& context) const;
    bool matches_any(const xml::Node& context) const { return !values(context).empty(); }

    /// Whether the last step selects element nodes (not attributes or text).
    bool selects_elements() const noexcept;

    struct Impl;

private:
    std::string source_;
    std::unique_ptr<Impl> impl_;
};

/// Literal text with `{expr}` interpolations; `{{` and `}}` escape braces.
class Template {
public:
    static Template parse(std::string_view source);

    const std::string& source() const noexcept { return source_; }
    /// Each expression contributes the space-joined values of its matches.
    std::string render(const xml::Node& context) const;

private:
    std::string source_;
    std::vector<std::variant<std::string, PathExpr>> parts_;
};

}  // namespace archint
