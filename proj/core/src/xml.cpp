#include "archint/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <set>

#include "archint/error.hpp"

namespace archint::xml {

Node::Node(NodeKind kind, std::string name_or_text) : kind_(kind) {
    if (kind == NodeKind::Element)
        name_ = std::move(name_or_text);
    else
        text_ = std::move(name_or_text);
}

std::string_view Node::local_name() const noexcept {
    std::string_view n = name_;
    auto colon = n.find(':');
    return colon == std::string_view::npos ? n : n.substr(colon + 1);
}

const std::string* Node::attribute(std::string_view name) const {
    for (const auto& a : attributes_)
        if (a.name == name) return &a.value;
    return nullptr;
}

void Node::set_attribute(std::string_view name, std::string value) {
    for (auto& a : attributes_) {
        if (a.name == name) {
            a.value = std::move(value);
            return;
        }
    }
    attributes_.push_back({std::string(name), std::move(value)});
}

bool Node::remove_attribute(std::string_view name) {
    auto it = std::find_if(attributes_.begin(), attributes_.end(), [&](const Attribute& a) { return a.name == name; });
    if (it == attributes_.end()) return false;
    attributes_.erase(it);
    return true;
}

Node& Node::append(std::unique_ptr<Node> child) {
    child->parent_ = this;
    children_.push_back(std::move(child));
    return *children_.back();
}

Node& Node::append_element(std::string name) {
    return append(std::make_unique<Node>(NodeKind::Element, std::move(name)));
}

Node& Node::append_text(std::string text) {
    return append(std::make_unique<Node>(NodeKind::Text, std::move(text)));
}

Node& Node::insert(std::size_t index, std::unique_ptr<Node> child) {
    child->parent_ = this;
    auto it = children_.insert(children_.begin() + static_cast<std::ptrdiff_t>(index), std::move(child));
    return **it;
}

std::unique_ptr<Node> Node::detach(std::size_t index) {
    auto child = std::move(children_[index]);
    children_.erase(children_.begin() + static_cast<std::ptrdiff_t>(index));
    child->parent_ = nullptr;
    return child;
}

std::size_t Node::index_in_parent() const {
    if (!parent_) return 0;
    const auto& siblings = parent_->children_;
    for (std::size_t i = 0; i < siblings.size(); ++i)
        if (siblings[i].get() == this) return i;
    return 0;
}

std::string Node::string_value() const {
    if (kind_ == NodeKind::Text) return text_;
    if (kind_ == NodeKind::Comment) return {};
    std::string out;
    for (const auto& c : children_) {
        if (c->kind_ == NodeKind::Text)
            out += c->text_;
        else if (c->kind_ == NodeKind::Element)
            out += c->string_value();
    }
    return out;
}

const std::string* Node::inherited_lang(const Node* stop) const {
    for (const Node* n = this; n && n != stop; n = n->parent_) {
        if (n->kind_ != NodeKind::Element) continue;
        if (const auto* lang = n->attribute("xml:lang")) return lang;
    }
    return nullptr;
}

std::unique_ptr<Node> Node::clone() const {
    auto copy = std::make_unique<Node>(kind_);
    copy->name_ = name_;
    copy->text_ = text_;
    copy->attributes_ = attributes_;
    for (const auto& c : children_) copy->append(c->clone());
    return copy;
}

Document::Document() : doc_(std::make_unique<Node>(NodeKind::Document)) {}

Node* Document::root() const {
    for (const auto& c : doc_->children())
        if (c->is_element()) return c.get();
    return nullptr;
}

namespace {

struct ParseState {
    Document doc;
    Node* current = nullptr;
    std::string pending_text;

    void flush_text() {
        if (pending_text.empty()) return;
        // Whitespace outside the root element carries no information.
        if (current != &doc.node()) current->append_text(std::move(pending_text));
        pending_text.clear();
    }
};

void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
    auto* st = static_cast<ParseState*>(user);
    st->flush_text();
    Node& el = st->current->append_element(name);
    for (int i = 0; atts[i]; i += 2) el.set_attribute(atts[i], atts[i + 1]);
    st->current = &el;
}

void on_end(void* user, const XML_Char*) {
    auto* st = static_cast<ParseState*>(user);
    st->flush_text();
    st->current = st->current->parent();
}

void on_text(void* user, const XML_Char* s, int len) {
    static_cast<ParseState*>(user)->pending_text.append(s, static_cast<std::size_t>(len));
}

void on_comment(void* user, const XML_Char* data) {
    auto* st = static_cast<ParseState*>(user);
    st->flush_text();
    st->current->append(std::make_unique<Node>(NodeKind::Comment, data));
}

}  // namespace

Document parse(std::string_view bytes) {
    ParseState st;
    st.current = &st.doc.node();
    XML_Parser p = XML_ParserCreate("UTF-8");
    XML_SetUserData(p, &st);
    XML_SetElementHandler(p, on_start, on_end);
    XML_SetCharacterDataHandler(p, on_text);
    XML_SetCommentHandler(p, on_comment);
    if (XML_Parse(p, bytes.data(), static_cast<int>(bytes.size()), XML_TRUE) == XML_STATUS_ERROR) {
        auto line = XML_GetCurrentLineNumber(p);
        auto col = XML_GetCurrentColumnNumber(p);
        std::string msg = XML_ErrorString(XML_GetErrorCode(p));
        XML_ParserFree(p);
        throw Error("xml-parse-error",
                    "XML parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg,
                    {{"line", line}, {"column", col}});
    }
    XML_ParserFree(p);
    if (!st.doc.root()) throw Error("xml-parse-error", "document has no root element");
    return std::move(st.doc);
}

std::string escape_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\r': out += "&#13;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string escape_attribute(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            case '\t': out += "&#9;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

namespace {

void write_open_tag(std::string& out, const Node& n, const std::vector<Attribute>& extra) {
    out += '<';
    out += n.name();
    for (const auto& a : extra) out += ' ' + a.name + "=\"" + escape_attribute(a.value) + '"';
    for (const auto& a : n.attributes()) out += ' ' + a.name + "=\"" + escape_attribute(a.value) + '"';
}

bool only_elements(const Node& n) {
    return std::all_of(n.children().begin(), n.children().end(),
                       [](const auto& c) { return c->kind() != NodeKind::Text; });
}

void write_node(std::string& out, const Node& n, const WriteOptions& opt, int depth,
                const std::vector<Attribute>& extra = {}) {
    switch (n.kind()) {
        case NodeKind::Text:
            out += escape_text(n.text());
            return;
        case NodeKind::Comment:
            out += "<!--" + n.text() + "-->";
            return;
        case NodeKind::Document:
            for (const auto& c : n.children()) write_node(out, *c, opt, depth);
            return;
        case NodeKind::Element:
            break;
    }
    write_open_tag(out, n, extra);
    if (n.children().empty()) {
        out += "/>";
        return;
    }
    out += '>';
    bool pretty = opt.indent > 0 && only_elements(n);
    for (const auto& c : n.children()) {
        if (pretty) {
            out += '\n';
            out.append(static_cast<std::size_t>((depth + 1) * opt.indent), ' ');
        }
        write_node(out, *c, pretty ? opt : WriteOptions{opt.declaration, 0}, depth + 1);
    }
    if (pretty) {
        out += '\n';
        out.append(static_cast<std::size_t>(depth * opt.indent), ' ');
    }
    out += "</" + n.name() + '>';
}

}  // namespace

std::string serialize(const Document& doc, const WriteOptions& options) {
    std::string out;
    if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& c : doc.node().children()) {
        write_node(out, *c, options, 0);
        if (options.indent > 0 || c->kind() == NodeKind::Comment) out += '\n';
    }
    if (options.indent == 0 && (out.empty() || out.back() != '\n')) out += '\n';
    return out;
}

std::string serialize_standalone(const Node& element, const WriteOptions& options) {
    std::vector<Attribute> inherited;
    std::set<std::string> seen;
    for (const auto& a : element.attributes())
        if (a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0) seen.insert(a.name);
    for (const Node* p = element.parent(); p; p = p->parent()) {
        if (!p->is_element()) continue;
        for (const auto& a : p->attributes()) {
            bool is_ns = a.name == "xmlns" || a.name.rfind("xmlns:", 0) == 0;
            if (is_ns && seen.insert(a.name).second) inherited.push_back(a);
        }
    }
    std::string out;
    if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    write_node(out, element, options, 0, inherited);
    out += '\n';
    return out;
}

}  // namespace archint::xml
