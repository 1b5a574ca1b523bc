#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace archint::xml {

enum class NodeKind { Document, Element, Text, Comment };

struct Attribute {
    std::string name;
    std::string value;
};

/// Mutable DOM node. Children are owned through unique_ptr so node addresses
/// stay stable while path expressions hold raw pointers into the tree.
/// Element names are kept as written (`ead:c`), with namespace declarations
/// stored as ordinary `xmlns*` attributes.
class Node {
public:
    explicit Node(NodeKind kind, std::string name_or_text = {});

    NodeKind kind() const noexcept { return kind_; }
    bool is_element() const noexcept { return kind_ == NodeKind::Element; }

    const std::string& name() const noexcept { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }
    /// Name without its prefix.
    std::string_view local_name() const noexcept;

    const std::string& text() const noexcept { return text_; }
    void set_text(std::string t) { text_ = std::move(t); }

    const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
    const std::string* attribute(std::string_view name) const;
    void set_attribute(std::string_view name, std::string value);
    bool remove_attribute(std::string_view name);

    Node* parent() const noexcept { return parent_; }
    const std::vector<std::unique_ptr<Node>>& children() const noexcept { return children_; }

    Node& append(std::unique_ptr<Node> child);
    Node& append_element(std::string name);
    Node& append_text(std::string text);
    /// Inserts `child` at `index` and returns it.
    Node& insert(std::size_t index, std::unique_ptr<Node> child);
    /// Detaches and returns the child at `index`.
    std::unique_ptr<Node> detach(std::size_t index);
    std::size_t index_in_parent() const;

    /// Concatenated descendant text in document order.
    std::string string_value() const;

    /// Nearest `xml:lang` on this node or an ancestor strictly below `stop`.
    const std::string* inherited_lang(const Node* stop = nullptr) const;

    std::unique_ptr<Node> clone() const;

private:
    NodeKind kind_;
    std::string name_;
    std::string text_;
    std::vector<Attribute> attributes_;
    std::vector<std::unique_ptr<Node>> children_;
    Node* parent_ = nullptr;
};

class Document {
public:
    Document();
    Document(Document&&) noexcept = default;
    Document& operator=(Document&&) noexcept = default;

    /// The document node; its single element child is the root element.
    Node& node() { return *doc_; }
    const Node& node() const { return *doc_; }
    Node* root() const;

private:
    std::unique_ptr<Node> doc_;
};

/// Parses a complete document. Throws Error{"xml-parse-error"} with line and
/// column in the details.
Document parse(std::string_view bytes);

struct WriteOptions {
    bool declaration = true;
    /// Pretty-print with this many spaces per level; 0 keeps text verbatim.
    int indent = 0;
};

std::string serialize(const Document& doc, const WriteOptions& options = {});

/// Serializes `element` as a standalone document, adding the namespace
/// declarations it inherits from its ancestors.
std::string serialize_standalone(const Node& element, const WriteOptions& options = {});

std::string escape_text(std::string_view s);
std::string escape_attribute(std::string_view s);

}  // namespace archint::xml
