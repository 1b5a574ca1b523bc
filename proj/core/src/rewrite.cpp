#include <algorithm>

#include "archint/error.hpp"
#include "archint/transform.hpp"

namespace archint {

namespace {

std::string_view kind_token(RewriteRule::Kind kind) {
    switch (kind) {
        case RewriteRule::Kind::rename: return "rename";
        case RewriteRule::Kind::prune: return "prune";
        case RewriteRule::Kind::wrap: return "wrap";
        case RewriteRule::Kind::copy_attribute: return "copy-attribute";
    }
    return "rename";
}

xml::Node* mutable_node(const xml::Node* n) { return const_cast<xml::Node*>(n); }

}  // namespace

void to_json(nlohmann::json& j, const RewriteRule& r) {
    j = {{"op", kind_token(r.kind)}, {"path", r.path.source()}};
    switch (r.kind) {
        case RewriteRule::Kind::rename: j["to"] = r.name; break;
        case RewriteRule::Kind::wrap: j["with"] = r.name; break;
        case RewriteRule::Kind::copy_attribute:
            j["from"] = r.from;
            j["to"] = r.to;
            if (r.target) j["target"] = r.target->source();
            break;
        case RewriteRule::Kind::prune: break;
    }
}

void from_json(const nlohmann::json& j, RewriteRule& r) {
    std::string op = j.at("op").get<std::string>();
    auto need = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
            throw Error("invalid-stage", "rewrite rule '" + op + "' needs a non-empty '" + key + "'");
        return j[key].get<std::string>();
    };
    r.path = PathExpr::parse(need("path"));
    if (op == "rename") {
        r.kind = RewriteRule::Kind::rename;
        r.name = need("to");
    } else if (op == "prune") {
        r.kind = RewriteRule::Kind::prune;
    } else if (op == "wrap") {
        r.kind = RewriteRule::Kind::wrap;
        r.name = need("with");
    } else if (op == "copy-attribute") {
        r.kind = RewriteRule::Kind::copy_attribute;
        r.from = need("from");
        r.to = need("to");
        if (j.contains("target")) r.target = PathExpr::parse(j["target"].get<std::string>());
    } else {
        throw Error("invalid-stage", "unknown rewrite op '" + op + "'");
    }
    if (r.kind != RewriteRule::Kind::copy_attribute && !r.path.selects_elements())
        throw Error("invalid-stage", "rewrite path '" + r.path.source() + "' must select elements");
}

void structural_rewrite(const std::vector<RewriteRule>& rules, xml::Document& doc) {
    for (const auto& rule : rules) {
        std::vector<const xml::Node*> hits;
        for (const xml::Node* n : rule.path.select(doc.node()))
            if (n->is_element()) hits.push_back(n);
        switch (rule.kind) {
            case RewriteRule::Kind::rename:
                for (const xml::Node* n : hits) mutable_node(n)->set_name(rule.name);
                break;
            case RewriteRule::Kind::prune:
                // Reverse document order detaches descendants before ancestors.
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    xml::Node* n = mutable_node(*it);
                    if (n->parent() && n->parent()->kind() != xml::NodeKind::Document)
                        n->parent()->detach(n->index_in_parent());
                }
                break;
            case RewriteRule::Kind::wrap:
                for (const xml::Node* hit : hits) {
                    xml::Node* n = mutable_node(hit);
                    xml::Node* parent = n->parent();
                    if (!parent || parent->kind() == xml::NodeKind::Document) continue;
                    std::size_t index = n->index_in_parent();
                    auto wrapper = std::make_unique<xml::Node>(xml::NodeKind::Element, rule.name);
                    wrapper->append(parent->detach(index));
                    parent->insert(index, std::move(wrapper));
                }
                break;
            case RewriteRule::Kind::copy_attribute:
                for (const xml::Node* n : hits) {
                    const std::string* value = n->attribute(rule.from);
                    if (!value) continue;
                    std::string copy = *value;
                    if (!rule.target) {
                        mutable_node(n)->set_attribute(rule.to, copy);
                        continue;
                    }
                    for (const xml::Node* t : rule.target->select(*n))
                        if (t->is_element()) mutable_node(t)->set_attribute(rule.to, copy);
                }
                break;
        }
    }
}

std::string structural_rewrite(const std::vector<RewriteRule>& rules, std::string_view xml_text) {
    xml::Document doc = xml::parse(xml_text);
    structural_rewrite(rules, doc);
    return xml::serialize(doc);
}

}  // namespace archint
