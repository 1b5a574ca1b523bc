#include "archint/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "archint/error.hpp"

namespace archint {

namespace {

void flatten_into(const Record& r, const std::optional<std::string>& parent, std::vector<Record>& out) {
    Record copy = r;
    copy.children.clear();
    copy.parent_ref = parent;
    out.push_back(std::move(copy));
    for (const auto& c : r.children) flatten_into(c, r.local_id, out);
}

void collect_ids(const Record& r, std::vector<std::string>& out) {
    out.push_back(r.local_id);
    for (const auto& c : r.children) collect_ids(c, out);
}

}  // namespace

std::vector<Record> flatten(const std::vector<Record>& forest) {
    std::vector<Record> out;
    for (const auto& r : forest) flatten_into(r, std::nullopt, out);
    return out;
}

BuildResult build_tree(std::vector<Record> flat) {
    if (std::any_of(flat.begin(), flat.end(), [](const Record& r) { return !r.children.empty(); })) {
        std::vector<Record> expanded;
        for (const auto& r : flat) {
            auto part = flatten({r});
            part.front().parent_ref = r.parent_ref;
            expanded.insert(expanded.end(), part.begin(), part.end());
        }
        flat = std::move(expanded);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < flat.size(); ++i)
        if (!index.emplace(flat[i].local_id, i).second)
            throw Error("duplicate-local-id", "local_id '" + flat[i].local_id + "' appears more than once",
                        {{"local_id", flat[i].local_id}});

    const std::size_t none = flat.size();
    std::vector<std::size_t> parent(flat.size(), none);
    std::vector<std::vector<std::size_t>> kids(flat.size());
    std::vector<std::size_t> roots, orphans;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const auto& ref = flat[i].parent_ref;
        if (!ref) {
            roots.push_back(i);
            continue;
        }
        auto it = index.find(*ref);
        if (it == index.end()) {
            orphans.push_back(i);
            continue;
        }
        parent[i] = it->second;
        kids[it->second].push_back(i);
    }

    // Anything not reachable from a root or an orphan sits on or under a cycle.
    std::vector<bool> reached(flat.size(), false);
    std::vector<std::size_t> stack(roots.begin(), roots.end());
    stack.insert(stack.end(), orphans.begin(), orphans.end());
    while (!stack.empty()) {
        std::size_t n = stack.back();
        stack.pop_back();
        reached[n] = true;
        for (auto k : kids[n]) stack.push_back(k);
    }
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (reached[i]) continue;
        std::vector<std::size_t> path;
        std::set<std::size_t> seen;
        std::size_t n = i;
        while (seen.insert(n).second) {
            path.push_back(n);
            n = parent[n];
        }
        std::vector<std::string> cycle;
        for (auto it = std::find(path.begin(), path.end(), n); it != path.end(); ++it) cycle.push_back(flat[*it].local_id);
        throw Error("cycle-detected", "parent references form a cycle through '" + flat[n].local_id + "'",
                    {{"cycle", cycle}});
    }

    // Assemble from the leaves up so each subtree is complete when moved.
    std::vector<std::size_t> order;
    order.reserve(flat.size());
    stack.assign(roots.rbegin(), roots.rend());
    stack.insert(stack.end(), orphans.rbegin(), orphans.rend());
    while (!stack.empty()) {
        std::size_t n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (auto it = kids[n].rbegin(); it != kids[n].rend(); ++it) stack.push_back(*it);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        for (auto k : kids[*it]) flat[*it].children.push_back(std::move(flat[k]));

    BuildResult result;
    for (auto r : roots) result.forest.push_back(std::move(flat[r]));
    for (auto o : orphans) result.orphans.push_back(std::move(flat[o]));
    return result;
}

nlohmann::json orphan_report(const BuildResult& r) {
    nlohmann::json orphans = nlohmann::json::array();
    for (const auto& o : r.orphans) {
        std::vector<std::string> ids;
        collect_ids(o, ids);
        orphans.push_back({{"local_id", o.local_id}, {"parent_ref", o.parent_ref.value_or("")}, {"subtree", ids}});
    }
    return {{"roots", r.forest.size()}, {"orphans", orphans}};
}

std::vector<SkeletonItem> skeleton_items(const std::vector<Record>& skeleton_trees) {
    std::vector<SkeletonItem> out;
    for (const auto& stub : skeleton_trees) {
        std::optional<std::string> title;
        if (const std::string* t = stub.first("title")) title = *t;
        for (const auto& item : stub.children) out.push_back({item, stub.local_id, title});
    }
    return out;
}

SkeletonResult skeleton_enrich(const std::vector<SkeletonItem>& items, const std::vector<Record>& fonds) {
    SkeletonResult result;

    // Phase 1: stubs.
    std::vector<Record> stubs;
    std::map<std::string, std::size_t> stub_index;
    for (const auto& item : items) {
        if (item.fonds_id.empty())
            throw Error("invalid-argument", "item '" + item.record.local_id + "' does not name its fonds");
        auto [it, fresh] = stub_index.emplace(item.fonds_id, stubs.size());
        if (fresh) {
            Record stub;
            stub.local_id = item.fonds_id;
            if (item.fonds_title) stub.add("title", *item.fonds_title);
            stubs.push_back(std::move(stub));
        } else if (item.fonds_title) {
            const std::string* known = stubs[it->second].first("title");
            if (!known)
                stubs[it->second].add("title", *item.fonds_title);
            else if (*known != *item.fonds_title)
                result.warnings.push_back("fonds '" + item.fonds_id + "' has conflicting skeleton titles '" + *known +
                                          "' and '" + *item.fonds_title + "'; keeping the first");
        }
        Record child = item.record;
        child.parent_ref = item.fonds_id;
        stubs[it->second].children.push_back(std::move(child));
    }

    // Phase 2: enrich stubs with full fonds records.
    std::vector<bool> claimed(stubs.size(), false);
    for (const auto& f : fonds) {
        auto it = stub_index.find(f.local_id);
        if (it == stub_index.end()) {
            result.forest.push_back(f);
            continue;
        }
        if (claimed[it->second]) {
            result.warnings.push_back("fonds '" + f.local_id + "' supplied twice; later record ignored");
            continue;
        }
        claimed[it->second] = true;
        const Record& stub = stubs[it->second];
        Record merged = f;
        std::set<std::string> fonds_keys;
        for (const auto& field : f.fields) fonds_keys.insert(field.key);
        for (const auto& field : stub.fields)
            if (!fonds_keys.count(field.key)) merged.fields.push_back(field);
        std::set<std::string> present;
        for (const auto& c : merged.children) present.insert(c.local_id);
        for (const auto& c : stub.children) {
            if (present.count(c.local_id)) {
                result.warnings.push_back("item '" + c.local_id + "' already present under fonds '" + f.local_id +
                                          "'; item-level copy kept as a second child");
            }
            merged.children.push_back(c);
        }
        result.forest.push_back(std::move(merged));
    }
    for (std::size_t i = 0; i < stubs.size(); ++i)
        if (!claimed[i]) result.forest.push_back(std::move(stubs[i]));
    return result;
}

namespace {

void merge_node(Record& node, const std::map<std::string, const Record*>& supplement, std::set<std::string>& matched) {
    if (auto it = supplement.find(node.local_id); it != supplement.end()) {
        matched.insert(node.local_id);
        const Record& s = *it->second;
        std::set<std::string> keys;
        for (const auto& f : node.fields) keys.insert(f.key);
        for (const auto& f : s.fields)
            if (!keys.count(f.key)) node.fields.push_back(f);
        if (!node.level) node.level = s.level;
        if (!node.language) node.language = s.language;
    }
    for (auto& c : node.children) merge_node(c, supplement, matched);
}

}  // namespace

MergeResult priority_merge(const std::vector<Record>& primary, const std::vector<Record>& supplement) {
    std::map<std::string, const Record*> by_id;
    for (const auto& s : supplement)
        if (!by_id.emplace(s.local_id, &s).second)
            throw Error("duplicate-local-id", "supplement repeats local_id '" + s.local_id + "'", {{"local_id", s.local_id}});
    MergeResult result;
    result.forest = primary;
    std::set<std::string> matched;
    for (auto& r : result.forest) merge_node(r, by_id, matched);
    for (const auto& s : supplement)
        if (!matched.count(s.local_id)) result.unmatched.push_back(s);
    return result;
}

}  // namespace archint
