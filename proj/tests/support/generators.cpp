#include "generators.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "archint/transform.hpp"

namespace archint::testing {

namespace {

const std::vector<std::string> kWords{"archive", "letter", "ghetto",  "camp",     "council", "report", "deportation",
                                      "survivor", "photo", "registry", "minutes", "list",    "family", "testimony",
                                      "Łódź",     "Kraków", "Thessaloníki", "žid",  "Straße",  "οικογένεια"};

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[uniform(rng, 0, v.size() - 1)];
}

const std::vector<std::string> kLanguages{"eng", "deu", "pol", "fra", "heb"};

std::vector<std::string> record_keys() {
    std::vector<std::string> keys{"title", "unitdate"};
    for (auto k : kFieldKeys) keys.emplace_back(k);
    for (auto k : kAccessPointKinds) keys.push_back(access_point_key(k));
    return keys;
}

const std::vector<Level> kLevels{Level::fonds, Level::subfonds, Level::series, Level::subseries, Level::recordgrp,
                                 Level::collection, Level::file, Level::item, Level::otherlevel};

void grow(Rng& rng, Record& r, std::size_t depth, const ForestShape& shape, const std::string& prefix,
          std::size_t& counter) {
    if (depth + 1 >= shape.max_depth) return;
    std::size_t n = uniform(rng, 0, shape.max_fanout);
    for (std::size_t i = 0; i < n; ++i) {
        if (shape.max_records && counter >= shape.max_records) return;
        Record c;
        c.local_id = prefix + std::to_string(counter++);
        c.parent_ref = r.local_id;
        if (uniform(rng, 0, 3) > 0) c.level = pick(rng, kLevels);
        static const std::vector<std::string> keys = record_keys();
        std::size_t nf = uniform(rng, 0, 4);
        for (std::size_t k = 0; k < nf; ++k) {
            std::optional<std::string> lang;
            if (uniform(rng, 0, 4) == 0) lang = pick(rng, kLanguages);
            c.add(pick(rng, keys), random_words(rng, 1, 4), lang);
        }
        grow(rng, c, depth + 1, shape, prefix, counter);
        r.children.push_back(std::move(c));
    }
}

}  // namespace

std::string random_words(Rng& rng, std::size_t min_words, std::size_t max_words, bool markup) {
    std::size_t n = uniform(rng, min_words, max_words);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pick(rng, kWords);
        if (markup && uniform(rng, 0, 5) == 0) out += pick(rng, std::vector<std::string>{"&", "<b>", "\"q\"", "'", ">"});
    }
    return out;
}

std::vector<Record> random_forest(Rng& rng, const ForestShape& shape, const std::string& prefix) {
    std::vector<Record> forest;
    std::size_t counter = 0;
    std::size_t roots = uniform(rng, 1, shape.max_roots);
    static const std::vector<std::string> keys = record_keys();
    for (std::size_t i = 0; i < roots; ++i) {
        if (shape.max_records && counter >= shape.max_records) break;
        Record r;
        r.local_id = prefix + std::to_string(counter++);
        r.level = Level::fonds;
        if (uniform(rng, 0, 1)) r.language = pick(rng, kLanguages);
        r.add("title", random_words(rng, 1, 5));
        std::size_t nf = uniform(rng, 0, 3);
        for (std::size_t k = 0; k < nf; ++k) r.add(pick(rng, keys), random_words(rng, 1, 8));
        grow(rng, r, 0, shape, prefix, counter);
        forest.push_back(std::move(r));
    }
    return forest;
}

Record random_ead_tree(Rng& rng, std::size_t max_depth, std::size_t max_fanout, const std::string& prefix) {
    static const std::vector<std::string> keys = record_keys();
    std::size_t counter = 0;
    std::function<Record(std::size_t, const std::optional<std::string>&)> make =
        [&](std::size_t depth, const std::optional<std::string>& parent) {
            Record r;
            r.local_id = prefix + "-" + std::to_string(counter++);
            r.parent_ref = parent;
            r.level = pick(rng, kLevels);
            r.language = pick(rng, kLanguages);
            r.add("title", random_words(rng, 1, 5, true));
            std::size_t nf = uniform(rng, 0, 6);
            for (std::size_t k = 0; k < nf; ++k) {
                std::optional<std::string> lang;
                if (uniform(rng, 0, 3) == 0) {
                    lang = pick(rng, kLanguages);
                    if (lang == r.language) lang.reset();
                }
                r.add(pick(rng, keys), random_words(rng, 1, 6, true), lang);
            }
            if (depth + 1 < max_depth) {
                std::size_t n = uniform(rng, 0, max_fanout);
                for (std::size_t i = 0; i < n; ++i) r.children.push_back(make(depth + 1, r.local_id));
            }
            return r;
        };
    Record root = make(0, std::nullopt);
    normalize_for_ead(root);
    return root;
}

void ensure_titles(std::vector<Record>& forest) {
    for (auto& r : forest) {
        // One title per description language the fields will produce.
        std::set<std::optional<std::string>> languages{std::nullopt}, titled;
        for (const auto& f : r.fields) {
            auto lang = f.language == r.language ? std::nullopt : f.language;
            languages.insert(lang);
            if (f.key == "title") titled.insert(lang);
        }
        for (const auto& lang : languages)
            if (!titled.count(lang)) r.add("title", "untitled " + r.local_id, lang);
        ensure_titles(r.children);
    }
}

std::string repository_id(std::size_t i) {
    std::string n = std::to_string(i + 1);
    return "xx-" + std::string(6 - n.size(), '0') + n;
}

void seed_repositories(Store& store, std::size_t repositories, SpaceName space) {
    Transaction txn = store.begin(space);
    txn.put_country({"xx", "Testland", std::nullopt});
    for (std::size_t i = 0; i < repositories; ++i)
        txn.put_repository({repository_id(i), "xx", "Repository " + std::to_string(i + 1), {}, std::nullopt});
    txn.commit();
}

}  // namespace archint::testing
