#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "archint/csv.hpp"
#include "archint/error.hpp"
#include "archint/transform.hpp"

namespace archint {

namespace {

enum class Zone { did, body, controlaccess };

struct Placement {
    std::string_view key;
    Zone zone;
    // Element chain below the zone; the value goes into the last element.
    std::string_view outer;
    std::string_view inner;  // empty when the value sits in `outer`
};

// Order here is the order fields are read back by the default mapping.
constexpr std::array<Placement, 19> kProfile{{
    {"title", Zone::did, "unittitle", ""},
    {"unitdate", Zone::did, "unitdate", ""},
    {"physdesc", Zone::did, "physdesc", ""},
    {"access_point:creator", Zone::did, "origination", "name"},
    {"note", Zone::did, "note", "p"},
    {"bioghist", Zone::body, "bioghist", "p"},
    {"scopecontent", Zone::body, "scopecontent", "p"},
    {"custodhist", Zone::body, "custodhist", "p"},
    {"acqinfo", Zone::body, "acqinfo", "p"},
    {"arrangement", Zone::body, "arrangement", "p"},
    {"accessrestrict", Zone::body, "accessrestrict", "p"},
    {"userestrict", Zone::body, "userestrict", "p"},
    {"processinfo", Zone::body, "processinfo", "p"},
    {"access_point:subject", Zone::controlaccess, "subject", ""},
    {"access_point:place", Zone::controlaccess, "geogname", ""},
    {"access_point:person", Zone::controlaccess, "persname", ""},
    {"access_point:corporateBody", Zone::controlaccess, "corpname", ""},
    {"access_point:family", Zone::controlaccess, "famname", ""},
    {"access_point:genre", Zone::controlaccess, "genreform", ""},
}};

std::size_t rank_of(std::string_view key) {
    for (std::size_t i = 0; i < kProfile.size(); ++i)
        if (kProfile[i].key == key) return i;
    return kProfile.size();
}

std::string zone_path(const Placement& p) {
    std::string path;
    if (p.zone == Zone::did) path = "did/";
    if (p.zone == Zone::controlaccess) path = "controlaccess/";
    path += p.outer;
    if (!p.inner.empty()) {
        path += "/";
        path += p.inner;
    }
    return path;
}

// Fields of one block: main (language empty) or one parallel language.
using Block = std::vector<const RecordField*>;

bool in_main_block(const RecordField& f, const Record& r) { return !f.language || f.language == r.language; }

void append_value(xml::Node& zone, const Placement& p, const std::string& value) {
    xml::Node& outer = zone.append_element(std::string(p.outer));
    if (p.inner.empty()) {
        outer.append_text(value);
    } else {
        outer.append_element(std::string(p.inner)).append_text(value);
    }
}

void write_block(xml::Node& parent, const Block& fields, const Record* main_record) {
    xml::Node* did = nullptr;
    if (main_record) {
        did = &parent.append_element("did");
        did->append_element("unitid").append_text(main_record->local_id);
    }
    for (const auto& p : kProfile) {
        if (p.zone != Zone::did) continue;
        for (const RecordField* f : fields) {
            if (f->key != p.key) continue;
            if (!did) did = &parent.append_element("did");
            append_value(*did, p, f->value);
        }
        if (main_record && p.key == "unitdate" && main_record->language) {
            auto& lang = did->append_element("langmaterial").append_element("language");
            lang.set_attribute("langcode", *main_record->language);
        }
    }
    for (const auto& p : kProfile) {
        if (p.zone != Zone::body) continue;
        for (const RecordField* f : fields)
            if (f->key == p.key) append_value(parent, p, f->value);
    }
    xml::Node* control = nullptr;
    for (const auto& p : kProfile) {
        if (p.zone != Zone::controlaccess) continue;
        for (const RecordField* f : fields) {
            if (f->key != p.key) continue;
            if (!control) control = &parent.append_element("controlaccess");
            append_value(*control, p, f->value);
        }
    }
}

void check_record(const Record& r) {
    if (r.local_id.empty()) throw Error("invalid-record", "record without local_id");
    for (const auto& f : r.fields) {
        if (rank_of(f.key) == kProfile.size())
            throw Error("invalid-record", "record '" + r.local_id + "' has field '" + f.key + "' outside the EAD profile");
        if (f.value.empty()) throw Error("invalid-record", "record '" + r.local_id + "' has an empty '" + f.key + "' value");
        if (f.language && f.language->empty())
            throw Error("invalid-record", "record '" + r.local_id + "' has an empty field language");
    }
}

void write_unit(xml::Node& el, const Record& r) {
    check_record(r);
    el.set_attribute("level", std::string(to_string(r.level.value_or(Level::otherlevel))));
    Block main;
    std::map<std::string, Block> parallel;
    for (const auto& f : r.fields) {
        if (in_main_block(f, r))
            main.push_back(&f);
        else
            parallel[*f.language].push_back(&f);
    }
    write_block(el, main, &r);
    for (const auto& [lang, block] : parallel) {
        xml::Node& grp = el.append_element("descgrp");
        grp.set_attribute("type", "parallel");
        grp.set_attribute("xml:lang", lang);
        write_block(grp, block, nullptr);
    }
}

void write_components(xml::Node& parent, const Record& r) {
    for (const auto& child : r.children) {
        xml::Node& c = parent.append_element("c");
        write_unit(c, child);
        write_components(c, child);
    }
}

}  // namespace

std::string serialize_ead(const Record& record) {
    xml::Document doc;
    xml::Node& ead = doc.node().append_element("ead");
    ead.set_attribute("xmlns", "urn:isbn:1-931666-22-9");
    xml::Node& header = ead.append_element("eadheader");
    header.append_element("eadid").append_text(record.local_id);
    const std::string* title = nullptr;
    for (const auto& f : record.fields)
        if (f.key == kTitleKey && in_main_block(f, record)) {
            title = &f.value;
            break;
        }
    header.append_element("filedesc")
        .append_element("titlestmt")
        .append_element("titleproper")
        .append_text(title ? *title : record.local_id);
    xml::Node& archdesc = ead.append_element("archdesc");
    write_unit(archdesc, record);
    if (!record.children.empty()) write_components(archdesc.append_element("dsc"), record);
    return xml::serialize(doc, {.declaration = true, .indent = 2});
}

std::vector<std::string> serialize_ead(const std::vector<Record>& records) {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(serialize_ead(r));
    return out;
}

std::string default_ead_mapping_text() {
    std::string out = csv::format_row({"record_path", "target_field", "source", "template", "condition"});
    for (std::string_view record_path : {"/ead/archdesc", "//c"}) {
        auto row = [&](std::string_view target, const std::string& source) {
            out += csv::format_row({std::string(record_path), std::string(target), source, "", ""});
        };
        row(kLocalIdTarget, "did/unitid");
        row(kLevelTarget, "@level");
        row(kLanguageTarget, "did/langmaterial/language/@langcode");
        for (const auto& p : kProfile) {
            row(p.key, zone_path(p));
            row(p.key, "descgrp[@type='parallel']/" + zone_path(p));
        }
    }
    return out;
}

const MappingTable& default_ead_mapping() {
    static const MappingTable table = compile_mapping(default_ead_mapping_text());
    return table;
}

void normalize_for_ead(Record& record) {
    for (auto& f : record.fields)
        if (f.language && f.language == record.language) f.language.reset();
    std::stable_sort(record.fields.begin(), record.fields.end(), [](const RecordField& a, const RecordField& b) {
        auto ra = rank_of(a.key), rb = rank_of(b.key);
        if (ra != rb) return ra < rb;
        return a.language.value_or("") < b.language.value_or("");
    });
    for (auto& c : record.children) normalize_for_ead(c);
}

}  // namespace archint
