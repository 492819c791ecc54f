#include "epicohort/criteria.hpp"

#include "epicohort/errors.hpp"
#include "epicohort/prompts.hpp"
#include "epicohort/retrieval.hpp"
#include "epicohort/text.hpp"

#include <map>
#include <set>
#include <sstream>

namespace epicohort {

using nlohmann::json;

namespace {

enum class Section { None, IndexDate, Inclusion, Exclusion };

struct Heading {
    Section section;
    std::string rest;
};

std::optional<Heading> match_heading(std::string_view line) {
    static const std::pair<const char*, Section> kHeadings[] = {
        {"index date:", Section::IndexDate},
        {"inclusion criteria:", Section::Inclusion},
        {"inclusion:", Section::Inclusion},
        {"exclusion criteria:", Section::Exclusion},
        {"exclusion:", Section::Exclusion},
    };
    for (const auto& [prefix, section] : kHeadings) {
        if (text::starts_with_icase(line, prefix)) {
            return Heading{section, std::string(text::trim(line.substr(std::string_view(prefix).size())))};
        }
    }
    return std::nullopt;
}

std::string one_line(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : text::trim(s)) {
        if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

std::string strip_fences(std::string_view reply) {
    const auto open = reply.find("```");
    if (open == std::string_view::npos) return std::string(reply);
    auto body_start = reply.find('\n', open);
    if (body_start == std::string_view::npos) return std::string(reply);
    const auto close = reply.find("```", body_start);
    return std::string(reply.substr(body_start + 1, close == std::string_view::npos ? std::string_view::npos
                                                                                     : close - body_start - 1));
}

}  // namespace

bool looks_structured(std::string_view raw) {
    std::istringstream in{std::string(raw)};
    for (std::string line; std::getline(in, line);) {
        auto h = match_heading(text::trim(line));
        if (h && h->section == Section::IndexDate) return true;
    }
    return false;
}

std::string serialize_criteria(const CohortCriteria& c) {
    std::string out = "Index date: " + one_line(c.index_date_rule) + "\n";
    out += "Inclusion:\n";
    for (const auto& cr : c.inclusion) out += "- " + one_line(cr.text) + "\n";
    out += "Exclusion:\n";
    for (const auto& cr : c.exclusion) out += "- " + one_line(cr.text) + "\n";
    return out;
}

CohortCriteria parse_structured_criteria(std::string_view raw) {
    if (text::trim(raw).empty()) throw ParseError("criteria text is empty");
    CohortCriteria c;
    Section current = Section::None;
    std::set<Section> seen;
    bool have_rule_heading = false;
    std::istringstream in{std::string(raw)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (auto h = match_heading(trimmed)) {
            if (!seen.insert(h->section).second) {
                throw ParseError("line " + std::to_string(line_no) + ": duplicate heading '" + std::string(trimmed) + "'");
            }
            current = h->section;
            if (current == Section::IndexDate) {
                have_rule_heading = true;
                c.index_date_rule = h->rest;
            } else if (!h->rest.empty()) {
                throw ParseError("line " + std::to_string(line_no) + ": criteria must be bulleted on the lines after the heading");
            }
            continue;
        }
        switch (current) {
            case Section::None:
                throw ParseError("line " + std::to_string(line_no) + ": text before the first heading");
            case Section::IndexDate:
                if (!c.index_date_rule.empty()) c.index_date_rule += ' ';
                c.index_date_rule += std::string(trimmed);
                break;
            case Section::Inclusion:
            case Section::Exclusion: {
                auto& list = current == Section::Inclusion ? c.inclusion : c.exclusion;
                if (trimmed.front() == '-' || trimmed.front() == '*') {
                    auto body = std::string(text::trim(trimmed.substr(1)));
                    if (body.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty bullet");
                    const bool inc = current == Section::Inclusion;
                    list.push_back({std::string(inc ? "inc-" : "exc-") + std::to_string(list.size() + 1), std::move(body), {}});
                } else if (!list.empty()) {
                    list.back().text += ' ';
                    list.back().text += std::string(trimmed);
                } else {
                    throw ParseError("line " + std::to_string(line_no) + ": expected a '-' bullet");
                }
                break;
            }
        }
    }
    if (!have_rule_heading || text::trim(c.index_date_rule).empty()) {
        throw ParseError("missing index date rule ('Index date:' heading)");
    }
    if (c.inclusion.empty()) throw ParseError("no inclusion criteria");
    return c;
}

CohortCriteria LlmCriteriaParser::parse(std::string_view raw) {
    const auto& tmpl = prompts::get("criteria_parse");
    LlmRequest req;
    req.messages.push_back({"user", text::render_template(tmpl.body, {{"criteria", std::string(raw)}})});
    std::string reply = llm_.complete(req);
    try {
        return parse_structured_criteria(strip_fences(reply));
    } catch (const ParseError& first) {
        req.messages.push_back({"assistant", reply});
        req.messages.push_back(
            {"user", text::render_template(prompts::get("criteria_reformat").body, {{"error", first.what()}})});
        reply = llm_.complete(req);
        try {
            return parse_structured_criteria(strip_fences(reply));
        } catch (const ParseError& second) {
            throw SchemaError(std::string("criteria parser output does not conform after one retry: ") + second.what());
        }
    }
}

CohortCriteria parse_criteria(std::string_view raw, CriteriaParser& parser, EntityDetector* detector) {
    if (text::trim(raw).empty()) throw ParseError("criteria text is empty");
    CohortCriteria c = parser.parse(raw);
    if (auto problems = validate_criteria(c); !problems.empty()) {
        throw ParseError("parsed criteria are invalid: " + text::join(problems, "; "));
    }
    if (detector) {
        for (auto* list : {&c.inclusion, &c.exclusion}) {
            for (auto& cr : *list) cr.entities = detect_entities(cr.text, *detector);
        }
    }
    return c;
}

std::vector<std::string> validate_criteria(const CohortCriteria& c) {
    std::vector<std::string> out;
    if (c.inclusion.empty()) out.emplace_back("inclusion nonempty");
    if (text::trim(c.index_date_rule).empty()) out.emplace_back("index_date_rule nonempty");
    std::map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto* list : {&c.inclusion, &c.exclusion}) {
        for (const auto& cr : *list) {
            if (text::trim(cr.text).empty()) out.push_back("criterion text nonempty: " + cr.id);
            if (counts[cr.id]++ == 1) order.push_back(cr.id);
            for (const auto& span : cr.entities) {
                try {
                    check_span(span, cr.text);
                } catch (const ValidationError& ex) {
                    out.push_back("entity span valid in " + cr.id + ": " + ex.what());
                }
            }
        }
    }
    if (!order.empty()) out.push_back("duplicate criterion ids: " + text::join(order, ", "));
    return out;
}

json to_json(const CohortCriteria& c) {
    auto list = [](const std::vector<Criterion>& items) {
        json arr = json::array();
        for (const auto& cr : items) {
            json ents = json::array();
            for (const auto& s : cr.entities) {
                ents.push_back({{"start", s.start}, {"end", s.end}, {"text", s.text}, {"domain", domain_label(s.domain)}});
            }
            arr.push_back({{"id", cr.id}, {"text", cr.text}, {"entities", ents}});
        }
        return arr;
    };
    return {{"index_date_rule", c.index_date_rule}, {"inclusion", list(c.inclusion)}, {"exclusion", list(c.exclusion)}};
}

CohortCriteria criteria_from_json(const json& j) {
    std::vector<FieldDiagnostic> diags;
    CohortCriteria c;
    if (!j.is_object()) throw RequestError("criteria", "must be an object");
    if (!j.contains("index_date_rule") || !j["index_date_rule"].is_string() ||
        text::trim(j["index_date_rule"].get<std::string>()).empty()) {
        diags.push_back({"criteria.index_date_rule", "required nonempty string"});
    } else {
        c.index_date_rule = j["index_date_rule"].get<std::string>();
    }
    auto read_list = [&](const char* key, const char* prefix, std::vector<Criterion>& out, bool required) {
        if (!j.contains(key)) {
            if (required) diags.push_back({std::string("criteria.") + key, "required array"});
            return;
        }
        if (!j[key].is_array()) {
            diags.push_back({std::string("criteria.") + key, "must be an array"});
            return;
        }
        for (std::size_t i = 0; i < j[key].size(); ++i) {
            const auto& item = j[key][i];
            const std::string field = std::string("criteria.") + key + "[" + std::to_string(i) + "]";
            Criterion cr;
            cr.id = std::string(prefix) + std::to_string(i + 1);
            if (item.is_string()) {
                cr.text = item.get<std::string>();
            } else if (item.is_object() && item.contains("text") && item["text"].is_string()) {
                cr.text = item["text"].get<std::string>();
                if (item.contains("id") && item["id"].is_string()) cr.id = item["id"].get<std::string>();
            } else {
                diags.push_back({field, "must be a string or an object with 'text'"});
                continue;
            }
            if (text::trim(cr.text).empty()) {
                diags.push_back({field, "criterion text is empty"});
                continue;
            }
            out.push_back(std::move(cr));
        }
    };
    read_list("inclusion", "inc-", c.inclusion, true);
    read_list("exclusion", "exc-", c.exclusion, false);
    if (diags.empty()) {
        for (const auto& v : validate_criteria(c)) diags.push_back({"criteria", v});
    }
    if (!diags.empty()) throw RequestError(std::move(diags));
    return c;
}

}  // namespace epicohort
