#include "reverger/prompts.hpp"

#include "builtin_templates.hpp"
#include "reverger/error.hpp"
#include "reverger/label.hpp"
#include "reverger/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reverger {

std::string_view to_string(PromptKind kind) noexcept {
    switch (kind) {
        case PromptKind::root_directions: return "root_directions";
        case PromptKind::sub_directions: return "sub_directions";
        case PromptKind::synthesis: return "synthesis";
    }
    return "root_directions";
}

std::optional<PromptKind> prompt_kind_from_string(std::string_view s) noexcept {
    if (s == "root_directions") return PromptKind::root_directions;
    if (s == "sub_directions") return PromptKind::sub_directions;
    if (s == "synthesis") return PromptKind::synthesis;
    return std::nullopt;
}

std::optional<std::string> label_problem(std::string_view label) {
    if (!text::is_valid_utf8(label)) return "label is not valid UTF-8";
    if (text::trim(label).empty()) return "label is empty";
    if (label.find_first_of("\r\n") != std::string_view::npos) return "label contains a line break";
    if (text::scalar_length(label) > kMaxLabelLength) {
        return "label is longer than " + std::to_string(kMaxLabelLength) + " characters";
    }
    return std::nullopt;
}

namespace {

constexpr std::string_view kRequirementsMarker = "--- requirements";

bool is_known_placeholder(std::string_view name) {
    return name == kEntireStory || name == kSelectedPart || name == kDirection || name == kCount;
}

// Calls on_text for literal runs and on_var for each ${name}.
template <typename OnText, typename OnVar>
void scan_placeholders(std::string_view body, OnText on_text, OnVar on_var) {
    std::size_t pos = 0;
    while (pos < body.size()) {
        const std::size_t open = body.find("${", pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = body.find('}', open + 2);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::InvalidTemplate, "unterminated placeholder in template");
        }
        on_text(body.substr(pos, open - pos));
        on_var(body.substr(open + 2, close - open - 2));
        pos = close + 1;
    }
    on_text(body.substr(pos));
}

bool uses(const PromptTemplate& t, std::string_view name) {
    return t.body.find("${" + std::string(name) + "}") != std::string::npos;
}

}  // namespace

PromptTemplate PromptTemplate::parse(PromptKind kind, std::string_view file_text) {
    PromptTemplate t;
    t.kind = kind;

    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos <= file_text.size();) {
        std::size_t nl = file_text.find('\n', pos);
        if (nl == std::string_view::npos) nl = file_text.size();
        lines.push_back(file_text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();

    std::size_t i = 0;
    while (i < lines.size() && lines[i].starts_with('#')) ++i;

    std::string body;
    for (; i < lines.size() && text::trim(lines[i]) != kRequirementsMarker; ++i) {
        if (!body.empty()) body += '\n';
        body.append(lines[i]);
    }
    t.body = std::move(body);
    if (i < lines.size()) ++i;
    for (; i < lines.size(); ++i) {
        const auto clause = text::trim(lines[i]);
        if (!clause.empty()) t.requirement_clauses.emplace_back(clause);
    }

    scan_placeholders(
        t.body, [](std::string_view) {},
        [](std::string_view name) {
            if (!is_known_placeholder(name)) {
                throw Error(ErrorCode::InvalidTemplate,
                            "unknown placeholder ${" + std::string(name) + "}");
            }
        });

    const std::string kind_name(to_string(kind));
    if (!uses(t, kEntireStory) || !uses(t, kSelectedPart)) {
        throw Error(ErrorCode::InvalidTemplate,
                    kind_name + " template must include the entire story and selected part");
    }
    if (kind != PromptKind::root_directions && !uses(t, kDirection)) {
        throw Error(ErrorCode::InvalidTemplate, kind_name + " template must include ${direction}");
    }
    if (kind != PromptKind::synthesis && !uses(t, kCount)) {
        throw Error(ErrorCode::InvalidTemplate, kind_name + " template must include ${count}");
    }
    if (kind == PromptKind::synthesis) {
        bool marks_emphasis = false;
        for (const auto& c : t.requirement_clauses) {
            if (c.find(kEmphasisDelimiter) != std::string::npos) marks_emphasis = true;
        }
        if (t.requirement_clauses.size() < 2 || !marks_emphasis) {
            throw Error(ErrorCode::InvalidTemplate,
                        "synthesis template needs emphasis-marking and length requirements");
        }
    }
    return t;
}

std::string CompiledPrompt::digest() const {
    std::string joined;
    for (const auto& [name, value] : variable_digest) {
        joined.append(name).append("=").append(value).append("\n");
    }
    return text::hex_digest(joined);
}

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set = [] {
        TemplateSet s;
        for (PromptKind k :
             {PromptKind::root_directions, PromptKind::sub_directions, PromptKind::synthesis}) {
            s.templates_.emplace(k, PromptTemplate::parse(k, detail::builtin_template_text(k)));
        }
        return s;
    }();
    return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet s;
    for (PromptKind k :
         {PromptKind::root_directions, PromptKind::sub_directions, PromptKind::synthesis}) {
        const auto path = dir / (std::string(to_string(k)) + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::InvalidTemplate, "cannot read template " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        s.templates_.emplace(k, PromptTemplate::parse(k, buf.str()));
    }
    return s;
}

const PromptTemplate& TemplateSet::get(PromptKind kind) const {
    return templates_.at(kind);
}

CompiledPrompt TemplateSet::compile(PromptKind kind, std::string_view entire_story,
                                    std::string_view selected_part,
                                    const std::vector<std::string>& directions,
                                    std::size_t count) const {
    switch (kind) {
        case PromptKind::root_directions:
            if (!directions.empty()) {
                throw Error(ErrorCode::WrongKindArguments, "root directions take no direction");
            }
            break;
        case PromptKind::sub_directions:
            if (directions.size() != 1) {
                throw Error(ErrorCode::WrongKindArguments,
                            "sub-directions take exactly one direction path");
            }
            break;
        case PromptKind::synthesis:
            if (directions.empty()) {
                throw Error(ErrorCode::WrongKindArguments, "synthesis needs at least one direction");
            }
            break;
    }
    if (kind != PromptKind::synthesis && count == 0) {
        throw Error(ErrorCode::WrongKindArguments, "direction count must be positive");
    }
    if (text::trim(entire_story).empty()) {
        throw Error(ErrorCode::MissingVariable, "missing value for ${entire story}");
    }
    if (text::trim(selected_part).empty()) {
        throw Error(ErrorCode::MissingVariable, "missing value for ${selected part}");
    }
    for (const auto& d : directions) {
        if (text::trim(d).empty()) {
            throw Error(ErrorCode::MissingVariable, "missing value for ${direction}");
        }
    }

    std::string direction_value;
    if (kind == PromptKind::synthesis) {
        for (const auto& d : directions) {
            if (!direction_value.empty()) direction_value += '\n';
            direction_value.append("- ").append(d);
        }
    } else if (!directions.empty()) {
        direction_value = directions.front();
    }
    const std::string count_value = std::to_string(count);

    CompiledPrompt out;
    out.kind = kind;
    out.count = kind == PromptKind::synthesis ? 0 : count;
    out.variable_digest.emplace(kEntireStory, text::hex_digest(entire_story));
    out.variable_digest.emplace(kSelectedPart, text::hex_digest(selected_part));
    if (kind != PromptKind::root_directions) {
        out.variable_digest.emplace(kDirection, text::hex_digest(direction_value));
    }
    if (kind != PromptKind::synthesis) {
        out.variable_digest.emplace(kCount, text::hex_digest(count_value));
    }

    const PromptTemplate& t = get(kind);
    std::string& result = out.text;
    scan_placeholders(
        t.body, [&](std::string_view lit) { result.append(lit); },
        [&](std::string_view name) {
            if (name == kEntireStory) {
                result.append(entire_story);
            } else if (name == kSelectedPart) {
                result.append(selected_part);
            } else if (name == kDirection) {
                result.append(direction_value);
            } else {
                result.append(count_value);
            }
        });
    if (!t.requirement_clauses.empty()) {
        result.append("\n\nRequirements:");
        for (std::size_t i = 0; i < t.requirement_clauses.size(); ++i) {
            result.append("\n").append(std::to_string(i + 1)).append(". ");
            result.append(t.requirement_clauses[i]);
        }
    }
    result.append("\n");
    return out;
}

namespace {

// "<digits>. <rest>" -> (index, rest). The label part is returned untrimmed.
std::optional<std::pair<std::size_t, std::string_view>> numbered_line(std::string_view line) {
    line = text::trim(line);
    std::size_t i = 0;
    std::size_t index = 0;
    while (i < line.size() && i < 4 && line[i] >= '0' && line[i] <= '9') {
        index = index * 10 + static_cast<std::size_t>(line[i] - '0');
        ++i;
    }
    if (i == 0 || i == 4 || i + 1 >= line.size() || line[i] != '.') return std::nullopt;
    if (line[i + 1] != ' ' && line[i + 1] != '\t') return std::nullopt;
    return std::pair{index, line.substr(i + 2)};
}

std::string clean_label(std::string_view raw) {
    auto label = text::trim(raw);
    if (label.size() > 4 && label.starts_with(kEmphasisDelimiter) &&
        label.ends_with(kEmphasisDelimiter)) {
        label = text::trim(label.substr(2, label.size() - 4));
    }
    return std::string(label);
}

}  // namespace

ParsedDirections parse_directions(std::string_view raw, std::size_t expected_count) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos <= raw.size();) {
        std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw.size();
        lines.push_back(raw.substr(pos, nl - pos));
        pos = nl + 1;
    }

    std::size_t first = 0;
    while (first < lines.size()) {
        const auto n = numbered_line(lines[first]);
        if (n && n->first == 1) break;
        ++first;
    }
    if (first == lines.size()) {
        throw Error(ErrorCode::MalformedDirections, "response contains no numbered list");
    }

    ParsedDirections out;
    for (std::size_t i = first; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto n = numbered_line(lines[i]);
        if (!n || n->first != out.labels.size() + 1) break;
        std::string label = clean_label(n->second);
        if (auto problem = label_problem(label)) {
            throw Error(ErrorCode::MalformedDirections,
                        "direction " + std::to_string(n->first) + ": " + *problem);
        }
        out.labels.push_back(std::move(label));
    }
    if (out.labels.size() != expected_count) {
        throw Error(ErrorCode::MalformedDirections,
                    "expected " + std::to_string(expected_count) + " directions, got " +
                        std::to_string(out.labels.size()));
    }
    return out;
}

ParsedVariation parse_variation(std::string_view raw) {
    if (!text::is_valid_utf8(raw)) {
        throw Error(ErrorCode::InvalidEncoding, "variation is not valid UTF-8");
    }
    std::vector<std::size_t> delims;
    for (std::size_t pos = raw.find(kEmphasisDelimiter); pos != std::string_view::npos;
         pos = raw.find(kEmphasisDelimiter, pos + 2)) {
        delims.push_back(pos);
    }

    ParsedVariation out;
    if (delims.size() % 2 == 1) {
        out.lenient = true;
    }
    std::size_t scalars = 0;
    std::size_t pos = 0;
    auto copy_until = [&](std::size_t end) {
        const auto chunk = raw.substr(pos, end - pos);
        out.text.append(chunk);
        scalars += text::scalar_length(chunk);
        pos = end;
    };
    for (std::size_t i = 0; i < delims.size(); ++i) {
        copy_until(delims[i]);
        pos += kEmphasisDelimiter.size();
        if (i % 2 == 0 && i + 1 < delims.size()) {
            const std::size_t start = scalars;
            copy_until(delims[i + 1]);
            pos += kEmphasisDelimiter.size();
            if (scalars > start) out.emphasized.push_back({start, scalars});
            ++i;
        }
    }
    copy_until(raw.size());

    if (text::trim(out.text).empty()) {
        throw Error(ErrorCode::EmptyVariation, "variation has no visible text");
    }
    return out;
}

std::string render_markup(const ParsedVariation& v) {
    std::string out;
    std::size_t prev = 0;
    for (const auto& r : v.emphasized) {
        out.append(text::slice(v.text, prev, r.start));
        out.append(kEmphasisDelimiter);
        out.append(text::slice(v.text, r.start, r.end));
        out.append(kEmphasisDelimiter);
        prev = r.end;
    }
    out.append(text::slice(v.text, prev, text::scalar_length(v.text)));
    return out;
}

ParsedVariation trimmed(const ParsedVariation& v) {
    const std::u32string wide = text::decode(v.text);
    auto is_space = [](char32_t c) {
        return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
    };
    std::size_t lo = 0;
    std::size_t hi = wide.size();
    while (lo < hi && is_space(wide[lo])) ++lo;
    while (hi > lo && is_space(wide[hi - 1])) --hi;

    ParsedVariation out;
    out.lenient = v.lenient;
    out.text = text::encode(std::u32string_view(wide).substr(lo, hi - lo));
    for (const auto& r : v.emphasized) {
        const std::size_t s = std::clamp(r.start, lo, hi) - lo;
        const std::size_t e = std::clamp(r.end, lo, hi) - lo;
        if (e > s) out.emphasized.push_back({s, e});
    }
    return out;
}

ValidationReport validate_variation(const ParsedVariation& v, std::string_view selected_part,
                                    double max_length_ratio) {
    if (!(max_length_ratio > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "length ratio must be positive");
    }
    ValidationReport r;
    r.word_count = text::word_count(v.text);
    r.source_word_count = text::word_count(selected_part);
    r.too_long = static_cast<double>(r.word_count) >
                 max_length_ratio * static_cast<double>(r.source_word_count);
    r.no_emphasis = v.emphasized.empty();
    return r;
}

}  // namespace reverger
