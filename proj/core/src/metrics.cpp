#include "autoform/metrics.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>

namespace autoform {

namespace {

struct LabelName {
    FormatLabel label;
    const char* name;
};

constexpr std::array<LabelName, 10> kLabelNames{{
    {FormatLabel::math_equation, "math_equation"},
    {FormatLabel::unordered_list, "unordered_list"},
    {FormatLabel::ordered_list, "ordered_list"},
    {FormatLabel::markdown_table, "markdown_table"},
    {FormatLabel::multi_level_list, "multi_level_list"},
    {FormatLabel::logical_expression, "logical_expression"},
    {FormatLabel::json, "json"},
    {FormatLabel::code_or_pseudocode, "code_or_pseudocode"},
    {FormatLabel::natural_language, "natural_language"},
    {FormatLabel::other, "other"},
}};

} // namespace

std::string to_string(FormatLabel label) {
    for (const auto& entry : kLabelNames)
        if (entry.label == label) return entry.name;
    return "other";
}

FormatLabel format_label_from_string(const std::string& s) {
    for (const auto& entry : kLabelNames)
        if (s == entry.name) return entry.label;
    throw Error(fmt::format("unknown format label '{}'", s));
}

std::vector<std::string> rouge_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    // Two-row dynamic program, O(|a|*|b|) time, O(min) memory.
    const auto& shorter = a.size() <= b.size() ? a : b;
    const auto& longer = a.size() <= b.size() ? b : a;
    std::vector<std::size_t> prev(shorter.size() + 1, 0), curr(shorter.size() + 1, 0);
    for (std::size_t i = 1; i <= longer.size(); ++i) {
        for (std::size_t j = 1; j <= shorter.size(); ++j) {
            if (longer[i - 1] == shorter[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[shorter.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
    auto cand = rouge_tokenize(candidate);
    auto ref = rouge_tokenize(reference);
    RougeScore score;
    if (cand.empty() || ref.empty()) return score;
    double lcs = static_cast<double>(lcs_length(cand, ref));
    score.precision = lcs / static_cast<double>(cand.size());
    score.recall = lcs / static_cast<double>(ref.size());
    if (score.precision + score.recall > 0.0)
        score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
    return score;
}

double delta_tokens(double baseline_mean, double treatment_mean) {
    if (baseline_mean <= 0.0)
        throw ZeroBaseline(fmt::format("baseline mean {} is not positive", baseline_mean));
    return 100.0 * (treatment_mean - baseline_mean) / baseline_mean;
}

RunAggregate aggregate_runs(const std::vector<double>& values) {
    if (values.empty()) throw EmptyInput("aggregate_runs needs at least one value");
    RunAggregate aggregate;
    aggregate.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    aggregate.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - aggregate.mean) * (v - aggregate.mean);
        aggregate.std_dev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return aggregate;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

std::string_view rstrip(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

std::size_t indent_of(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i;
}

bool is_table_row(std::string_view line) {
    auto body = rstrip(line);
    std::size_t start = indent_of(body);
    if (start >= body.size() || body[start] != '|') return false;
    return std::count(body.begin(), body.end(), '|') >= 2;
}

bool is_table_separator(std::string_view line) {
    auto body = rstrip(line);
    std::size_t start = indent_of(body);
    if (start >= body.size() || body[start] != '|') return false;
    bool saw_dash = false;
    for (char c : body.substr(start)) {
        if (c == '-') saw_dash = true;
        else if (c != '|' && c != ':' && c != ' ' && c != '\t') return false;
    }
    return saw_dash;
}

bool is_ordered_item(std::string_view line) {
    auto body = line.substr(indent_of(line));
    std::size_t digits = 0;
    while (digits < body.size() && std::isdigit(static_cast<unsigned char>(body[digits])))
        ++digits;
    if (digits == 0 || digits >= body.size()) return false;
    return body[digits] == '.' || body[digits] == ')';
}

bool is_bullet_item(std::string_view line) {
    auto body = line.substr(indent_of(line));
    if (body.size() < 2) return false;
    return (body[0] == '-' || body[0] == '*') && (body[1] == ' ' || body[1] == '\t');
}

// Finds a brace-balanced region starting at `open` and checks it parses as
// JSON. Objects only; a bare number would otherwise count.
bool has_json_region(std::string_view text) {
    for (std::size_t open = text.find('{'); open != std::string_view::npos;
         open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    auto region = text.substr(open, i - open + 1);
                    auto parsed = nlohmann::json::parse(region, nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object() && !parsed.empty())
                        return true;
                    break;
                }
            }
        }
    }
    return false;
}

bool fenced_block_present(const std::vector<std::string_view>& lines) {
    std::size_t fences = 0;
    for (auto line : lines) {
        auto body = line.substr(indent_of(line));
        if (body.substr(0, 3) == "```") ++fences;
    }
    return fences >= 2;
}

std::string_view last_token(std::string_view side) {
    side = rstrip(side);
    std::size_t start = side.find_last_of(" \t");
    return start == std::string_view::npos ? side : side.substr(start + 1);
}

std::string_view first_token(std::string_view side) {
    std::size_t ws = side.find_first_not_of(" \t");
    if (ws == std::string_view::npos) return {};
    side = side.substr(ws);
    std::size_t end = side.find_first_of(" \t");
    return end == std::string_view::npos ? side : side.substr(0, end);
}

std::size_t word_count(std::string_view side) {
    std::size_t words = 0;
    bool in = false;
    for (char c : side) {
        bool al = std::isalnum(static_cast<unsigned char>(c)) != 0;
        if (al && !in) ++words;
        in = al;
    }
    return words;
}

bool expression_operand(std::string_view token) {
    if (token.empty()) return false;
    return std::all_of(token.begin(), token.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '?' ||
               c == ')' || c == '(' || c == '+' || c == '-';
    });
}

// An operand in expression position starts with a capital, a digit, or a
// paren: "FriedRice == HouseN-1 OR FriedRice == HouseN+1".
bool word_op_operand(std::string_view token) {
    if (token.empty()) return false;
    char c = token.front();
    return std::isupper(static_cast<unsigned char>(c)) ||
           std::isdigit(static_cast<unsigned char>(c)) || c == '(' || c == ')';
}

bool has_logical_expression(std::string_view line) {
    static constexpr std::array<std::string_view, 4> kSymbolOps{"==", "!=", "=>",
                                                                "∧"};
    for (auto op : kSymbolOps) {
        std::size_t at = line.find(op);
        while (at != std::string_view::npos) {
            if (expression_operand(last_token(line.substr(0, at))) &&
                !first_token(line.substr(at + op.size())).empty())
                return true;
            at = line.find(op, at + op.size());
        }
    }
    if (line.find("¬") != std::string_view::npos ||
        line.find("∨") != std::string_view::npos)
        return true;
    for (auto word : {std::string_view("AND"), std::string_view("OR"),
                      std::string_view("NOT")}) {
        std::size_t at = line.find(word);
        while (at != std::string_view::npos) {
            bool left_boundary = at == 0 || line[at - 1] == ' ';
            std::size_t end = at + word.size();
            bool right_boundary = end >= line.size() || line[end] == ' ';
            if (left_boundary && right_boundary) {
                std::string_view before = last_token(line.substr(0, at));
                std::string_view after = first_token(line.substr(std::min(end, line.size())));
                bool left_ok = at == 0 || word_op_operand(before) || before == "NOT";
                if (left_ok && word_op_operand(after)) return true;
            }
            at = line.find(word, at + word.size());
        }
    }
    return false;
}

// A side qualifies as an equation operand when it carries digits/arithmetic,
// or is a short identifier ("x = 4", "Remaining = 15 - 4"). Prose around '='
// fails the word-count guard.
bool equation_side(std::string_view side, bool& symbolic) {
    symbolic = side.find_first_of("0123456789+-*/^") != std::string_view::npos;
    if (symbolic) return word_count(side) <= 6 && !rstrip(side).empty();
    std::string_view token = last_token(side);
    if (token.empty()) token = first_token(side);
    bool identifier = !token.empty() && token.size() <= 12 &&
                      std::all_of(token.begin(), token.end(), [](char c) {
                          return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                      });
    return identifier && word_count(side) <= 4;
}

bool has_math_equation(std::string_view line) {
    if (is_table_row(line)) return false;
    std::size_t at = line.find('=');
    while (at != std::string_view::npos) {
        bool part_of_comparison =
            (at + 1 < line.size() && (line[at + 1] == '=' || line[at + 1] == '>')) ||
            (at > 0 && (line[at - 1] == '=' || line[at - 1] == '!' || line[at - 1] == '<' ||
                        line[at - 1] == '>'));
        if (!part_of_comparison) {
            bool left_symbolic = false, right_symbolic = false;
            std::string_view left = line.substr(0, at);
            std::string_view right = line.substr(at + 1);
            bool left_ok = equation_side(left, left_symbolic);
            bool right_ok = equation_side(right, right_symbolic);
            if (left_ok && right_ok && (left_symbolic || right_symbolic)) return true;
        }
        at = line.find('=', at + 1);
    }
    return false;
}

// Line index ranges covered by ``` fences; assignments inside code blocks
// are code, not standalone equations.
std::vector<bool> fenced_mask(const std::vector<std::string_view>& lines) {
    std::vector<bool> mask(lines.size(), false);
    bool in_fence = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto body = lines[i].substr(indent_of(lines[i]));
        if (body.substr(0, 3) == "```") {
            mask[i] = true;
            in_fence = !in_fence;
        } else {
            mask[i] = in_fence;
        }
    }
    return mask;
}

} // namespace

std::vector<FormatLabel> classify_format(std::string_view text) {
    auto lines = split_lines(text);
    std::vector<FormatLabel> labels;
    auto add = [&](FormatLabel label) {
        if (std::find(labels.begin(), labels.end(), label) == labels.end())
            labels.push_back(label);
    };

    for (std::size_t i = 0; i + 1 < lines.size(); ++i)
        if (is_table_row(lines[i]) && is_table_separator(lines[i + 1]))
            add(FormatLabel::markdown_table);

    for (std::size_t i = 0; i + 1 < lines.size(); ++i)
        if (is_ordered_item(lines[i]) && is_ordered_item(lines[i + 1]))
            add(FormatLabel::ordered_list);

    bool saw_bullet = false;
    for (auto line : lines)
        if (is_bullet_item(line)) saw_bullet = true;
    if (saw_bullet) add(FormatLabel::unordered_list);

    // Nested bullets: a bullet strictly more indented than a preceding one.
    std::optional<std::size_t> outer_indent;
    for (auto line : lines) {
        if (is_bullet_item(line) || is_ordered_item(line)) {
            std::size_t indent = indent_of(line);
            if (outer_indent && indent > *outer_indent + 1) {
                add(FormatLabel::multi_level_list);
                break;
            }
            if (!outer_indent || indent < *outer_indent) outer_indent = indent;
        }
    }

    bool json_found = has_json_region(text);
    if (json_found) add(FormatLabel::json);
    if (fenced_block_present(lines) && !json_found)
        add(FormatLabel::code_or_pseudocode);

    auto fenced = fenced_mask(lines);
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (!fenced[i] && has_logical_expression(lines[i])) {
            add(FormatLabel::logical_expression);
            break;
        }
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (!fenced[i] && has_math_equation(lines[i])) {
            add(FormatLabel::math_equation);
            break;
        }

    if (labels.empty()) labels.push_back(FormatLabel::natural_language);
    return labels;
}

void tally_formats(FormatTally& tally, std::string_view text) {
    for (FormatLabel label : classify_format(text)) ++tally.counts[label];
}

std::string render_dialogue_table_markdown(const std::vector<DialogueMetricsRow>& rows) {
    std::string out = "| Setting | RougeL | # Tokens | dTokens |\n|---|---|---|---|\n";
    for (const auto& row : rows) {
        out += fmt::format("| {} | {:.2f} | {:.1f} | {} |\n", row.setting, row.rouge_l,
                           row.mean_tokens,
                           row.has_delta ? fmt::format("{:+.1f}%", row.delta_pct) : "-");
    }
    return out;
}

std::string render_dialogue_table_csv(const std::vector<DialogueMetricsRow>& rows) {
    std::string out = "setting,rouge_l,mean_tokens,delta_pct\n";
    for (const auto& row : rows) {
        out += fmt::format("{},{},{},{}\n", row.setting, row.rouge_l, row.mean_tokens,
                           row.has_delta ? fmt::format("{}", row.delta_pct) : "");
    }
    return out;
}

std::string render_accuracy_table_markdown(const std::vector<AccuracyRow>& rows) {
    std::string out = "| Setting | Accuracy (mean ± std) |\n|---|---|\n";
    for (const auto& row : rows)
        out += fmt::format("| {} | {:.1f} ± {:.1f} |\n", row.setting, 100.0 * row.mean,
                           100.0 * row.std_dev);
    return out;
}

std::string render_accuracy_table_csv(const std::vector<AccuracyRow>& rows) {
    std::string out = "setting,mean,std\n";
    for (const auto& row : rows)
        out += fmt::format("{},{},{}\n", row.setting, row.mean, row.std_dev);
    return out;
}

} // namespace autoform
