#include "autoform/acl.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace autoform {

using nlohmann::json;

AclValue AclValue::atom(std::string t) {
    AclValue v;
    v.kind = Kind::atom;
    v.text = std::move(t);
    return v;
}

AclValue AclValue::quoted(std::string t) {
    AclValue v;
    v.kind = Kind::quoted;
    v.text = std::move(t);
    return v;
}

AclValue AclValue::list(std::vector<AclValue> items) {
    AclValue v;
    v.kind = Kind::list;
    v.items = std::move(items);
    return v;
}

bool AclValue::operator==(const AclValue& other) const {
    if (kind != other.kind) return false;
    if (kind == Kind::list) return items == other.items;
    return text == other.text;
}

const AclValue* AclMessage::find(std::string_view keyword) const {
    for (const auto& parameter : parameters)
        if (parameter.keyword == keyword) return &parameter.value;
    return nullptr;
}

AclMessage AclMessage::canonicalized() const {
    AclMessage out = *this;
    std::sort(out.parameters.begin(), out.parameters.end(),
              [](const AclParameter& a, const AclParameter& b) {
                  return a.keyword < b.keyword;
              });
    return out;
}

std::string KqmlError::describe() const {
    const char* name = "";
    switch (kind) {
    case Kind::unbalanced_parens: name = "UnbalancedParens"; break;
    case Kind::missing_performative: name = "MissingPerformative"; break;
    case Kind::dangling_keyword: name = "DanglingKeyword"; break;
    case Kind::duplicate_keyword: name = "DuplicateKeyword"; break;
    case Kind::unterminated_string: name = "UnterminatedString"; break;
    case Kind::expected_keyword: name = "ExpectedKeyword"; break;
    case Kind::trailing_content: name = "TrailingContent"; break;
    }
    return fmt::format("{} at byte {}", name, position);
}

namespace {

bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_atom_char(char c) {
    return !is_ws(c) && c != '(' && c != ')' && c != '"';
}

bool valid_atom(std::string_view token) {
    if (token.empty()) return false;
    return std::all_of(token.begin(), token.end(), is_atom_char);
}

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_ws() {
        while (!eof() && is_ws(peek())) ++pos;
    }
    std::string_view lex_atom() {
        std::size_t start = pos;
        while (!eof() && is_atom_char(peek())) ++pos;
        return text.substr(start, pos - start);
    }
    // Lexes a quoted string starting at the opening '"'. Returns the
    // unescaped content, or nullopt when the string never closes.
    std::optional<std::string> lex_string() {
        ++pos; // opening quote
        std::string out;
        while (!eof()) {
            char c = text[pos++];
            if (c == '"') return out;
            if (c == '\\') {
                if (eof()) return std::nullopt;
                out.push_back(text[pos++]);
            } else {
                out.push_back(c);
            }
        }
        return std::nullopt;
    }
};

// Parses a value whose first character sits at the cursor. Lists are handled
// with an explicit stack so pathological nesting depth cannot overflow the
// call stack.
std::variant<AclValue, KqmlError> parse_value(Cursor& cur) {
    char c = cur.peek();
    if (c == '"') {
        std::size_t open = cur.pos;
        auto content = cur.lex_string();
        if (!content)
            return KqmlError{KqmlError::Kind::unterminated_string, open};
        return AclValue::quoted(std::move(*content));
    }
    if (c != '(') {
        return AclValue::atom(std::string(cur.lex_atom()));
    }

    struct Frame {
        std::vector<AclValue> items;
        std::size_t open_pos;
    };
    std::vector<Frame> stack;
    stack.push_back({{}, cur.pos});
    ++cur.pos;
    for (;;) {
        cur.skip_ws();
        if (cur.eof())
            return KqmlError{KqmlError::Kind::unbalanced_parens, stack.back().open_pos};
        char head = cur.peek();
        if (head == ')') {
            ++cur.pos;
            AclValue done = AclValue::list(std::move(stack.back().items));
            stack.pop_back();
            if (stack.empty()) return done;
            stack.back().items.push_back(std::move(done));
        } else if (head == '(') {
            stack.push_back({{}, cur.pos});
            ++cur.pos;
        } else if (head == '"') {
            std::size_t open = cur.pos;
            auto content = cur.lex_string();
            if (!content)
                return KqmlError{KqmlError::Kind::unterminated_string, open};
            stack.back().items.push_back(AclValue::quoted(std::move(*content)));
        } else {
            stack.back().items.push_back(AclValue::atom(std::string(cur.lex_atom())));
        }
    }
}

} // namespace

KqmlParseResult parse_kqml(std::string_view text) noexcept {
    Cursor cur{text};
    cur.skip_ws();
    if (cur.eof() || cur.peek() != '(')
        return KqmlError{KqmlError::Kind::unbalanced_parens, cur.pos};
    std::size_t open_pos = cur.pos;
    ++cur.pos;
    cur.skip_ws();
    if (cur.eof())
        return KqmlError{KqmlError::Kind::unbalanced_parens, open_pos};
    if (cur.peek() == ')' || cur.peek() == '(' || cur.peek() == '"')
        return KqmlError{KqmlError::Kind::missing_performative, cur.pos};
    std::size_t performative_pos = cur.pos;
    std::string performative(cur.lex_atom());
    if (performative.empty() || performative.front() == ':')
        return KqmlError{KqmlError::Kind::missing_performative, performative_pos};

    AclMessage message;
    message.performative = std::move(performative);
    std::set<std::string, std::less<>> seen;

    for (;;) {
        cur.skip_ws();
        if (cur.eof())
            return KqmlError{KqmlError::Kind::unbalanced_parens, open_pos};
        if (cur.peek() == ')') {
            ++cur.pos;
            cur.skip_ws();
            if (!cur.eof())
                return KqmlError{KqmlError::Kind::trailing_content, cur.pos};
            return message;
        }
        if (cur.peek() == '(' || cur.peek() == '"')
            return KqmlError{KqmlError::Kind::expected_keyword, cur.pos};

        std::size_t keyword_pos = cur.pos;
        std::string keyword(cur.lex_atom());
        if (keyword.size() < 2 || keyword.front() != ':')
            return KqmlError{KqmlError::Kind::expected_keyword, keyword_pos};
        if (!seen.insert(keyword).second)
            return KqmlError{KqmlError::Kind::duplicate_keyword, keyword_pos};

        cur.skip_ws();
        if (cur.eof())
            return KqmlError{KqmlError::Kind::unbalanced_parens, open_pos};
        if (cur.peek() == ')')
            return KqmlError{KqmlError::Kind::dangling_keyword, keyword_pos};
        if (cur.peek() != '(' && cur.peek() != '"' && cur.peek() == ':')
            return KqmlError{KqmlError::Kind::dangling_keyword, keyword_pos};

        auto value = parse_value(cur);
        if (auto* err = std::get_if<KqmlError>(&value)) return *err;
        message.parameters.push_back(
            {std::move(keyword), std::move(std::get<AclValue>(value))});
    }
}

namespace {

void check_atom(std::string_view token, bool parameter_position) {
    if (!valid_atom(token))
        throw InvalidAtom(fmt::format(
            "'{}' is not a valid atom (empty or contains whitespace/parens/quotes)",
            token));
    if (parameter_position && token.front() == ':')
        throw InvalidAtom(fmt::format(
            "atom '{}' in parameter position would re-parse as a keyword", token));
}

void serialize_value(const AclValue& value, std::string& out, bool parameter_position) {
    switch (value.kind) {
    case AclValue::Kind::atom:
        check_atom(value.text, parameter_position);
        out += value.text;
        return;
    case AclValue::Kind::quoted: {
        out += '"';
        for (char c : value.text) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        out += '"';
        return;
    }
    case AclValue::Kind::list: {
        out += '(';
        for (std::size_t i = 0; i < value.items.size(); ++i) {
            if (i) out += ' ';
            serialize_value(value.items[i], out, false);
        }
        out += ')';
        return;
    }
    }
}

} // namespace

std::string serialize_kqml(const AclMessage& message) {
    if (!valid_atom(message.performative) || message.performative.front() == ':')
        throw InvalidAtom(fmt::format("invalid performative '{}'", message.performative));
    std::set<std::string, std::less<>> seen;
    std::string out = "(" + message.performative;
    for (const auto& parameter : message.parameters) {
        if (parameter.keyword.size() < 2 || parameter.keyword.front() != ':' ||
            !valid_atom(parameter.keyword))
            throw InvalidAtom(fmt::format("invalid keyword '{}'", parameter.keyword));
        if (!seen.insert(parameter.keyword).second)
            throw InvalidAtom(fmt::format("duplicate keyword '{}'", parameter.keyword));
        out += ' ';
        out += parameter.keyword;
        out += ' ';
        serialize_value(parameter.value, out, true);
    }
    out += ')';
    return out;
}

namespace {

json value_to_json(const AclValue& value) {
    switch (value.kind) {
    case AclValue::Kind::atom:
    case AclValue::Kind::quoted:
        return value.text;
    case AclValue::Kind::list: {
        json array = json::array();
        for (const auto& item : value.items) array.push_back(value_to_json(item));
        return array;
    }
    }
    return nullptr;
}

AclValue json_to_value(const json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (valid_atom(s) && s.front() != ':') return AclValue::atom(s);
        return AclValue::quoted(s);
    }
    if (j.is_array()) {
        std::vector<AclValue> items;
        for (const auto& item : j) items.push_back(json_to_value(item));
        return AclValue::list(std::move(items));
    }
    if (j.is_number_integer()) return AclValue::atom(std::to_string(j.get<long long>()));
    if (j.is_number_float()) return AclValue::atom(j.dump());
    if (j.is_boolean()) return AclValue::atom(j.get<bool>() ? "true" : "false");
    throw UnrepresentableValue(
        fmt::format("JSON value {} has no KQML equivalent", j.dump().substr(0, 80)));
}

} // namespace

std::string kqml_to_json(const AclMessage& message) {
    json out;
    out["performative"] = message.performative;
    for (const auto& parameter : message.parameters) {
        std::string key = parameter.keyword.substr(1);
        if (key == "performative" || out.contains(key))
            throw UnrepresentableValue(
                fmt::format("keyword '{}' collides after ':' stripping", parameter.keyword));
        out[key] = value_to_json(parameter.value);
    }
    return out.dump();
}

AclMessage json_to_kqml(const std::string& text) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw SchemaMismatch("input is not a JSON object", "performative");
    if (!parsed.contains("performative") || !parsed["performative"].is_string())
        throw SchemaMismatch("missing \"performative\"", "performative");

    AclMessage message;
    message.performative = parsed["performative"].get<std::string>();
    // nlohmann objects iterate in sorted key order, which is exactly the
    // canonical re-import order.
    for (const auto& [key, value] : parsed.items()) {
        if (key == "performative") continue;
        message.parameters.push_back({":" + key, json_to_value(value)});
    }
    return message;
}

std::optional<StructuredHeader> detect_structured_header(std::string_view message) {
    std::size_t pos = 0;
    // First non-blank line.
    while (pos < message.size()) {
        std::size_t eol = message.find('\n', pos);
        std::string_view line = message.substr(pos, eol == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : eol - pos);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first != std::string_view::npos) {
            if (line[first] != '@') return std::nullopt;
            std::size_t name_start = first + 1;
            std::size_t name_end = name_start;
            while (name_end < line.size() && !is_ws(line[name_end]) &&
                   line[name_end] != ':')
                ++name_end;
            if (name_end == name_start) return std::nullopt;

            StructuredHeader header;
            header.receiver = std::string(line.substr(name_start, name_end - name_start));

            std::size_t rest = name_end;
            if (rest < line.size() && line[rest] == ':') ++rest;
            while (rest < line.size() && is_ws(line[rest])) ++rest;

            std::string body(line.substr(rest));
            if (eol != std::string_view::npos)
                body += std::string(message.substr(eol));

            // A leading CamelCase compound token reads as a performative
            // ("ContextCheck"); a plain capitalized word does not.
            std::size_t token_end = 0;
            while (token_end < body.size() && !is_ws(body[token_end])) ++token_end;
            std::string_view token = std::string_view(body).substr(0, token_end);
            bool inner_capital = false;
            for (std::size_t i = 1; i < token.size(); ++i) {
                if (std::isupper(static_cast<unsigned char>(token[i])) &&
                    std::islower(static_cast<unsigned char>(token[i - 1]))) {
                    inner_capital = true;
                    break;
                }
            }
            bool alnum = !token.empty() &&
                         std::all_of(token.begin(), token.end(), [](char c) {
                             return std::isalnum(static_cast<unsigned char>(c));
                         });
            if (inner_capital && alnum &&
                std::isupper(static_cast<unsigned char>(token.front()))) {
                header.performative_phrase = std::string(token);
                std::size_t after = token_end;
                while (after < body.size() && is_ws(body[after])) ++after;
                header.body = body.substr(after);
            } else {
                header.body = std::move(body);
            }
            return header;
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return std::nullopt;
}

} // namespace autoform
