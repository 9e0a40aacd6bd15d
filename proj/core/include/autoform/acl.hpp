#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace autoform {

// One element of a KQML-style s-expression: a bare token, a quoted string,
// or a nested list.
struct AclValue {
    enum class Kind { atom, quoted, list };

    Kind kind = Kind::atom;
    std::string text;            // atom token or quoted content (unescaped)
    std::vector<AclValue> items; // list elements

    static AclValue atom(std::string t);
    static AclValue quoted(std::string t);
    static AclValue list(std::vector<AclValue> items);

    bool operator==(const AclValue& other) const;
};

struct AclParameter {
    std::string keyword; // begins with ':'
    AclValue value;

    bool operator==(const AclParameter& other) const = default;
};

struct AclMessage {
    std::string performative;
    std::vector<AclParameter> parameters;

    bool operator==(const AclMessage& other) const = default;

    const AclValue* find(std::string_view keyword) const;
    // Copy with parameters sorted by keyword; the equality used by the JSON
    // bridge, which re-imports keys in canonical order.
    AclMessage canonicalized() const;
};

// Positioned parse failure. `position` is a byte offset into the input.
struct KqmlError {
    enum class Kind {
        unbalanced_parens,
        missing_performative,
        dangling_keyword,
        duplicate_keyword,
        unterminated_string,
        expected_keyword,
        trailing_content,
    };

    Kind kind = Kind::unbalanced_parens;
    std::size_t position = 0;

    std::string describe() const;
};

using KqmlParseResult = std::variant<AclMessage, KqmlError>;

// Parses one KQML message. Whitespace (including newlines) between tokens is
// insignificant. Total over arbitrary bytes: always returns a message or a
// positioned error, never throws.
KqmlParseResult parse_kqml(std::string_view text) noexcept;

// Canonical text form: single spaces between tokens, quoted strings escaped
// with backslash for '"' and '\'. parse_kqml(serialize_kqml(m)) == m.
// Throws InvalidAtom when a token violates the atom rules.
std::string serialize_kqml(const AclMessage& message);

// Flat JSON object: {"performative": ..., "<keyword-minus-colon>": ...}.
// Lists become arrays, atoms and quoted values become strings.
// Throws UnrepresentableValue when a stripped keyword collides.
std::string kqml_to_json(const AclMessage& message);

// Inverse bridge. Strings that are valid atom tokens come back as atoms,
// anything else as quoted values; keys re-import in sorted order after the
// performative. Throws SchemaMismatch when "performative" is absent or the
// input is not a JSON object.
AclMessage json_to_kqml(const std::string& text);

// The "@Receiver Performative: content" convention that shows up in
// structured dialogue turns. `performative_phrase` is filled only when the
// token after the receiver looks like a compound verb phrase (inner capital),
// e.g. "ContextCheck".
struct StructuredHeader {
    std::string receiver;
    std::string performative_phrase;
    std::string body;
};

std::optional<StructuredHeader> detect_structured_header(std::string_view message);

} // namespace autoform
