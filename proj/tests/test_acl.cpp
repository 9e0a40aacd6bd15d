#include "autoform/acl.hpp"
#include "autoform/errors.hpp"

#include "support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace autoform;
using nlohmann::json;

namespace {

const char* kAskOne =
    "(ask-one\n"
    "  :sender joe\n"
    "  :content (PRICE IBM ?price)\n"
    "  :receiver stock-server\n"
    "  :reply-with ibm-stock\n"
    "  :language LPROLOG\n"
    "  :ontology NYSE-TICKS)";

AclMessage parse_ok(std::string_view text) {
    auto result = parse_kqml(text);
    REQUIRE_MESSAGE(std::holds_alternative<AclMessage>(result),
                    std::get<KqmlError>(result).describe());
    return std::get<AclMessage>(result);
}

KqmlError parse_err(std::string_view text) {
    auto result = parse_kqml(text);
    REQUIRE(std::holds_alternative<KqmlError>(result));
    return std::get<KqmlError>(result);
}

} // namespace

TEST_CASE("the ask-one block parses to six parameters with nested content") {
    AclMessage message = parse_ok(kAskOne);
    CHECK(message.performative == "ask-one");
    REQUIRE(message.parameters.size() == 6);
    CHECK(message.parameters[0].keyword == ":sender");
    CHECK(message.parameters[0].value == AclValue::atom("joe"));

    const AclValue* content = message.find(":content");
    REQUIRE(content != nullptr);
    REQUIRE(content->kind == AclValue::Kind::list);
    REQUIRE(content->items.size() == 3);
    CHECK(content->items[0] == AclValue::atom("PRICE"));
    CHECK(content->items[1] == AclValue::atom("IBM"));
    CHECK(content->items[2] == AclValue::atom("?price"));

    CHECK(message.parameters[5].keyword == ":ontology");
    CHECK(message.parameters[5].value == AclValue::atom("NYSE-TICKS"));

    // Round trip through the canonical form.
    std::string canonical = serialize_kqml(message);
    CHECK(parse_ok(canonical) == message);
    // Parse-serialize idempotence on canonical text.
    CHECK(serialize_kqml(parse_ok(canonical)) == canonical);
}

TEST_CASE("minimal well-formed messages") {
    AclMessage tell = parse_ok("(tell :content \"done\" :receiver a)");
    CHECK(tell.performative == "tell");
    REQUIRE(tell.parameters.size() == 2);
    CHECK(tell.parameters[0].value == AclValue::quoted("done"));

    AclMessage bare = parse_ok("(tell)");
    CHECK(bare.performative == "tell");
    CHECK(bare.parameters.empty());
    CHECK(serialize_kqml(bare) == "(tell)");
    CHECK(parse_ok("(tell)") == bare);
}

TEST_CASE("whitespace between tokens is insignificant") {
    AclMessage compact = parse_ok("(tell :a x :b (y z))");
    AclMessage spread = parse_ok("(  tell\n\n:a\n\tx\r\n :b ( y\n z )  )");
    CHECK(compact == spread);
}

TEST_CASE("positioned parse errors") {
    CHECK(parse_err("(:content x)").kind == KqmlError::Kind::missing_performative);
    CHECK(parse_err("").kind == KqmlError::Kind::unbalanced_parens);
    CHECK(parse_err("no parens at all").kind == KqmlError::Kind::unbalanced_parens);
    CHECK(parse_err("(tell :a").kind == KqmlError::Kind::unbalanced_parens);
    CHECK(parse_err("(tell :a (x y").kind == KqmlError::Kind::unbalanced_parens);
    CHECK(parse_err("(tell :a)").kind == KqmlError::Kind::dangling_keyword);
    CHECK(parse_err("(tell :a :b x)").kind == KqmlError::Kind::dangling_keyword);
    CHECK(parse_err("(tell :a x :a y)").kind == KqmlError::Kind::duplicate_keyword);
    CHECK(parse_err("(tell :a \"unclosed)").kind == KqmlError::Kind::unterminated_string);
    CHECK(parse_err("(tell :a x) trailing").kind == KqmlError::Kind::trailing_content);
    CHECK(parse_err("(tell x)").kind == KqmlError::Kind::expected_keyword);
    CHECK(parse_err("()").kind == KqmlError::Kind::missing_performative);

    KqmlError err = parse_err("(tell :dup x :dup y)");
    CHECK(err.position == std::string_view("(tell :dup x ").size());
}

TEST_CASE("serializer escapes quotes and backslashes") {
    AclMessage message;
    message.performative = "tell";
    message.parameters.push_back({":content", AclValue::quoted("he said \"hi\" \\ bye")});
    std::string text = serialize_kqml(message);
    CHECK(text == "(tell :content \"he said \\\"hi\\\" \\\\ bye\")");
    CHECK(parse_ok(text) == message);
}

TEST_CASE("serializer rejects invalid atoms") {
    AclMessage message;
    message.performative = "tell";
    message.parameters.push_back({":a", AclValue::atom("has space")});
    CHECK_THROWS_AS(serialize_kqml(message), InvalidAtom);

    message.parameters[0].value = AclValue::atom("");
    CHECK_THROWS_AS(serialize_kqml(message), InvalidAtom);

    message.parameters[0].value = AclValue::atom(":looks-like-keyword");
    CHECK_THROWS_AS(serialize_kqml(message), InvalidAtom);

    AclMessage bad_performative;
    bad_performative.performative = "has(paren";
    CHECK_THROWS_AS(serialize_kqml(bad_performative), InvalidAtom);
}

TEST_CASE("randomized round-trip over generated messages") {
    oracles::KqmlGenerator gen(99);
    for (int trial = 0; trial < 500; ++trial) {
        AclMessage message = gen.message();
        std::string text = serialize_kqml(message);
        CAPTURE(text);
        AclMessage reparsed = parse_ok(text);
        CHECK(reparsed == message);
        CHECK(serialize_kqml(reparsed) == text);
    }
}

TEST_CASE("kqml_to_json maps the documented shape") {
    AclMessage tell = parse_ok("(tell :content \"x\" :receiver a)");
    json mapped = json::parse(kqml_to_json(tell));
    CHECK(mapped ==
          json{{"performative", "tell"}, {"content", "x"}, {"receiver", "a"}});

    json ask = json::parse(kqml_to_json(parse_ok(kAskOne)));
    CHECK(ask["performative"] == "ask-one");
    CHECK(ask["content"] == json::array({"PRICE", "IBM", "?price"}));
    CHECK(ask["sender"] == "joe");
    CHECK(ask["ontology"] == "NYSE-TICKS");
}

TEST_CASE("json_to_kqml requires a performative") {
    CHECK_THROWS_AS(json_to_kqml(R"({"content":"x"})"), SchemaMismatch);
    CHECK_THROWS_AS(json_to_kqml("[1,2]"), SchemaMismatch);
    CHECK_THROWS_AS(json_to_kqml("not json"), SchemaMismatch);
}

TEST_CASE("json bridge round-trips modulo canonical parameter order") {
    AclMessage ask = parse_ok(kAskOne);
    AclMessage back = json_to_kqml(kqml_to_json(ask));
    CHECK(back == ask.canonicalized());

    oracles::KqmlGenerator gen(123);
    for (int trial = 0; trial < 300; ++trial) {
        AclMessage message = gen.message();
        AclMessage bridged = json_to_kqml(kqml_to_json(message));
        CAPTURE(serialize_kqml(message));
        CHECK(bridged == message.canonicalized());
    }
}

TEST_CASE("keyword collision after stripping is unrepresentable") {
    AclMessage message;
    message.performative = "tell";
    message.parameters.push_back({":performative", AclValue::atom("x")});
    CHECK_THROWS_AS(kqml_to_json(message), UnrepresentableValue);
}

TEST_CASE("fuzzing arbitrary bytes yields messages or positioned errors") {
    std::mt19937_64 rng(2024);
    const char alphabet[] = "():\"\\ abcdef\n\t?-";
    for (int trial = 0; trial < 5000; ++trial) {
        std::string input;
        std::size_t n = rng() % 64;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 8 == 0)
                input.push_back(static_cast<char>(rng() % 256));
            else
                input.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
        }
        auto result = parse_kqml(input); // must not crash or throw
        if (auto* err = std::get_if<KqmlError>(&result))
            CHECK(err->position <= input.size());
    }
    // Pathological nesting depth must not overflow the stack.
    std::string deep = "(tell :a " + std::string(200000, '(');
    auto result = parse_kqml(deep);
    CHECK(std::holds_alternative<KqmlError>(result));
}

TEST_CASE("structured header detection") {
    SUBCASE("plain request header") {
        auto header = detect_structured_header(
            "@Fiona: Requesting information on the designer of a 1917 Progressive Era "
            "community.");
        REQUIRE(header.has_value());
        CHECK(header->receiver == "Fiona");
        CHECK(header->performative_phrase.empty());
        CHECK(header->body.rfind("Requesting information", 0) == 0);
    }
    SUBCASE("verb-phrase performative") {
        auto header = detect_structured_header("@Emily: ContextCheck re: 1917 community");
        REQUIRE(header.has_value());
        CHECK(header->receiver == "Emily");
        CHECK(header->performative_phrase == "ContextCheck");
        CHECK(header->body == "re: 1917 community");
    }
    SUBCASE("no header") {
        CHECK_FALSE(detect_structured_header("Hello everyone, let us begin.").has_value());
        CHECK_FALSE(detect_structured_header("").has_value());
        CHECK_FALSE(detect_structured_header("@ lone at sign").has_value());
    }
    SUBCASE("leading blank lines are skipped") {
        auto header = detect_structured_header("\n   \n@Fiona Requesting data");
        REQUIRE(header.has_value());
        CHECK(header->receiver == "Fiona");
    }
    SUBCASE("multi-line body is preserved") {
        auto header = detect_structured_header("@Emily: line one\nline two");
        REQUIRE(header.has_value());
        CHECK(header->body == "line one\nline two");
    }
}
