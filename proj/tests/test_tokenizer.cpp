#include "autoform/errors.hpp"
#include "autoform/tokenizer.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace autoform;

TEST_CASE("whitespace tokenizer definitional cases") {
    CHECK(count_tokens("", "whitespace") == 0);
    CHECK(count_tokens("the cat sat", "whitespace") == 3);
    CHECK(count_tokens("  leading and  trailing  ", "whitespace") == 3);
    CHECK(count_tokens("one\ntwo\tthree", "whitespace") == 3);
    CHECK(count_tokens("nbsp separated", "whitespace") == 2);
}

TEST_CASE("count_tokens rejects unknown tokenizers") {
    CHECK_THROWS_AS(count_tokens("abc", "no-such-tokenizer"), UnknownTokenizer);
    CHECK_THROWS_AS(count_tokens("", "no-such-tokenizer"), UnknownTokenizer);
}

TEST_CASE("count_tokens matches the independent whitespace oracle") {
    std::ifstream in(std::string(AUTOFORM_FIXTURES_DIR) + "/book_gutenberg.txt");
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    CHECK(count_tokens(text, "whitespace") == oracles::whitespace_token_oracle(text));

    std::mt19937_64 rng(7);
    static const char alphabet[] = "ab c\nd\te  f";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        std::size_t n = rng() % 64;
        for (std::size_t i = 0; i < n; ++i)
            s.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
        CAPTURE(s);
        CHECK(count_tokens(s, "whitespace") == oracles::whitespace_token_oracle(s));
    }
}

TEST_CASE("count_tokens is pure") {
    std::string text = "pure function check with several tokens";
    auto first = count_tokens(text, "whitespace");
    for (int i = 0; i < 5; ++i) CHECK(count_tokens(text, "whitespace") == first);
}

TEST_CASE("merge-table tokenizer loads and merges") {
    register_merge_table_tokenizer("demo-merges",
                                   std::string(AUTOFORM_FIXTURES_DIR) + "/merges_demo.txt");
    // "the" -> t h e -> th e -> the (two merges collapse it to one symbol)
    CHECK(count_tokens("the", "demo-merges") == 1);
    // "and" -> a n d -> an d -> and
    CHECK(count_tokens("and", "demo-merges") == 1);
    // "xz" has no applicable merges: two symbols
    CHECK(count_tokens("xz", "demo-merges") == 2);
    CHECK(count_tokens("the and", "demo-merges") == 2);
    CHECK(count_tokens("", "demo-merges") == 0);
}
