#include "autoform/errors.hpp"
#include "autoform/metrics.hpp"

#include "support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

using namespace autoform;
using nlohmann::json;

TEST_CASE("rouge_l basics") {
    auto identity = rouge_l("the cat sat", "the cat sat");
    CHECK(identity.precision == doctest::Approx(1.0));
    CHECK(identity.recall == doctest::Approx(1.0));
    CHECK(identity.f1 == doctest::Approx(1.0));

    auto empty_candidate = rouge_l("", "any reference");
    CHECK(empty_candidate.precision == 0.0);
    CHECK(empty_candidate.recall == 0.0);
    CHECK(empty_candidate.f1 == 0.0);

    auto empty_reference = rouge_l("candidate", "");
    CHECK(empty_reference.f1 == 0.0);

    // Tokenization lowercases and splits on non-alphanumerics.
    auto punct = rouge_l("The CAT, sat!", "the cat sat");
    CHECK(punct.f1 == doctest::Approx(1.0));
}

TEST_CASE("rouge_l matches the worked police example") {
    auto score = rouge_l("police killed the gunman", "police kill the gunman");
    CHECK(score.precision == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(score.recall == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(score.f1 == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("lcs_length against the exhaustive oracle") {
    std::mt19937_64 rng(5);
    const std::string vocab[] = {"a", "b", "c", "d"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> a, b;
        std::size_t la = rng() % 13, lb = rng() % 13;
        for (std::size_t i = 0; i < la; ++i) a.push_back(vocab[rng() % 4]);
        for (std::size_t i = 0; i < lb; ++i) b.push_back(vocab[rng() % 4]);
        std::size_t got = lcs_length(a, b);
        std::size_t expected = oracles::lcs_bruteforce(a, b);
        CAPTURE(trial);
        CHECK(got == expected);
        CHECK(got == lcs_length(b, a)); // symmetric
        CHECK(got <= std::min(a.size(), b.size()));
    }
}

TEST_CASE("lcs triangle property under single deletion") {
    std::mt19937_64 rng(6);
    const std::string vocab[] = {"x", "y", "z"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> a, b;
        std::size_t la = 1 + rng() % 10, lb = 1 + rng() % 10;
        for (std::size_t i = 0; i < la; ++i) a.push_back(vocab[rng() % 3]);
        for (std::size_t i = 0; i < lb; ++i) b.push_back(vocab[rng() % 3]);
        std::size_t full = lcs_length(a, b);
        std::vector<std::string> b_smaller = b;
        b_smaller.erase(b_smaller.begin() + static_cast<std::ptrdiff_t>(rng() % b.size()));
        std::size_t smaller = lcs_length(a, b_smaller);
        CHECK(full >= smaller);
        CHECK(smaller + 1 >= full);
    }
}

TEST_CASE("f1 symmetry") {
    std::mt19937_64 rng(8);
    const std::string words[] = {"red", "green", "blue", "north", "south"};
    for (int trial = 0; trial < 100; ++trial) {
        std::string a, b;
        for (std::size_t i = 0; i < rng() % 10; ++i) a += words[rng() % 5] + " ";
        for (std::size_t i = 0; i < rng() % 10; ++i) b += words[rng() % 5] + " ";
        CHECK(rouge_l(a, b).f1 == doctest::Approx(rouge_l(b, a).f1).epsilon(1e-12));
    }
}

TEST_CASE("delta_tokens reproduces the reported reduction cells") {
    // Reported percentages are rounded to one decimal: 0.05 pp absolute slack.
    CHECK(std::abs(delta_tokens(345.5, 94.3) - (-72.7)) <= 0.05);
    CHECK(std::abs(delta_tokens(237.5, 146.2) - (-38.4)) <= 0.05);
    CHECK(delta_tokens(100.0, 100.0) == doctest::Approx(0.0));
    CHECK(delta_tokens(100.0, 125.0) == doctest::Approx(25.0));
    CHECK_THROWS_AS(delta_tokens(0.0, 10.0), ZeroBaseline);
}

TEST_CASE("delta sign follows the difference") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        double baseline = 1.0 + static_cast<double>(rng() % 1000);
        double treatment = 1.0 + static_cast<double>(rng() % 1000);
        double delta = delta_tokens(baseline, treatment);
        if (treatment > baseline) CHECK(delta > 0.0);
        if (treatment < baseline) CHECK(delta < 0.0);
        CHECK(delta_tokens(baseline, baseline) == doctest::Approx(0.0));
    }
}

TEST_CASE("aggregate_runs") {
    auto single = aggregate_runs({0.5});
    CHECK(single.mean == doctest::Approx(0.5));
    CHECK(single.std_dev == 0.0);
    CHECK(single.n == 1);

    auto spread = aggregate_runs({0.4, 0.5, 0.6});
    CHECK(spread.mean == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(spread.std_dev == doctest::Approx(0.1).epsilon(1e-9));

    auto constant = aggregate_runs({1.0, 1.0, 1.0});
    CHECK(constant.mean == doctest::Approx(1.0));
    CHECK(constant.std_dev == doctest::Approx(0.0));

    CHECK_THROWS_AS(aggregate_runs({}), EmptyInput);
}

TEST_CASE("aggregate_runs matches the two-pass oracle on random vectors") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> values;
        std::size_t n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i)
            values.push_back(static_cast<double>(rng() % 10000) / 10000.0);
        auto aggregate = aggregate_runs(values);
        auto [mean, stdev] = oracles::mean_std_twopass(values);
        CHECK(aggregate.mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(aggregate.std_dev == doctest::Approx(stdev).epsilon(1e-12));
    }
}

TEST_CASE("classify_format spec examples") {
    auto table = classify_format("| House | Pet |\n|---|---|\n| 1 | Cat |");
    CHECK(std::find(table.begin(), table.end(), FormatLabel::markdown_table) !=
          table.end());

    auto ordered = classify_format("1. flip\n2. flip again");
    CHECK(std::find(ordered.begin(), ordered.end(), FormatLabel::ordered_list) !=
          ordered.end());

    auto prose = classify_format(
        "The keeper walked along the quay and noted the weather in his journal.");
    CHECK(prose == std::vector<FormatLabel>{FormatLabel::natural_language});
}

TEST_CASE("classify_format always returns at least one label") {
    std::mt19937_64 rng(12);
    const char alphabet[] = "ab|.-=1{}\n ";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        for (std::size_t i = 0; i < rng() % 50; ++i)
            s.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
        CHECK(!classify_format(s).empty());
    }
}

TEST_CASE("classifier agrees with the hand-labeled fixture set per label") {
    std::ifstream in(std::string(AUTOFORM_FIXTURES_DIR) + "/format_cases.json");
    REQUIRE(in.good());
    json cases = json::parse(in);
    REQUIRE(cases.at("cases").size() == 40);

    std::map<FormatLabel, std::size_t> agreement;
    std::size_t total = cases["cases"].size();
    for (const auto& c : cases["cases"]) {
        auto predicted = classify_format(c.at("text").get<std::string>());
        std::set<FormatLabel> predicted_set(predicted.begin(), predicted.end());
        std::set<FormatLabel> truth;
        for (const auto& label : c.at("labels"))
            truth.insert(format_label_from_string(label.get<std::string>()));
        for (int raw = 0; raw <= static_cast<int>(FormatLabel::other); ++raw) {
            auto label = static_cast<FormatLabel>(raw);
            if (predicted_set.count(label) == truth.count(label)) ++agreement[label];
        }
    }
    for (const auto& [label, agreed] : agreement) {
        CAPTURE(to_string(label));
        CHECK(static_cast<double>(agreed) / static_cast<double>(total) >= 0.90);
    }
}

TEST_CASE("dialogue table renderers") {
    std::vector<DialogueMetricsRow> rows{
        {"GPT-4 + GPT-3.5", 0.63, 345.5, false, 0.0},
        {"GPT-4 + GPT-3.5 +AutoForm", 0.70, 94.3, true, -72.7},
    };
    std::string markdown = render_dialogue_table_markdown(rows);
    CHECK(markdown.find("| RougeL | # Tokens | dTokens |") != std::string::npos);
    CHECK(markdown.find("0.63") != std::string::npos);
    CHECK(markdown.find("345.5") != std::string::npos);
    CHECK(markdown.find("-72.7%") != std::string::npos);

    std::string csv = render_dialogue_table_csv(rows);
    CHECK(csv.find("setting,rouge_l,mean_tokens,delta_pct") != std::string::npos);
    CHECK(csv.find("-72.7") != std::string::npos);
}
