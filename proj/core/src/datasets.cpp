#include "autoform/datasets.hpp"

#include "autoform/errors.hpp"
#include "autoform/tokenizer.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <set>

namespace autoform {

using nlohmann::json;

namespace {

struct KindName {
    TaskKind kind;
    const char* name;
};

constexpr std::array<KindName, 8> kKindNames{{
    {TaskKind::logic_grid, "logic_grid"},
    {TaskKind::coin_flip, "coin_flip"},
    {TaskKind::info_essentiality, "info_essentiality"},
    {TaskKind::mm_qa, "mm_qa"},
    {TaskKind::aqua, "aqua"},
    {TaskKind::hotpot_qa, "hotpot_qa"},
    {TaskKind::wiki_hop, "wiki_hop"},
    {TaskKind::narrative_qa, "narrative_qa"},
}};

} // namespace

std::string to_string(TaskKind kind) {
    for (const auto& entry : kKindNames)
        if (entry.kind == kind) return entry.name;
    return "coin_flip";
}

TaskKind task_kind_from_string(const std::string& s) {
    for (const auto& entry : kKindNames)
        if (s == entry.name) return entry.kind;
    throw Error(fmt::format("unknown task kind '{}'", s));
}

std::string to_string(MarkerKind kind) {
    switch (kind) {
    case MarkerKind::the_answer_is: return "the_answer_is";
    case MarkerKind::answer_colon: return "answer_colon";
    case MarkerKind::correct_option_is: return "correct_option_is";
    case MarkerKind::tagged_A: return "tagged_A";
    }
    return "the_answer_is";
}

MarkerKind marker_kind_from_string(const std::string& s) {
    if (s == "the_answer_is") return MarkerKind::the_answer_is;
    if (s == "answer_colon") return MarkerKind::answer_colon;
    if (s == "correct_option_is") return MarkerKind::correct_option_is;
    if (s == "tagged_A") return MarkerKind::tagged_A;
    throw Error(fmt::format("unknown marker kind '{}'", s));
}

std::string to_string(ValueDomain domain) {
    switch (domain) {
    case ValueDomain::yes_no: return "yes_no";
    case ValueDomain::integer: return "integer";
    case ValueDomain::capital_letter: return "capital_letter";
    case ValueDomain::free_text: return "free_text";
    }
    return "free_text";
}

ValueDomain value_domain_from_string(const std::string& s) {
    if (s == "yes_no") return ValueDomain::yes_no;
    if (s == "integer") return ValueDomain::integer;
    if (s == "capital_letter") return ValueDomain::capital_letter;
    if (s == "free_text") return ValueDomain::free_text;
    throw Error(fmt::format("unknown value domain '{}'", s));
}

AnswerSpec default_answer_spec(TaskKind kind) {
    switch (kind) {
    case TaskKind::logic_grid: return {MarkerKind::the_answer_is, ValueDomain::integer};
    case TaskKind::coin_flip: return {MarkerKind::the_answer_is, ValueDomain::yes_no};
    case TaskKind::info_essentiality: return {MarkerKind::answer_colon, ValueDomain::integer};
    case TaskKind::mm_qa: return {MarkerKind::correct_option_is, ValueDomain::integer};
    case TaskKind::aqua: return {MarkerKind::answer_colon, ValueDomain::capital_letter};
    case TaskKind::hotpot_qa:
    case TaskKind::wiki_hop:
    case TaskKind::narrative_qa: return {MarkerKind::tagged_A, ValueDomain::free_text};
    }
    return {MarkerKind::the_answer_is, ValueDomain::free_text};
}

bool answer_spec_consistent(TaskKind kind, const AnswerSpec& spec) {
    AnswerSpec expected = default_answer_spec(kind);
    return expected.marker_kind == spec.marker_kind &&
           expected.value_domain == spec.value_domain;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::vector<std::size_t> seeded_sample_indices(std::size_t n, std::size_t k,
                                               std::uint64_t seed) {
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ull);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
    indices.resize(std::min(k, n));
    return indices;
}

namespace {

// Deterministic Fisher-Yates using raw generator output; avoids the
// implementation-defined behavior of std::shuffle / distributions.
template <typename T>
void seeded_shuffle(std::vector<T>& values, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(values[i - 1], values[j]);
    }
}

std::uint64_t split_seed(const TaskInstance& instance, std::uint64_t seed) {
    return fnv1a64(instance.id) ^ (seed * 0x9E3779B97F4A7C15ull);
}

TaskInstance parse_instance(const json& object, TaskKind expected_kind,
                            std::size_t line_no) {
    auto require = [&](const char* field) -> const json& {
        if (!object.contains(field))
            throw SchemaMismatch(
                fmt::format("line {}: missing field '{}'", line_no, field), field,
                line_no);
        return object.at(field);
    };

    TaskInstance instance;
    try {
        instance.id = require("id").get<std::string>();
        instance.task_kind = task_kind_from_string(require("task_kind").get<std::string>());
        instance.input_text = require("input_text").get<std::string>();
        for (const auto& seg : require("context_segments")) {
            ContextSegment segment;
            segment.segment_id = seg.at("segment_id").get<std::string>();
            segment.text = seg.at("text").get<std::string>();
            segment.is_supporting = seg.at("is_supporting").get<bool>();
            instance.context_segments.push_back(std::move(segment));
        }
        instance.gold_answers = require("gold_answers").get<std::vector<std::string>>();
        const auto& spec = require("answer_spec");
        instance.answer_spec.marker_kind =
            marker_kind_from_string(spec.at("marker_kind").get<std::string>());
        instance.answer_spec.value_domain =
            value_domain_from_string(spec.at("value_domain").get<std::string>());
    } catch (const json::exception& e) {
        throw SchemaMismatch(fmt::format("line {}: {}", line_no, e.what()), "", line_no);
    }

    if (instance.task_kind != expected_kind)
        throw SchemaMismatch(
            fmt::format("line {}: task_kind '{}' does not match requested '{}'", line_no,
                        to_string(instance.task_kind), to_string(expected_kind)),
            "task_kind", line_no);
    if (instance.gold_answers.empty())
        throw SchemaMismatch(fmt::format("line {}: gold_answers is empty", line_no),
                             "gold_answers", line_no);
    std::set<std::string> seen;
    for (const auto& segment : instance.context_segments)
        if (!seen.insert(segment.segment_id).second)
            throw SchemaMismatch(
                fmt::format("line {}: duplicate segment_id '{}'", line_no,
                            segment.segment_id),
                "segment_id", line_no);
    if (!answer_spec_consistent(instance.task_kind, instance.answer_spec))
        throw SchemaMismatch(
            fmt::format("line {}: answer_spec inconsistent with task_kind '{}'", line_no,
                        to_string(instance.task_kind)),
            "answer_spec", line_no);
    return instance;
}

} // namespace

TaskSet load_task_set(const std::string& path, TaskKind task_kind) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open task file '{}'", path));

    TaskSet set;
    set.name = to_string(task_kind);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json object = json::parse(line, nullptr, false);
        if (object.is_discarded() || !object.is_object())
            throw ParseError(fmt::format("line {}: not a JSON object", line_no), line_no);
        set.instances.push_back(parse_instance(object, task_kind, line_no));
    }
    set.declared_count = set.instances.size();

    std::ifstream manifest_in(path + ".manifest.json");
    if (manifest_in) {
        json manifest = json::parse(manifest_in, nullptr, false);
        if (!manifest.is_discarded() && manifest.is_object()) {
            if (manifest.contains("name")) set.name = manifest["name"].get<std::string>();
            if (manifest.contains("declared_count")) {
                set.declared_count = manifest["declared_count"].get<std::size_t>();
                if (set.declared_count != set.instances.size())
                    throw SchemaMismatch(
                        fmt::format("manifest declares {} instances, file holds {}",
                                    set.declared_count, set.instances.size()),
                        "declared_count");
            }
        }
    }
    return set;
}

std::vector<ContextShare> split_contexts_random(const TaskInstance& instance,
                                                std::size_t n_agents,
                                                std::uint64_t seed) {
    if (instance.context_segments.empty())
        throw NoSegments(fmt::format("instance '{}' has no context segments", instance.id));
    if (n_agents < 2) throw Error("need at least 2 agents");

    std::vector<std::string> ids;
    ids.reserve(instance.context_segments.size());
    for (const auto& segment : instance.context_segments) ids.push_back(segment.segment_id);
    seeded_shuffle(ids, split_seed(instance, seed));

    std::vector<ContextShare> shares(n_agents);
    for (std::size_t i = 0; i < shares.size(); ++i) shares[i].agent_index = i;
    for (std::size_t i = 0; i < ids.size(); ++i)
        shares[i % n_agents].segments.push_back(std::move(ids[i]));
    return shares;
}

std::vector<ContextShare> split_supporting_facts(const TaskInstance& instance,
                                                 std::uint64_t seed,
                                                 std::size_t n_agents) {
    std::vector<std::string> supporting, filler;
    for (const auto& segment : instance.context_segments)
        (segment.is_supporting ? supporting : filler).push_back(segment.segment_id);
    if (supporting.size() < n_agents)
        throw InsufficientSupport(fmt::format(
            "instance '{}' has {} supporting segments, need at least {}", instance.id,
            supporting.size(), n_agents));

    std::uint64_t base = split_seed(instance, seed);
    seeded_shuffle(supporting, base);
    seeded_shuffle(filler, base ^ 0xA5A5A5A5A5A5A5A5ull);

    std::vector<ContextShare> shares(n_agents);
    for (std::size_t i = 0; i < shares.size(); ++i) shares[i].agent_index = i;
    for (std::size_t i = 0; i < supporting.size(); ++i)
        shares[i % n_agents].segments.push_back(std::move(supporting[i]));
    for (std::size_t i = 0; i < filler.size(); ++i)
        shares[i % n_agents].segments.push_back(std::move(filler[i]));
    return shares;
}

std::pair<std::string, std::string> bisect_book(const std::string& text,
                                                const std::string& tokenizer_id,
                                                std::size_t per_half_limit) {
    if (per_half_limit == 0) throw Error("per_half_limit must be positive");
    std::size_t total = count_tokens(text, tokenizer_id);
    if (total > 2 * per_half_limit)
        throw OverBudget(fmt::format("{} tokens exceed twice the per-half limit {}", total,
                                     per_half_limit));

    // Candidate split points are starts of whitespace-delimited tokens, so
    // slicing never severs a word and concatenation reproduces the input.
    auto tokens = split_whitespace(text);
    std::vector<std::size_t> boundaries{0};
    for (const auto& token : tokens) {
        std::size_t offset = static_cast<std::size_t>(token.data() - text.data());
        if (offset != 0) boundaries.push_back(offset);
    }
    boundaries.push_back(text.size());

    auto imbalance = [&](std::size_t cut) {
        std::size_t left = count_tokens(std::string_view(text).substr(0, cut), tokenizer_id);
        std::size_t right = count_tokens(std::string_view(text).substr(cut), tokenizer_id);
        return std::make_tuple(left > right ? left - right : right - left, left, right);
    };

    // Token counts of prefixes grow with the cut position for tokenizers that
    // work per whitespace word, so a binary search lands near the midpoint;
    // a small neighborhood scan then picks the true minimum.
    std::size_t lo = 0, hi = boundaries.size() - 1;
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        std::size_t left =
            count_tokens(std::string_view(text).substr(0, boundaries[mid]), tokenizer_id);
        if (left * 2 < total)
            lo = mid;
        else
            hi = mid;
    }
    std::size_t best = boundaries[lo];
    auto [best_gap, best_left, best_right] = imbalance(best);
    std::size_t from = lo > 4 ? lo - 4 : 0;
    std::size_t to = std::min(boundaries.size() - 1, lo + 4);
    for (std::size_t i = from; i <= to; ++i) {
        auto [gap, left, right] = imbalance(boundaries[i]);
        if (gap < best_gap) {
            best_gap = gap;
            best = boundaries[i];
            best_left = left;
            best_right = right;
        }
    }

    if (best_left > per_half_limit || best_right > per_half_limit)
        throw OverBudget(fmt::format(
            "best split gives halves of {} and {} tokens, limit {}", best_left,
            best_right, per_half_limit));
    return {text.substr(0, best), text.substr(best)};
}

bool admit_book(const std::string& text, const std::string& tokenizer_id,
                std::size_t max_tokens) {
    static constexpr std::string_view kPrefix = "Project Gutenberg's";
    if (text.size() < kPrefix.size() || std::string_view(text).substr(0, kPrefix.size()) != kPrefix)
        return false;
    return count_tokens(text, tokenizer_id) <= max_tokens;
}

} // namespace autoform
