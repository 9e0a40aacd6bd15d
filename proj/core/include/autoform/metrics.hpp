#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace autoform {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct RunAggregate {
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t n = 0;
};

// Reasoning/communication formats that can appear in a response.
enum class FormatLabel {
    math_equation,
    unordered_list,
    ordered_list,
    markdown_table,
    multi_level_list,
    logical_expression,
    json,
    code_or_pseudocode,
    natural_language,
    other,
};

std::string to_string(FormatLabel label);
FormatLabel format_label_from_string(const std::string& s);

struct FormatTally {
    std::map<FormatLabel, std::size_t> counts;
};

// Lowercases and splits on runs of non-alphanumeric characters.
std::vector<std::string> rouge_tokenize(std::string_view text);

// Longest-common-subsequence length; symmetric, bounded by min(|a|, |b|).
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// LCS-based similarity of the full token sequences. P = LCS/|candidate|,
// R = LCS/|reference| (0 when the respective side is empty),
// F1 = 2PR/(P+R) or 0.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// Signed percentage change of `treatment_mean` against `baseline_mean`:
// 100 * (treatment - baseline) / baseline. Throws ZeroBaseline.
double delta_tokens(double baseline_mean, double treatment_mean);

// Mean and sample standard deviation (n-1 denominator, 0 for a single
// value). Throws EmptyInput.
RunAggregate aggregate_runs(const std::vector<double>& values);

// Multi-label detection of the formats present in a response. Always returns
// at least one label; natural_language when nothing structured is found.
std::vector<FormatLabel> classify_format(std::string_view text);

void tally_formats(FormatTally& tally, std::string_view text);

// --- report emitters ---

struct DialogueMetricsRow {
    std::string setting; // e.g. backend pairing or strategy name
    double rouge_l = 0.0;
    double mean_tokens = 0.0;
    bool has_delta = false;
    double delta_pct = 0.0; // vs the baseline row, when present
};

// Markdown table with RougeL / # Tokens / dTokens columns (RougeL to two
// decimals, percentages to one).
std::string render_dialogue_table_markdown(const std::vector<DialogueMetricsRow>& rows);

// Same rows at full precision.
std::string render_dialogue_table_csv(const std::vector<DialogueMetricsRow>& rows);

struct AccuracyRow {
    std::string setting;
    double mean = 0.0;
    double std_dev = 0.0;
};

std::string render_accuracy_table_markdown(const std::vector<AccuracyRow>& rows);
std::string render_accuracy_table_csv(const std::vector<AccuracyRow>& rows);

} // namespace autoform
