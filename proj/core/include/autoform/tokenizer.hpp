#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace autoform {

// Counts tokens in `text` with the tokenizer registered under `tokenizer_id`.
// Pure: same inputs give the same count. The empty string counts as 0 tokens
// for every tokenizer. Throws UnknownTokenizer for unregistered ids.
std::size_t count_tokens(std::string_view text, const std::string& tokenizer_id);

// True when `tokenizer_id` is registered.
bool has_tokenizer(const std::string& tokenizer_id);

// Registers a counting function under `id`, replacing any previous one.
void register_tokenizer(const std::string& id,
                        std::function<std::size_t(std::string_view)> count_fn);

// Loads a merge-table subword tokenizer from `path` and registers it under
// `id`. The file holds one merge per line: two symbols separated by a space,
// applied greedily in file order within each whitespace-delimited word.
// Lines starting with '#' are skipped.
void register_merge_table_tokenizer(const std::string& id, const std::string& path);

// Splits on runs of Unicode whitespace (the built-in "whitespace" tokenizer
// uses this). Exposed so callers can reuse the exact same token boundaries.
std::vector<std::string_view> split_whitespace(std::string_view text);

} // namespace autoform
