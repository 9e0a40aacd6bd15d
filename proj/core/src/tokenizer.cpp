#include "autoform/tokenizer.hpp"

#include "autoform/errors.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <utility>

namespace autoform {
namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 code point starting at `i`; advances `i` past it.
// Malformed bytes are treated as Latin-1 so arbitrary input never faults.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if ((c & 0x80u) == 0) {
        len = 1;
    } else if ((c & 0xE0u) == 0xC0u) {
        len = 2; cp = c & 0x1Fu;
    } else if ((c & 0xF0u) == 0xE0u) {
        len = 3; cp = c & 0x0Fu;
    } else if ((c & 0xF8u) == 0xF0u) {
        len = 4; cp = c & 0x07u;
    } else {
        ++i;
        return c;
    }
    if (i + len > s.size()) {
        ++i;
        return c;
    }
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char cont = static_cast<unsigned char>(s[i + k]);
        if ((cont & 0xC0u) != 0x80u) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (cont & 0x3Fu);
    }
    i += len;
    return cp;
}

std::size_t whitespace_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

struct Registry {
    std::shared_mutex mutex;
    std::map<std::string, std::function<std::size_t(std::string_view)>> counters;
};

Registry& registry() {
    static Registry* r = [] {
        auto* reg = new Registry;
        reg->counters.emplace("whitespace", whitespace_count);
        return reg;
    }();
    return *r;
}

} // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    std::size_t token_start = 0;
    bool in_token = false;
    while (i < text.size()) {
        std::size_t at = i;
        char32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            if (in_token) {
                tokens.push_back(text.substr(token_start, at - token_start));
                in_token = false;
            }
        } else if (!in_token) {
            in_token = true;
            token_start = at;
        }
    }
    if (in_token) tokens.push_back(text.substr(token_start));
    return tokens;
}

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_id) {
    if (text.empty()) {
        if (!has_tokenizer(tokenizer_id))
            throw UnknownTokenizer(fmt::format("unknown tokenizer '{}'", tokenizer_id));
        return 0;
    }
    std::function<std::size_t(std::string_view)> fn;
    {
        std::shared_lock lock(registry().mutex);
        auto it = registry().counters.find(tokenizer_id);
        if (it == registry().counters.end())
            throw UnknownTokenizer(fmt::format("unknown tokenizer '{}'", tokenizer_id));
        fn = it->second;
    }
    return fn(text);
}

bool has_tokenizer(const std::string& tokenizer_id) {
    std::shared_lock lock(registry().mutex);
    return registry().counters.count(tokenizer_id) > 0;
}

void register_tokenizer(const std::string& id,
                        std::function<std::size_t(std::string_view)> count_fn) {
    std::unique_lock lock(registry().mutex);
    registry().counters[id] = std::move(count_fn);
}

void register_merge_table_tokenizer(const std::string& id, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open merge table '{}'", path));
    std::vector<std::pair<std::string, std::string>> merges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto space = line.find(' ');
        if (space == std::string::npos || space == 0 || space + 1 >= line.size())
            throw Error(fmt::format("bad merge line '{}' in '{}'", line, path));
        merges.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
    register_tokenizer(id, [merges](std::string_view text) {
        std::size_t total = 0;
        for (auto word : split_whitespace(text)) {
            std::vector<std::string> symbols;
            symbols.reserve(word.size());
            std::size_t i = 0;
            while (i < word.size()) {
                std::size_t at = i;
                decode_utf8(word, i);
                symbols.emplace_back(word.substr(at, i - at));
            }
            for (const auto& [left, right] : merges) {
                for (std::size_t k = 0; k + 1 < symbols.size();) {
                    if (symbols[k] == left && symbols[k + 1] == right) {
                        symbols[k] += symbols[k + 1];
                        symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(k) + 1);
                    } else {
                        ++k;
                    }
                }
            }
            total += symbols.size();
        }
        return total;
    });
}

} // namespace autoform
