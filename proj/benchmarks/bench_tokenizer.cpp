#include "autoform/tokenizer.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>

namespace {

std::string paragraph(std::size_t words) {
    static const char* vocab[] = {"the",  "quick",  "harbour", "keeps", "its",
                                  "tide", "tables", "under",   "glass", "covers"};
    std::mt19937_64 rng(3);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng() % 10];
    }
    return out;
}

void BM_CountTokensWhitespace(benchmark::State& state) {
    std::string text = paragraph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(autoform::count_tokens(text, "whitespace"));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_CountTokensWhitespace)->Arg(100)->Arg(10000);

} // namespace
