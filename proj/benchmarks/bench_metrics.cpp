#include "autoform/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>

namespace {

std::string synthetic_answer(std::size_t words, std::uint64_t seed) {
    static const char* vocab[] = {"harbour", "lantern", "ledger",  "signal",
                                  "granite", "tide",    "keeper",  "voyage",
                                  "cargo",   "weather", "journal", "beacon"};
    std::mt19937_64 rng(seed);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng() % 12];
    }
    return out;
}

void BM_RougeL(benchmark::State& state) {
    std::string candidate = synthetic_answer(static_cast<std::size_t>(state.range(0)), 1);
    std::string reference = synthetic_answer(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(autoform::rouge_l(candidate, reference));
}
BENCHMARK(BM_RougeL)->Arg(8)->Arg(64)->Arg(256);

void BM_ClassifyFormat(benchmark::State& state) {
    std::string text =
        "1. Build the grid.\n2. Apply clue three.\n\n"
        "| House | Lunch |\n|---|---|\n| 1 | Spaghetti |\n\n"
        "FriedRice != Spaghetti AND FriedRice == HouseN+1\n"
        "{\"answer\": \"3\"}\n";
    for (auto _ : state)
        benchmark::DoNotOptimize(autoform::classify_format(text));
}
BENCHMARK(BM_ClassifyFormat);

} // namespace
