#include "autoform/acl.hpp"

#include <benchmark/benchmark.h>

namespace {

const char* kAskOne =
    "(ask-one :sender joe :content (PRICE IBM ?price) :receiver stock-server "
    ":reply-with ibm-stock :language LPROLOG :ontology NYSE-TICKS)";

void BM_ParseKqml(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(autoform::parse_kqml(kAskOne));
}
BENCHMARK(BM_ParseKqml);

void BM_SerializeKqml(benchmark::State& state) {
    auto message = std::get<autoform::AclMessage>(autoform::parse_kqml(kAskOne));
    for (auto _ : state) benchmark::DoNotOptimize(autoform::serialize_kqml(message));
}
BENCHMARK(BM_SerializeKqml);

void BM_JsonBridge(benchmark::State& state) {
    auto message = std::get<autoform::AclMessage>(autoform::parse_kqml(kAskOne));
    for (auto _ : state)
        benchmark::DoNotOptimize(autoform::json_to_kqml(autoform::kqml_to_json(message)));
}
BENCHMARK(BM_JsonBridge);

void BM_DetectHeader(benchmark::State& state) {
    const char* message = "@Emily: ContextCheck re: 1917 community, see attached notes";
    for (auto _ : state)
        benchmark::DoNotOptimize(autoform::detect_structured_header(message));
}
BENCHMARK(BM_DetectHeader);

} // namespace
