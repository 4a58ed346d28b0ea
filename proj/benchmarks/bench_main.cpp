// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "hiprune/oracle.hpp"
#include "hiprune/pruner.hpp"
#include "hiprune/scoring.hpp"
#include "hiprune/synth.hpp"

namespace {

using namespace hiprune;

// CLIP-L style grid with fewer layers and heads to keep setup fast.
const AttentionStack& clip_like_stack() {
    static const AttentionStack stack = [] {
        SynthSpec spec;
        spec.grid = {24, 24};
        spec.layers = 12;
        spec.heads = 4;
        spec.seed = 7;
        spec.cls_token = true;
        spec.object_block = PatchBlock{8, 8, 6, 6};
        spec.object_layers = {4, 8};
        spec.deep_dispersion = true;
        return generate(spec);
    }();
    return stack;
}

const AttentionStack& small_stack() {
    static const AttentionStack stack = [] {
        SynthSpec spec;
        spec.grid = {8, 8};
        spec.layers = 4;
        spec.heads = 2;
        spec.seed = 3;
        spec.object_block = PatchBlock{2, 2, 3, 3};
        spec.object_layers = {1, 3};
        return generate(spec);
    }();
    return stack;
}

void BM_AggregateScores(benchmark::State& state) {
    const auto& stack = clip_like_stack();
    for (auto _ : state) {
        benchmark::DoNotOptimize(aggregate_scores(stack, 5));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(stack.layer_values(5).size_bytes()));
}
BENCHMARK(BM_AggregateScores);

void BM_PruneFromScores(benchmark::State& state) {
    const auto& stack = clip_like_stack();
    const auto object = aggregate_scores(stack, 5);
    const auto last = aggregate_scores(stack, 11);
    HiPruneConfig config;
    config.budget = static_cast<std::uint32_t>(state.range(0));
    config.object_layer = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prune_scores(object, last, stack.grid(), config));
    }
}
BENCHMARK(BM_PruneFromScores)->Arg(64)->Arg(128)->Arg(192);

void BM_PruneEndToEnd(benchmark::State& state) {
    const auto& stack = clip_like_stack();
    HiPruneConfig config;
    config.object_layer = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prune(stack, config));
    }
}
BENCHMARK(BM_PruneEndToEnd);

void BM_OraclePrune(benchmark::State& state) {
    const auto& stack = small_stack();
    HiPruneConfig config;
    config.budget = 20;
    config.alpha = 0.5;
    config.object_layer = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle_prune(stack, nullptr, config));
    }
}
BENCHMARK(BM_OraclePrune);

void BM_RankTrajectory(benchmark::State& state) {
    const auto& stack = clip_like_stack();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rank_trajectory(stack));
    }
}
BENCHMARK(BM_RankTrajectory);

}  // namespace
BENCHMARK_MAIN();
