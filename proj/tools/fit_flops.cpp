// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

// Re-derives the text_tokens value baked into the LLaVA cost presets from the
// published prefill FLOPs of LLaVA-NeXT-7B at four visual-token budgets.

#include <cstdio>

#include "hiprune/costmodel.hpp"

int main() {
    auto spec = *hiprune::cost_preset("llava-next-7b");
    const hiprune::FlopsTarget targets[] = {
        {2880, 40.57e12},
        {640, 10.97e12},
        {320, 6.74e12},
        {160, 4.63e12},
    };
    const auto fit = hiprune::fit_text_tokens(spec, targets);
    spec.text_tokens = fit.text_tokens;
    std::printf("text_tokens=%llu sum_sq_log_err=%.6g max_rel_err=%.4f\n",
                static_cast<unsigned long long>(fit.text_tokens), fit.sum_squared_log_error,
                fit.max_relative_error);
    for (const auto& t : targets) {
        const double estimate = hiprune::prefill_flops(spec, t.visual_tokens);
        std::printf("  %5llu tokens: estimate %.3f T, target %.2f T\n",
                    static_cast<unsigned long long>(t.visual_tokens), estimate / 1e12, t.flops / 1e12);
    }
    std::printf("ratio 2880/160 = %.3f\n", hiprune::flops_ratio(spec, 2880, 160));
    return 0;
}
