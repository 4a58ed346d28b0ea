// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hiprune/attention_store.hpp"
#include "hiprune/pruner.hpp"
#include "hiprune/token_matrix.hpp"

namespace hiprune {

/// Brute-force reference for prune(): same contract, written straight from
/// the set-builder definitions. Scores are recomputed from the raw stack,
/// every membership test counts strictly better tokens, and neighbours come
/// from explicit offset enumeration. O(n^2) per stage; meant for checking.
PruneResult oracle_prune(const AttentionStack& stack, const TokenMatrix* tokens, const HiPruneConfig& config);

}  // namespace hiprune
