// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "hivtp/importance.hpp"
#include "hivtp/pruner.hpp"

namespace hivtp::synth {

struct OracleOptions {
    /// Mutation switch: prefer the higher index on ties. Used to prove the
    /// verification harness notices a broken tie-break.
    bool reverse_tie_break = false;
};

/// Brute-force reference for select_tokens: full sort of each region's
/// (score, index) pairs and a linear scan per window. Shares no code with
/// the pruner.
SelectionResult oracle_prune(const ImportanceScores& scores,
                             const PruneConfig& config,
                             const OracleOptions& options = {});

/// Every pruner invariant checked against `result`; empty when all hold.
std::vector<std::string> check_selection_invariants(const SelectionResult& result,
                                                    const ImportanceScores& scores,
                                                    const PruneConfig& config);

}  // namespace hivtp::synth
