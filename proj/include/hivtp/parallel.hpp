// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace hivtp {

/// Runs fn(i) for every i in [0, count) on up to `threads` workers
/// (0 = hardware concurrency). Work is handed out by an atomic counter, so
/// callers must write results to slot i rather than append.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// HIVTP_THREADS if set and parseable, else 0 (auto).
unsigned threads_from_env();

}  // namespace hivtp
