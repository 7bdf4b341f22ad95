#pragma once

#include <vector>

#include "pw/lab.hpp"

namespace pw::acceptance {

/// Runs the acceptance criteria (all ten, or the listed subset). Each entry's
/// id starts with "C<k>"; a criterion passes when every one of its entries
/// passes. Failures are recorded per entry, never aborting the batch.
/// Throws std::invalid_argument when `only` filters everything out.
std::vector<lab::CheckResult> run_all(const std::vector<int>& only = {});

/// One line per criterion, aggregated over its entries.
std::string summary(const std::vector<lab::CheckResult>& checks);

/// The deterministic result table used by criterion 10: a fixed slice of
/// measured values spanning every parallel kernel, formatted to full
/// precision. Byte-identical output is required across exec modes and thread
/// counts.
std::string determinism_table();

}  // namespace pw::acceptance
