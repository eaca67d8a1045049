#pragma once

// Acceptance gate: one pass/fail line per criterion, shared by the
// dedicated test binary and the CLI's --selftest flag.

#include <iosfwd>
#include <string>

namespace cwlab {

// Runs all acceptance criteria, printing one "PASS criterion N: ..." or
// "FAIL criterion N: ..." line per criterion to `out`. `cli_path` is the
// cwlab binary used for the reproducibility criterion; if empty, that
// criterion fails with a diagnostic. Returns the number of failed criteria.
int run_acceptance(const std::string& cli_path, std::ostream& out);

}  // namespace cwlab
