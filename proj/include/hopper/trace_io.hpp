#pragma once

#include <string>
#include <vector>

#include "hopper/runner.hpp"
#include "hopper/scenario.hpp"

namespace hopper {

// Fixed-schema CSV: one row per (decimated) grid sample plus one row per
// event (post-reset state, nonzero event_edge), strictly time-ordered.
// Doubles are printed with %.17g so identical runs produce identical bytes.
void write_trace_csv(const std::string& path, const HybridTrace& trace, int log_every);

void write_mpc_csv(const std::string& path, const std::vector<MpcLogRow>& log);

void write_summary_json(const std::string& path, const Scenario& sc,
                        const RunSummary& summary);

}  // namespace hopper
