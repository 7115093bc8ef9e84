#pragma once

#include "bschain/harness.hpp"

namespace bschain::detail {

RunReport run_e1(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e2(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e3(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e4(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e5(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e6(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e7(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e8(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e9(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e10(const ExperimentSpec& spec, const RunOptions& opts);
RunReport run_e11(const ExperimentSpec& spec, const RunOptions& opts);

/// Experiments whose parameters must satisfy the chain constraints (N >= 5, alpha_N < 1).
bool uses_chain(const std::string& id);
/// Chain events the experiment's Monte Carlo parts are expected to draw.
double projected_events_for(const ExperimentSpec& spec);

}  // namespace bschain::detail
