#pragma once

#include <string>
#include <vector>

#include "teachsim/experiments.hpp"

namespace teachsim {

inline constexpr double kReportThreshold = 0.1;

/// JSON summary per trace: samples to param_dist <= 0.1 * initial, the
/// exponential_fit rate over the rows up to that point (whole trace if that
/// leaves fewer than 10 usable rows, null if the trace is too short), final
/// param_dist and total query samples.
std::string summarize_traces(const std::vector<Trace>& traces);

}  // namespace teachsim
