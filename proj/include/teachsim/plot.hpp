#pragma once

#include <string>
#include <vector>

#include "teachsim/experiments.hpp"

namespace teachsim {

/// Three side-by-side charts against teaching_samples: param_dist (log10
/// axis), objective, test accuracy. One polyline per trace and chart, tagged
/// with data-teacher / data-chart attributes; one shared legend. Output is a
/// pure function of the traces.
std::string render_svg(const std::vector<Trace>& traces);

/// Stroke colour for the i-th trace; the four teacher kinds keep fixed colours.
std::string trace_color(const std::string& teacher, std::size_t index);

}  // namespace teachsim
