#pragma once

#include <filesystem>
#include <string>

#include "teachsim/experiments.hpp"

namespace teachsim {

/// CSV with header iteration,objective,param_dist,test_accuracy,
/// teaching_samples,query_samples; reals at 17 significant digits and an
/// empty test_accuracy cell when absent.
std::string format_trace(const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);

/// Inverse of write_trace. The teacher name is taken from the file stem.
Trace read_trace(const std::filesystem::path& path);

std::string format_double(double x);

}  // namespace teachsim
