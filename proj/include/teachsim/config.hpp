#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "teachsim/experiments.hpp"

namespace teachsim {

enum class Scenario { standard, forgetting, multi_teacher };
Scenario parse_scenario(std::string_view s);
std::string_view to_string(Scenario s);

/// A run as described by a config file: the experiment plus which teachers
/// and scenario to drive.
struct RunConfig {
  ExperimentConfig experiment;
  Scenario scenario = Scenario::standard;
  std::vector<TeacherKind> teachers{TeacherKind::random, TeacherKind::omniscient,
                                    TeacherKind::active};
  int n_teachers = 2;                       // multi-teacher scenario
  std::vector<std::int64_t> switch_points;  // multi-teacher scenario
};

/// INI text with sections [data] [teacher] [mode] [learner] [map] [recovery]
/// [run]. Missing keys keep their defaults; unknown sections or keys and
/// unparsable values raise ConfigError naming the key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its value, defaults filled in; parse_config(format_config(c))
/// reproduces `c` exactly (reals at 17 significant digits).
std::string format_config(const RunConfig& config);

}  // namespace teachsim
