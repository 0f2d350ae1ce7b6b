#include "teachsim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "teachsim/errors.hpp"
#include "teachsim/trace_io.hpp"

namespace teachsim {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

double to_real(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  }
  return x;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& s) {
  Int x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

// Enum parsers throw InvalidArgument; rethrow as a config error naming the key.
template <typename F>
auto parse_enum(const std::string& key, const std::string& s, F parse) {
  try {
    return parse(s);
  } catch (const Error& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;
using Getter = std::function<std::string()>;

struct Key {
  Setter set;
  Getter get;
};

// Section -> ordered key table bound to `c`.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>> schema(RunConfig& c) {
  ExperimentConfig& e = c.experiment;
  auto real = [](double& field) {
    return Key{[&field](const std::string& k, const std::string& v) { field = to_real(k, v); },
               [&field]() { return format_double(field); }};
  };
  auto i64 = [](std::int64_t& field) {
    return Key{[&field](const std::string& k, const std::string& v) {
                 field = to_int<std::int64_t>(k, v);
               },
               [&field]() { return std::to_string(field); }};
  };
  auto idx = [](Index& field) {
    return Key{[&field](const std::string& k, const std::string& v) { field = to_int<Index>(k, v); },
               [&field]() { return std::to_string(field); }};
  };
  auto int32 = [](int& field) {
    return Key{[&field](const std::string& k, const std::string& v) { field = to_int<int>(k, v); },
               [&field]() { return std::to_string(field); }};
  };
  auto text = [](std::string& field) {
    return Key{[&field](const std::string&, const std::string& v) { field = v; },
               [&field]() { return field; }};
  };
  auto enumeration = [](auto& field, auto parse) {
    return Key{[&field, parse](const std::string& k, const std::string& v) {
                 field = parse_enum(k, v, parse);
               },
               [&field]() { return std::string(to_string(field)); }};
  };

  return {
      {"data",
       {{"task", enumeration(e.data.spec.task, parse_task)},
        {"path", text(e.data.path)},
        {"label_column", text(e.data.label_column)},
        {"d", idx(e.data.spec.d)},
        {"n", idx(e.data.spec.n)},
        {"mean_separation", real(e.data.spec.mean_separation)},
        {"noise_sigma", real(e.data.spec.noise_sigma)},
        {"project_dim", idx(e.data.project_dim)},
        {"test_fraction", real(e.data.test_fraction)}}},
      {"teacher",
       {{"kinds",
         Key{[&c](const std::string& k, const std::string& v) {
               c.teachers.clear();
               for (const std::string& s : split_list(v)) {
                 c.teachers.push_back(parse_enum(k, s, parse_teacher_kind));
               }
             },
             [&c]() {
               std::vector<std::string> names;
               for (TeacherKind t : c.teachers) names.emplace_back(to_string(t));
               return join(names);
             }}},
        {"exam_period", int32(e.teacher.exam_period)},
        {"schedule", enumeration(e.teacher.schedule, parse_exam_schedule)},
        {"stop_tolerance", real(e.teacher.stop_tolerance)},
        {"lambda", real(e.teacher.lambda)}}},
      {"mode",
       {{"kind", enumeration(e.mode.kind, parse_mode_kind)},
        {"norm_bound", real(e.mode.norm_bound)},
        {"gamma_grid",
         Key{[&e](const std::string& k, const std::string& v) {
               e.mode.gamma_grid.clear();
               if (v == "default") return;
               for (const std::string& s : split_list(v)) e.mode.gamma_grid.push_back(to_real(k, s));
             },
             [&e]() {
               if (e.mode.gamma_grid.empty()) return std::string("default");
               std::vector<std::string> parts;
               for (double g : e.mode.gamma_grid) parts.push_back(format_double(g));
               return join(parts);
             }}},
        {"labels", enumeration(e.mode.labels, parse_label_source)},
        {"span_metric",
         Key{[&e](const std::string& k, const std::string& v) { e.mode.span_metric = to_bool(k, v); },
             [&e]() { return std::string(e.mode.span_metric ? "true" : "false"); }}}}},
      {"learner",
       {{"loss", enumeration(e.learner.loss, parse_loss)},
        {"feedback", enumeration(e.learner.feedback, parse_feedback)},
        {"eta", real(e.learner.eta)},
        {"sigma_forget", real(e.learner.sigma_forget)}}},
      {"map", {{"kind", enumeration(e.map.kind, parse_map_kind)}}},
      {"recovery",
       {{"eps_est", real(e.recovery.eps_est)},
        {"delta", real(e.recovery.delta)},
        {"max_rounds", int32(e.recovery.max_rounds)},
        {"contraction_rho", real(e.recovery.contraction_rho)},
        {"query_scale", real(e.recovery.query_scale)}}},
      {"run",
       {{"seed",
         Key{[&e](const std::string& k, const std::string& v) {
               e.run.seed = to_int<std::uint64_t>(k, v);
             },
             [&e]() { return std::to_string(e.run.seed); }}},
        {"max_iterations", i64(e.run.max_iterations)},
        {"metrics_period", i64(e.run.metrics_period)},
        {"ridge", real(e.run.ridge)},
        {"scenario", enumeration(c.scenario, parse_scenario)},
        {"n_teachers", int32(c.n_teachers)},
        {"switch_points",
         Key{[&c](const std::string& k, const std::string& v) {
               c.switch_points.clear();
               for (const std::string& s : split_list(v)) {
                 c.switch_points.push_back(to_int<std::int64_t>(k, s));
               }
             },
             [&c]() {
               std::vector<std::string> parts;
               for (std::int64_t s : c.switch_points) parts.push_back(std::to_string(s));
               return join(parts);
             }}}}},
  };
}

}  // namespace

Scenario parse_scenario(std::string_view s) {
  if (s == "standard") return Scenario::standard;
  if (s == "forgetting") return Scenario::forgetting;
  if (s == "multi-teacher" || s == "multi_teacher") return Scenario::multi_teacher;
  throw InvalidArgument("unknown scenario '" + std::string(s) + "'");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::standard: return "standard";
    case Scenario::forgetting: return "forgetting";
    case Scenario::multi_teacher: return "multi-teacher";
  }
  return "?";
}

RunConfig parse_config(std::string_view text) {
  // Boost's INI reader only knows ';' comments; accept '#' as well.
  std::string cleaned;
  std::istringstream lines{std::string(text)};
  for (std::string line; std::getline(lines, line);) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] == '#') continue;
    cleaned += line + "\n";
  }
  pt::ptree tree;
  try {
    std::istringstream in(cleaned);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig c;
  auto table = schema(c);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' is outside any section");
    }
    auto sec = std::find_if(table.begin(), table.end(),
                            [&](const auto& s) { return s.first == section; });
    if (sec == table.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = std::find_if(sec->second.begin(), sec->second.end(),
                             [&](const auto& k) { return k.first == key; });
      if (it == sec->second.end()) throw ConfigError("unknown key '" + full + "'");
      it->second.set(full, trim(value.data()));
    }
  }
  if (c.teachers.empty()) throw ConfigError("key 'teacher.kinds' lists no teachers");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const RunConfig& config) {
  RunConfig c = config;
  std::string out;
  for (const auto& [section, keys] : schema(c)) {
    out += "[" + section + "]\n";
    for (const auto& [name, key] : keys) out += name + " = " + key.get() + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace teachsim
