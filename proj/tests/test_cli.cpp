#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "teachsim/cli.hpp"
#include "teachsim/config.hpp"
#include "teachsim/errors.hpp"
#include "teachsim/plot.hpp"
#include "teachsim/report.hpp"
#include "teachsim/trace_io.hpp"
#include "json.hpp"

using namespace teachsim;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(# small regression run
[data]
task = regression
d = 6
n = 80

[teacher]
kinds = random,omniscient,active

[learner]
loss = square
feedback = identity
eta = 0

[map]
kind = general

[run]
seed = 4
max_iterations = 40
)";

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("teachsim_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct Proc {
  int code = -1;
  std::string err;
};

// Runs the built tool; stdout is discarded, stderr captured.
Proc tool(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd =
      std::string(TEACHSIM_BIN) + " " + args + " > /dev/null 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Proc p;
  p.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  p.err = slurp(err);
  return p;
}

// In-process invocation.
int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "teachsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

bool single_error_line(const std::string& err, const std::string& code) {
  return std::regex_match(err, std::regex("error\\[" + code + "\\]: [^\\n]*\\n"));
}

Trace geometric_trace(const std::string& teacher, double r, int n) {
  Trace t;
  t.teacher = teacher;
  for (int i = 0; i < n; ++i) {
    TraceRow row;
    row.iteration = i;
    row.teaching_samples = i;
    row.param_dist = std::pow(r, i);
    row.objective = row.param_dist;
    t.rows.push_back(row);
  }
  return t;
}

std::vector<std::pair<double, double>> curve_points(const std::string& svg, const std::string& chart,
                                                    const std::string& teacher) {
  const std::regex re("<polyline class=\"curve\" data-chart=\"" + chart + "\" data-teacher=\"" +
                      teacher + "\"[^>]* points=\"([^\"]*)\"");
  std::smatch m;
  std::vector<std::pair<double, double>> pts;
  if (!std::regex_search(svg, m, re)) return pts;
  std::istringstream ss(m[1].str());
  std::string pair;
  while (ss >> pair) {
    const auto comma = pair.find(',');
    pts.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
  }
  return pts;
}

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& entry : fs::directory_iterator(fs::path(TEACHSIM_SOURCE_DIR) / "configs")) {
    const RunConfig c = load_config(entry.path());
    const std::string text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text) << entry.path();
  }
}

TEST(Config, UnknownKeysAndBadValuesNameTheKey) {
  try {
    parse_config("[run]\nsede = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.sede"), std::string::npos) << e.what();
  }
  try {
    parse_config("[learner]\neta = fast\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eta"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[teacher]\nkinds = teacherless\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/teachsim.ini"), IoError);
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_config(kSmallConfig);
  EXPECT_EQ(c.experiment.data.spec.d, 6);
  EXPECT_EQ(c.experiment.map.kind, MapKind::general);
  EXPECT_EQ(c.teachers.size(), 3u);
  EXPECT_EQ(c.scenario, Scenario::standard);
  const RunConfig m = parse_config("[run]\nscenario = multi-teacher\nswitch_points = 5\n");
  EXPECT_EQ(m.scenario, Scenario::multi_teacher);
  EXPECT_EQ(m.switch_points, std::vector<std::int64_t>{5});
}

TEST(Cli, ExitCodeTable) {
  EXPECT_EQ(exit_code_for("E_CONFIG"), 2);
  EXPECT_EQ(exit_code_for("E_USAGE"), 2);
  EXPECT_EQ(exit_code_for("E_IO"), 4);
  EXPECT_EQ(exit_code_for("E_PARSE"), 4);
  EXPECT_EQ(exit_code_for("E_NUMERIC"), 3);
  EXPECT_EQ(exit_code_for("E_DIM"), 3);
}

TEST(Cli, UsageErrors) {
  std::string err;
  EXPECT_EQ(cli({"bogus"}, nullptr, &err), 2);
  EXPECT_TRUE(single_error_line(err, "E_USAGE")) << err;
  EXPECT_EQ(cli({"run", "--out", "/tmp/x"}, nullptr, &err), 2);
  EXPECT_TRUE(single_error_line(err, "E_USAGE")) << err;
}

TEST(Cli, DatagenIsDeterministicAndValidates) {
  const fs::path dir = temp_dir("datagen");
  const std::string base = "datagen --task classification --d 50 --n 1000 --seed 1 --out ";
  ASSERT_EQ(tool(base + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(tool(base + (dir / "b").string(), dir).code, 0);
  const std::string a = slurp(dir / "a" / "data.csv");
  EXPECT_EQ(a, slurp(dir / "b" / "data.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 2001);
  EXPECT_TRUE(fs::exists(dir / "a" / "truth.csv"));

  const Proc bad = tool("datagen --task regression --d 5 --n 0 --out " + (dir / "c").string(), dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_TRUE(single_error_line(bad.err, "E_CONFIG")) << bad.err;
}

TEST(Cli, RunWritesTracesAndReproducesFromSnapshot) {
  const fs::path dir = temp_dir("run");
  spit(dir / "small.ini", kSmallConfig);
  ASSERT_EQ(tool("run --config " + (dir / "small.ini").string() + " --out " + (dir / "a").string(), dir)
                .code,
            0);
  for (const char* t : {"random", "omniscient", "active"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / (std::string(t) + ".csv"))) << t;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["snapshot_file"], "config.resolved.ini");
  ASSERT_EQ(tool("run --config " + (dir / "a" / "config.resolved.ini").string() + " --out " +
                     (dir / "b").string(),
                 dir)
                .code,
            0);
  for (const char* t : {"random", "omniscient", "active"}) {
    const std::string f = std::string(t) + ".csv";
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << t;
  }
  EXPECT_EQ(slurp(dir / "a" / "config.resolved.ini"), slurp(dir / "b" / "config.resolved.ini"));
}

TEST(Cli, ManifestChecksumsMatchFiles) {
  const fs::path dir = temp_dir("manifest");
  spit(dir / "small.ini", kSmallConfig);
  ASSERT_EQ(cli({"run", "--config", (dir / "small.ini").string(), "--out", (dir / "o").string(),
                 "--teacher", "omniscient"}),
            0);
  const auto m = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
  ASSERT_TRUE(m.contains("artifacts"));
  for (const auto& a : m["artifacts"]) {
    const std::string file = a["file"];
    EXPECT_TRUE(fs::exists(dir / "o" / file)) << file;
    EXPECT_EQ(a["sha256"].get<std::string>().size(), 64u);
  }
  EXPECT_FALSE(fs::exists(dir / "o" / "random.csv"));
}

TEST(Cli, BadConfigKeyExitsTwoNamingKey) {
  const fs::path dir = temp_dir("badkey");
  spit(dir / "bad.ini", "[learner]\nlearning_rate = 1\n");
  const Proc p = tool("run --config " + (dir / "bad.ini").string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(p.code, 2);
  EXPECT_TRUE(single_error_line(p.err, "E_CONFIG")) << p.err;
  EXPECT_NE(p.err.find("learner.learning_rate"), std::string::npos);
  const Proc missing = tool("run --config " + (dir / "none.ini").string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(missing.code, 4);
  EXPECT_TRUE(single_error_line(missing.err, "E_IO")) << missing.err;
}

TEST(Cli, RuntimeFailureFlushesPartialTrace) {
  const fs::path dir = temp_dir("runtime");
  spit(dir / "sat.ini",
       "[data]\nd = 6\nn = 50\n[learner]\nloss = logistic\nfeedback = sigmoid\neta = 0.1\n"
       "[teacher]\nkinds = active\n[map]\nkind = general\n[recovery]\nquery_scale = 1e6\n"
       "[run]\nmax_iterations = 10\n");
  const Proc p = tool("run --config " + (dir / "sat.ini").string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(p.code, 3);
  EXPECT_TRUE(single_error_line(p.err, "E_NUMERIC")) << p.err;
  ASSERT_TRUE(fs::exists(dir / "o" / "active.csv"));
  EXPECT_GE(read_trace(dir / "o" / "active.csv").rows.size(), 1u);
}

TEST(Cli, ForgettingScenarioWritesFourTraces) {
  const fs::path dir = temp_dir("forget");
  spit(dir / "f.ini",
       "[data]\nd = 6\nn = 60\n[learner]\nloss = logistic\nfeedback = sigmoid\neta = 1\n"
       "[map]\nkind = identity\n[run]\nmax_iterations = 30\n");
  ASSERT_EQ(cli({"run", "--config", (dir / "f.ini").string(), "--out", (dir / "o").string(),
                 "--scenario", "forgetting", "--sigma-forget", "0.1"}),
            0);
  for (const char* t : {"random", "omniscient", "lazy", "active"}) {
    EXPECT_TRUE(fs::exists(dir / "o" / (std::string(t) + ".csv"))) << t;
  }
}

TEST(Cli, SeedRangeMatchesSingleSeedRuns) {
  const fs::path dir = temp_dir("seeds");
  spit(dir / "small.ini", kSmallConfig);
  ASSERT_EQ(cli({"run", "--config", (dir / "small.ini").string(), "--out", (dir / "many").string(),
                 "--seeds", "1..3"}),
            0);
  ASSERT_EQ(cli({"run", "--config", (dir / "small.ini").string(), "--out", (dir / "one").string(),
                 "--seed", "2"}),
            0);
  EXPECT_EQ(slurp(dir / "many" / "seed_2" / "active.csv"), slurp(dir / "one" / "active.csv"));
  EXPECT_TRUE(fs::exists(dir / "many" / "seed_3" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "many" / "manifest.json"));
  std::string err;
  EXPECT_EQ(cli({"run", "--config", (dir / "small.ini").string(), "--out", (dir / "x").string(),
                 "--seeds", "3..1"},
                nullptr, &err),
            2);
}

TEST(Plot, DeterministicWithLegendPerTrace) {
  std::vector<Trace> traces;
  for (const char* t : {"random", "omniscient", "lazy", "active"}) {
    traces.push_back(geometric_trace(t, 0.95, 30));
  }
  const std::string svg = render_svg(traces);
  EXPECT_EQ(svg, render_svg(traces));
  const std::regex entry("class=\"legend-entry\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), entry), std::sregex_iterator()),
            4);
  // Colours agree across charts.
  for (const char* t : {"random", "omniscient", "lazy", "active"}) {
    const std::regex stroke("data-teacher=\"" + std::string(t) + "\"[^>]*stroke=\"(#[0-9a-f]{6})\"");
    std::set<std::string> colors;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), stroke); it != std::sregex_iterator(); ++it) {
      colors.insert((*it)[1].str());
    }
    EXPECT_EQ(colors.size(), 1u) << t;
  }
  EXPECT_TRUE(curve_points(render_svg({traces[0]}), "param_dist", "random").size() == 30u);
}

TEST(Plot, GeometricTraceIsStraightOnLogAxis) {
  const std::string svg = render_svg({geometric_trace("omniscient", 0.9, 40)});
  const auto pts = curve_points(svg, "param_dist", "omniscient");
  ASSERT_EQ(pts.size(), 40u);
  const double slope = (pts.back().second - pts.front().second) / (pts.back().first - pts.front().first);
  for (size_t i = 1; i < pts.size(); ++i) {
    const double s = (pts[i].second - pts[i - 1].second) / (pts[i].first - pts[i - 1].first);
    EXPECT_NEAR(s, slope, 1e-3 * std::abs(slope));
  }
}

TEST(Plot, CliWritesFileAndRejectsMalformedTraces) {
  const fs::path dir = temp_dir("plot");
  write_trace(dir / "active.csv", geometric_trace("active", 0.9, 20));
  ASSERT_EQ(cli({"plot", (dir / "active.csv").string(), "--out", (dir / "a.svg").string()}), 0);
  ASSERT_EQ(cli({"plot", dir.string(), "--out", (dir / "b.svg").string()}), 0);
  EXPECT_EQ(slurp(dir / "a.svg"), slurp(dir / "b.svg"));
  spit(dir / "broken.csv", "iteration,objective\n");
  std::string err;
  EXPECT_EQ(cli({"plot", (dir / "broken.csv").string(), "--out", (dir / "c.svg").string()}, nullptr, &err),
            4);
  EXPECT_TRUE(single_error_line(err, "E_PARSE")) << err;
}

TEST(Report, FieldsRateAndIdempotence) {
  const fs::path dir = temp_dir("report");
  write_trace(dir / "omniscient.csv", geometric_trace("omniscient", 0.8, 40));
  std::string a, b;
  ASSERT_EQ(cli({"report", dir.string()}, &a), 0);
  ASSERT_EQ(cli({"report", dir.string()}, &b), 0);
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  const auto& t = j["teachers"][0];
  EXPECT_EQ(t["teacher"], "omniscient");
  EXPECT_EQ(t["samples_to_threshold"], 11);  // 0.8^11 = 0.086
  EXPECT_LT(t["rate"].get<double>(), 1.0);
  EXPECT_NEAR(t["rate"].get<double>(), 0.8, 1e-9);
  EXPECT_DOUBLE_EQ(t["final_param_dist"].get<double>(), std::pow(0.8, 39));
  EXPECT_EQ(t["query_samples"], 0);
}

TEST(Report, EmptyDirectoryListsExpectedFiles) {
  const fs::path dir = temp_dir("report_empty");
  const Proc p = tool("report " + dir.string(), dir.parent_path());
  EXPECT_EQ(p.code, 4);
  EXPECT_TRUE(single_error_line(p.err, "E_IO")) << p.err;
  for (const char* f : {"random.csv", "omniscient.csv", "lazy.csv", "active.csv"}) {
    EXPECT_NE(p.err.find(f), std::string::npos) << f;
  }
}
