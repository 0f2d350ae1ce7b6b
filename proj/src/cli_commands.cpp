#include "teachsim/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "teachsim/config.hpp"
#include "teachsim/errors.hpp"
#include "teachsim/plot.hpp"
#include "teachsim/report.hpp"
#include "teachsim/trace_io.hpp"

namespace teachsim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Usage errors from the argument parser.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("E_USAGE", what) {}
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

// ---- datagen ---------------------------------------------------------------

int cmd_datagen(const std::string& task, Index d, Index n, std::uint64_t seed, double sep,
                double noise, const fs::path& out_dir, std::ostream& out) {
  if (d < 1) throw ConfigError("--d must be >= 1, got " + std::to_string(d));
  if (n < 1) throw ConfigError("--n must be >= 1, got " + std::to_string(n));
  if (!(noise >= 0.0)) throw ConfigError("--noise-sigma must be >= 0");
  DatasetSpec spec;
  try {
    spec.task = parse_task(task);
  } catch (const Error& e) {
    throw ConfigError(std::string("--task: ") + e.what());
  }
  spec.d = d;
  spec.n = n;
  spec.seed = seed;
  spec.mean_separation = sep;
  spec.noise_sigma = noise;

  make_dirs(out_dir);
  Dataset data;
  Dataset truth;  // one row: w* (regression) or the +1 class mean (classification)
  if (spec.task == Task::regression) {
    RegressionData r = gen_regression_data(spec);
    data = std::move(r.data);
    truth.features = r.w_star_truth.transpose();
  } else {
    data = gen_classification_data(spec);
    truth.features = Matrix::Constant(1, d, sep);
  }
  truth.labels = Vector::Zero(1);
  write_tabular(out_dir / "data.csv", data);
  write_tabular(out_dir / "truth.csv", truth);
  out << "datagen: " << data.size() << " rows, " << data.dim() << " dims, seed " << seed
      << ", task " << to_string(spec.task) << " -> " << (out_dir / "data.csv").string() << "\n";
  return 0;
}

// ---- run -------------------------------------------------------------------

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::optional<double> sigma_forget;
  std::optional<std::string> teacher;
};

RunConfig apply_overrides(RunConfig c, const Overrides& o) {
  if (o.seed) c.experiment.run.seed = *o.seed;
  try {
    if (o.scenario) c.scenario = parse_scenario(*o.scenario);
    if (o.teacher) c.teachers = {parse_teacher_kind(*o.teacher)};
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (o.sigma_forget) {
    if (!(*o.sigma_forget >= 0.0)) throw ConfigError("--sigma-forget must be >= 0");
    c.experiment.learner.sigma_forget = *o.sigma_forget;
  }
  return c;
}

struct SeedOutcome {
  std::string summary;
  std::optional<std::string> error_code;
  std::string error_message;
  ordered_json manifest;
};

ordered_json artifact(const fs::path& dir, const std::string& name) {
  ordered_json a;
  a["file"] = name;
  a["sha256"] = sha256_hex(read_file(dir / name));
  return a;
}

std::vector<Trace> run_scenario(const RunConfig& rc, const Problem* problem) {
  const ExperimentConfig& c = rc.experiment;
  switch (rc.scenario) {
    case Scenario::standard: {
      std::vector<Trace> traces;
      for (TeacherKind k : rc.teachers) traces.push_back(run_teacher(*problem, c, k));
      return traces;
    }
    case Scenario::forgetting:
      return run_forgetting_scenario(c, c.learner.sigma_forget);
    case Scenario::multi_teacher:
      return {run_multi_teacher(c, rc.n_teachers, rc.switch_points)};
  }
  return {};
}

// Runs one replicate into `dir`; never throws.
SeedOutcome run_one(RunConfig rc, const std::string& config_path, const fs::path& dir) {
  SeedOutcome res;
  std::vector<std::string> written;
  try {
    make_dirs(dir);
    const Problem problem = build_problem(rc.experiment);
    // The snapshot pins the learning rate that defaults resolved to.
    rc.experiment.learner.eta = problem.eta;
    const std::string snapshot = format_config(rc);
    write_file(dir / "config.resolved.ini", snapshot);

    std::vector<Trace> traces;
    try {
      traces = run_scenario(rc, &problem);
    } catch (const RunFailure& f) {
      const std::string name = f.partial().teacher + ".csv";
      write_trace(dir / name, f.partial());
      written.push_back(name);
      throw;
    }
    std::ostringstream summary;
    for (const Trace& t : traces) {
      const std::string name = t.teacher + ".csv";
      write_trace(dir / name, t);
      written.push_back(name);
      const TraceRow& last = t.rows.back();
      summary << "seed " << rc.experiment.run.seed << " " << t.teacher << ": "
              << last.teaching_samples << " teaching samples, " << last.query_samples
              << " queries, param_dist " << format_double(last.param_dist) << " ("
              << t.stop_reason << ")\n";
    }
    res.summary = summary.str();

    ordered_json m;
    m["command"] = "run";
    m["config_path"] = config_path;
    m["output_dir"] = dir.string();
    m["scenario"] = std::string(to_string(rc.scenario));
    m["seed"] = rc.experiment.run.seed;
    m["eta"] = problem.eta;
    m["map_residual"] = problem.map_residual;
    m["map_flagged"] = problem.map_flagged;
    m["snapshot_file"] = "config.resolved.ini";
    m["snapshot"] = snapshot;
    m["artifacts"] = ordered_json::array();
    m["artifacts"].push_back(artifact(dir, "config.resolved.ini"));
    for (size_t i = 0; i < traces.size(); ++i) {
      ordered_json a = artifact(dir, written[i]);
      a["teacher"] = traces[i].teacher;
      a["stop_reason"] = traces[i].stop_reason;
      a["rows"] = traces[i].rows.size();
      m["artifacts"].push_back(a);
    }
    write_file(dir / "manifest.json", m.dump(2) + "\n");
    res.manifest = m;
  } catch (const Error& e) {
    res.error_code = e.code();
    res.error_message = e.what();
  } catch (const std::exception& e) {
    res.error_code = "E_INTERNAL";
    res.error_message = e.what();
  }
  return res;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  auto parse = [&](const std::string& part) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || p != part.data() + part.size()) {
      throw ConfigError("--seeds expects A..B, got '" + s + "'");
    }
    return v;
  };
  if (dots == std::string::npos) throw ConfigError("--seeds expects A..B, got '" + s + "'");
  const std::uint64_t a = parse(s.substr(0, dots));
  const std::uint64_t b = parse(s.substr(dots + 2));
  if (b < a) throw ConfigError("--seeds range is empty: '" + s + "'");
  return {a, b};
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TEACHSIM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

int cmd_run(const std::string& config_path, const fs::path& out_dir, const Overrides& o,
            const std::optional<std::string>& seeds, std::ostream& out) {
  const RunConfig base = apply_overrides(load_config(config_path), o);
  if (!seeds) {
    SeedOutcome r = run_one(base, config_path, out_dir);
    if (r.error_code) throw Error(*r.error_code, r.error_message);
    out << r.summary;
    return 0;
  }

  const auto [a, b] = parse_seed_range(*seeds);
  std::vector<std::uint64_t> list;
  for (std::uint64_t s = a; s <= b; ++s) list.push_back(s);
  std::vector<SeedOutcome> results(list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < list.size(); i = next++) {
      RunConfig rc = base;
      rc.experiment.run.seed = list[i];
      results[i] = run_one(rc, config_path, out_dir / ("seed_" + std::to_string(list[i])));
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < worker_count(list.size()); ++k) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  // Merge in seed order.
  make_dirs(out_dir);
  ordered_json top;
  top["command"] = "run";
  top["config_path"] = config_path;
  top["output_dir"] = out_dir.string();
  top["seeds"] = ordered_json::array();
  for (size_t i = 0; i < list.size(); ++i) {
    if (results[i].error_code) throw Error(*results[i].error_code, "seed " +
                                           std::to_string(list[i]) + ": " + results[i].error_message);
    out << results[i].summary;
    const std::string sub = "seed_" + std::to_string(list[i]);
    ordered_json e;
    e["seed"] = list[i];
    e["dir"] = sub;
    e["manifest_sha256"] = sha256_hex(read_file(out_dir / sub / "manifest.json"));
    top["seeds"].push_back(e);
  }
  write_file(out_dir / "manifest.json", top.dump(2) + "\n");
  return 0;
}

// ---- plot / report ---------------------------------------------------------

std::vector<fs::path> trace_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Trace> load_traces(const std::vector<std::string>& inputs) {
  std::vector<Trace> traces;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      const auto files = trace_files(p);
      if (files.empty()) {
        throw IoError("no trace files in '" + in +
                      "'; expected one or more of random.csv, omniscient.csv, lazy.csv, active.csv");
      }
      for (const fs::path& f : files) traces.push_back(read_trace(f));
    } else if (fs::exists(p)) {
      traces.push_back(read_trace(p));
    } else {
      throw IoError("trace input '" + in + "' does not exist");
    }
  }
  return traces;
}

int cmd_plot(const std::vector<std::string>& inputs, const fs::path& out_file, std::ostream& out) {
  const std::vector<Trace> traces = load_traces(inputs);
  if (out_file.has_parent_path()) make_dirs(out_file.parent_path());
  write_file(out_file, render_svg(traces));
  out << "plot: " << traces.size() << " trace(s) -> " << out_file.string() << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::optional<std::string>& out_file,
               std::ostream& out) {
  const std::string text = summarize_traces(load_traces(inputs));
  if (out_file) {
    write_file(*out_file, text);
    out << "report: -> " << *out_file << "\n";
  } else {
    out << text;
  }
  return 0;
}

}  // namespace

int exit_code_for(const std::string& code) {
  if (code == "E_CONFIG" || code == "E_USAGE") return 2;
  if (code == "E_IO" || code == "E_PARSE") return 4;
  return 3;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"teachsim: iterative machine teaching simulator"};
  app.require_subcommand(1);

  std::string task = "classification";
  Index d = 50, n = 1000;
  std::uint64_t gen_seed = 1;
  double sep = 0.5, noise = 0.1;
  std::string gen_out;
  auto* datagen = app.add_subcommand("datagen", "write a synthetic dataset and its ground truth");
  datagen->add_option("--task", task, "regression or classification");
  datagen->add_option("--d", d, "feature dimension");
  datagen->add_option("--n", n, "rows (per class for classification)");
  datagen->add_option("--seed", gen_seed, "random seed");
  datagen->add_option("--mean-separation", sep, "class mean offset");
  datagen->add_option("--noise-sigma", noise, "regression label noise");
  datagen->add_option("--out", gen_out, "output directory")->required();

  std::string config_path, run_out;
  Overrides ov;
  std::optional<std::string> seeds;
  auto* run = app.add_subcommand("run", "run teachers from a config file");
  run->add_option("--config", config_path, "INI config")->required();
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--seed", ov.seed, "override run.seed");
  run->add_option("--seeds", seeds, "replicate range A..B");
  run->add_option("--scenario", ov.scenario, "standard, forgetting or multi-teacher");
  run->add_option("--sigma-forget", ov.sigma_forget, "forgetting noise level");
  run->add_option("--teacher", ov.teacher, "run only this teacher (random, omniscient, lazy, active)");

  std::vector<std::string> plot_in;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "render traces to SVG");
  plot->add_option("traces", plot_in, "trace files or directories")->required();
  plot->add_option("--out", plot_out, "SVG file")->required();

  std::vector<std::string> report_in;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "summarize traces as JSON");
  report->add_option("traces", report_in, "trace files or directories")->required();
  report->add_option("--out", report_out, "JSON file (default: stdout)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    if (datagen->parsed()) return cmd_datagen(task, d, n, gen_seed, sep, noise, gen_out, out);
    if (run->parsed()) {
      if (seeds && ov.seed) throw UsageError("--seed and --seeds are exclusive");
      return cmd_run(config_path, run_out, ov, seeds, out);
    }
    if (plot->parsed()) return cmd_plot(plot_in, plot_out, out);
    if (report->parsed()) return cmd_report(report_in, report_out, out);
    throw UsageError("no command given");
  } catch (const Error& e) {
    err << "error[" << e.code() << "]: " << one_line(e.what()) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << one_line(e.what()) << "\n";
    return 3;
  }
}

}  // namespace teachsim
