#include "teachsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teachsim/errors.hpp"
#include "teachsim/rng.hpp"

namespace teachsim {

namespace {

constexpr double kMapResidualFlag = 1e-6;

TeachingMode make_mode(const ModeSettings& m, const Dataset& pool) {
  TeachingMode mode;
  mode.kind = m.kind;
  mode.norm_bound = m.norm_bound;
  mode.pool = pool;
  mode.gamma_grid = m.gamma_grid;
  mode.labels = m.labels;
  mode.span_metric = m.span_metric;
  return mode;
}

TraceRow measure(const Problem& p, const Student& student, LossKind loss, std::int64_t t) {
  TraceRow row;
  row.iteration = t;
  const Vector& v = student.teacher_view();
  LearnerState probe;
  probe.w = v;
  probe.loss = loss;
  row.objective = training_objective(probe, p.train);
  row.param_dist = (v - p.v_star).norm();
  if (is_classification(loss) && p.test.size() > 0) row.test_accuracy = accuracy(p.test, v);
  row.teaching_samples = student.teaching_samples();
  row.query_samples = student.queries();
  return row;
}

LearnerState initial_state(const Problem& p, const ExperimentConfig& c) {
  LearnerState s;
  s.w = p.w0;
  s.eta = p.eta;
  s.loss = c.learner.loss;
  s.feedback = c.learner.feedback;
  s.forgetting.sigma_forget = c.learner.sigma_forget;
  s.rng_seed = derive_seed(c.run.seed, kSeedLearner);
  return s;
}

TeacherContext make_context(const Problem& p, const ExperimentConfig& c, const Student& student,
                            std::uint64_t seed) {
  TeacherContext ctx;
  ctx.v_star = p.v_star;
  ctx.eta = p.eta;
  ctx.loss = c.learner.loss;
  ctx.spectral = p.map.spectral();
  ctx.map_unitary = p.map.is_unitary();
  ctx.basis = p.basis;
  ctx.recovery = c.recovery;
  ctx.norm_oracle = [&student]() { return student.teacher_view().norm(); };
  ctx.seed = seed;
  return ctx;
}

void validate(const ExperimentConfig& c) {
  if (c.run.max_iterations < 0) throw ConfigError("run.max_iterations must be >= 0");
  if (c.run.metrics_period < 1) throw ConfigError("run.metrics_period must be >= 1");
  if (c.teacher.exam_period < 1) throw ConfigError("teacher.exam_period must be >= 1");
  if (!(c.learner.sigma_forget >= 0.0)) throw ConfigError("learner.sigma_forget must be >= 0");
  if (!(c.mode.norm_bound > 0.0)) throw ConfigError("mode.norm_bound must be > 0");
  if (c.data.path.empty() && c.data.spec.task == Task::regression &&
      is_classification(c.learner.loss)) {
    throw ConfigError("learner.loss '" + std::string(to_string(c.learner.loss)) +
                      "' needs classification data");
  }
}

// Pushes a row, replacing the previous one if it describes the same iteration.
void push_row(std::vector<TraceRow>& rows, TraceRow row) {
  if (!rows.empty() && rows.back().iteration == row.iteration) {
    rows.back() = row;
  } else {
    rows.push_back(row);
  }
}

}  // namespace

Problem build_problem(const ExperimentConfig& c) {
  validate(c);
  const std::uint64_t seed = c.run.seed;
  Dataset raw;
  if (c.data.path.empty()) {
    DatasetSpec spec = c.data.spec;
    spec.seed = derive_seed(seed, kSeedData);
    raw = spec.task == Task::regression ? gen_regression_data(spec).data
                                        : gen_classification_data(spec);
  } else {
    raw = ingest_tabular(c.data.path, c.data.label_column);
  }
  if (raw.size() == 0) throw InvalidArgument("dataset has no rows");

  Problem p;
  Dataset teacher_view = raw;
  if (c.data.project_dim > 0) {
    const std::uint64_t st = derive_seed(seed, kSeedProjectTeacher);
    const std::uint64_t ss = derive_seed(seed, kSeedProjectStudent);
    TwoViews views = random_project(raw, c.data.project_dim, st, ss);
    const FittedMap fit = fit_map(views.teacher, views.student);
    p.map = FeatureMap(fit.g);
    p.map_residual = fit.residual;
    p.map_flagged = fit.residual > kMapResidualFlag;
    p.shared_space = false;
    teacher_view = std::move(views.teacher);
  } else {
    p.map = random_map(raw.dim(), c.map.kind, derive_seed(seed, kSeedMap));
    p.shared_space = c.map.kind == MapKind::identity;
  }
  auto [train, test] = split_holdout(teacher_view, c.data.test_fraction, derive_seed(seed, kSeedSplit));
  p.train = std::move(train);
  p.test = std::move(test);
  if (p.train.size() == 0) throw InvalidArgument("training split is empty");

  if (c.learner.eta > 0.0) {
    p.eta = c.learner.eta;
  } else {
    const double smax = p.map.spectral().sigma_max;
    p.eta = p.shared_space ? 1e-4 : 0.01 / (smax * smax);
  }
  p.v_star = train_optimal(p.train, c.learner.loss, c.run.ridge);

  Rng init(derive_seed(seed, kSeedInit));
  p.w0.resize(p.map.student_dim());
  for (Index i = 0; i < p.w0.size(); ++i) p.w0(i) = init.normal();
  p.w0 /= p.w0.norm();
  p.basis = make_basis_queries(p.map.teacher_dim(), derive_seed(seed, kSeedBasis),
                               c.recovery.query_scale);
  return p;
}

Trace run_teacher(const Problem& p, const ExperimentConfig& c, TeacherKind kind) {
  Student student(initial_state(p, c), p.map);
  TeacherSettings settings = c.teacher;
  settings.kind = kind;
  Teacher teacher(settings, make_mode(c.mode, p.train),
                  make_context(p, c, student, derive_seed(c.run.seed, kSeedTeacher)));
  Trace trace;
  trace.teacher = std::string(to_string(kind));
  trace.stop_reason = "max_iterations";
  trace.rows.push_back(measure(p, student, c.learner.loss, 0));
  try {
    for (std::int64_t t = 1; t <= c.run.max_iterations; ++t) {
      const StepOutcome out = teacher.step(student);
      if (out.stopped) {
        trace.stop_reason = "converged";
        break;
      }
      if (t % c.run.metrics_period == 0) {
        trace.rows.push_back(measure(p, student, c.learner.loss, teacher.iteration()));
      }
    }
  } catch (const Error& e) {
    trace.stop_reason = "error";
    push_row(trace.rows, measure(p, student, c.learner.loss, teacher.iteration()));
    throw RunFailure(e, std::move(trace));
  }
  push_row(trace.rows, measure(p, student, c.learner.loss, teacher.iteration()));
  return trace;
}

Trace run_experiment(const ExperimentConfig& config) {
  const Problem p = build_problem(config);
  return run_teacher(p, config, config.teacher.kind);
}

std::vector<Trace> run_forgetting_scenario(const ExperimentConfig& config, double sigma_forget) {
  if (!(sigma_forget >= 0.0)) throw ConfigError("sigma_forget must be >= 0");
  ExperimentConfig c = config;
  c.learner.sigma_forget = sigma_forget;
  c.teacher.schedule = ExamSchedule::periodic;
  const Problem p = build_problem(c);
  if (!p.shared_space) {
    throw ConfigError("forgetting scenario needs a shared feature space (map.kind = identity, "
                      "data.project_dim = 0)");
  }
  std::vector<Trace> out;
  for (TeacherKind k :
       {TeacherKind::random, TeacherKind::omniscient, TeacherKind::lazy, TeacherKind::active}) {
    out.push_back(run_teacher(p, c, k));
  }
  return out;
}

Trace run_multi_teacher(const ExperimentConfig& c, int n_teachers,
                        const std::vector<std::int64_t>& switch_points) {
  if (n_teachers < 1) throw ConfigError("n_teachers must be >= 1");
  if (static_cast<int>(switch_points.size()) != n_teachers - 1) {
    throw ConfigError("expected " + std::to_string(n_teachers - 1) + " switch points, got " +
                      std::to_string(switch_points.size()));
  }
  for (size_t k = 0; k < switch_points.size(); ++k) {
    if (switch_points[k] < 0 || switch_points[k] > c.run.max_iterations ||
        (k > 0 && switch_points[k] <= switch_points[k - 1])) {
      throw ConfigError("switch points must be increasing and within [0, max_iterations]");
    }
  }
  const Problem p = build_problem(c);
  Student student(initial_state(p, c), p.map);
  TeacherSettings settings = c.teacher;
  settings.kind = TeacherKind::active;
  const std::uint64_t base = derive_seed(c.run.seed, kSeedTeacher);
  auto make_teacher = [&](int index) {
    return Teacher(settings, make_mode(c.mode, p.train),
                   make_context(p, c, student, derive_seed(base, static_cast<std::uint64_t>(index))));
  };

  Trace trace;
  trace.teacher = "active";
  trace.stop_reason = "max_iterations";
  trace.rows.push_back(measure(p, student, c.learner.loss, 0));
  int current = 0;
  Teacher teacher = make_teacher(0);
  teacher.background_exam(student);
  size_t next_switch = 0;
  std::int64_t t = 0;
  auto handoffs = [&]() {
    while (next_switch < switch_points.size() && switch_points[next_switch] == t) {
      ++current;
      ++next_switch;
      teacher = make_teacher(current);
      teacher.background_exam(student);
    }
  };
  handoffs();
  while (t < c.run.max_iterations) {
    const StepOutcome out = teacher.step(student);
    if (out.stopped) {
      trace.stop_reason = "converged";
      break;
    }
    ++t;
    handoffs();
    if (t % c.run.metrics_period == 0) trace.rows.push_back(measure(p, student, c.learner.loss, t));
  }
  push_row(trace.rows, measure(p, student, c.learner.loss, t));
  return trace;
}

ExpFit exponential_fit(const std::vector<TraceRow>& rows) {
  std::vector<double> xs, ys;
  for (const TraceRow& r : rows) {
    if (r.param_dist > 1e-12) {
      xs.push_back(static_cast<double>(r.iteration));
      ys.push_back(std::log(r.param_dist));
    }
  }
  if (xs.size() < 10) {
    throw InvalidArgument("exponential_fit needs at least 10 rows with param_dist > 1e-12, got " +
                          std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double icept = my - slope * mx;
  double sse = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (icept + slope * xs[i]);
    sse += e * e;
  }
  ExpFit fit;
  fit.rate = std::exp(slope);
  fit.residual = std::sqrt(sse / n);
  fit.rows_used = xs.size();
  return fit;
}

std::vector<TraceRow> rows_until_fraction(const std::vector<TraceRow>& rows, double fraction) {
  std::vector<TraceRow> out;
  if (rows.empty()) return out;
  const double target = fraction * rows.front().param_dist;
  for (const TraceRow& r : rows) {
    out.push_back(r);
    if (r.param_dist <= target) break;
  }
  return out;
}

std::optional<std::int64_t> samples_to_threshold(const std::vector<TraceRow>& rows,
                                                 double fraction) {
  if (rows.empty()) return std::nullopt;
  const double target = fraction * rows.front().param_dist;
  for (const TraceRow& r : rows)
    if (r.param_dist <= target) return r.teaching_samples;
  return std::nullopt;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double plateau(const std::vector<TraceRow>& rows) {
  if (rows.empty()) throw InvalidArgument("plateau of an empty trace");
  const size_t tail = std::max<size_t>(1, rows.size() / 10);
  std::vector<double> values;
  for (size_t i = rows.size() - tail; i < rows.size(); ++i) values.push_back(rows[i].param_dist);
  return median(std::move(values));
}

}  // namespace teachsim
