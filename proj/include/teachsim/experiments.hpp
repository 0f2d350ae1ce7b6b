#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teachsim/data.hpp"
#include "teachsim/errors.hpp"
#include "teachsim/exam.hpp"
#include "teachsim/feature_space.hpp"
#include "teachsim/learners.hpp"
#include "teachsim/teachers.hpp"

namespace teachsim {

struct TraceRow {
  std::int64_t iteration = 0;
  double objective = 0.0;
  double param_dist = 0.0;  // ||G^T w - v*||
  std::optional<double> test_accuracy;
  std::int64_t teaching_samples = 0;
  std::int64_t query_samples = 0;
};

struct Trace {
  std::string teacher;
  std::vector<TraceRow> rows;
  std::string stop_reason;  // "converged", "max_iterations"
};

// A run that failed part way; carries the rows recorded before the failure
// and the code of the original error.
class RunFailure : public Error {
 public:
  RunFailure(const Error& cause, Trace partial)
      : Error(cause.code(), cause.what()), partial_(std::move(partial)) {}
  const Trace& partial() const noexcept { return partial_; }

 private:
  Trace partial_;
};

struct DataSettings {
  std::string path;  // empty: synthetic data from `spec`
  std::string label_column = "label";
  DatasetSpec spec;
  Index project_dim = 0;  // > 0: two random projections, G fitted between them
  double test_fraction = 0.2;
};

struct ModeSettings {
  ModeKind kind = ModeKind::rescalable_pool;
  double norm_bound = 1e3;
  std::vector<double> gamma_grid;  // empty: default grid
  LabelSource labels = LabelSource::teacher;
  bool span_metric = false;
};

struct LearnerSettings {
  LossKind loss = LossKind::logistic;
  FeedbackKind feedback = FeedbackKind::sigmoid;
  double eta = 0.0;  // <= 0: 1e-4 for a shared space, 0.01 / sigma_max^2 otherwise
  double sigma_forget = 0.0;
};

struct MapSettings {
  MapKind kind = MapKind::unitary;
};

struct RunSettings {
  std::uint64_t seed = 1;
  std::int64_t max_iterations = 10000;
  std::int64_t metrics_period = 1;
  double ridge = 5e-5;
};

struct ExperimentConfig {
  DataSettings data;
  TeacherSettings teacher;
  ModeSettings mode;
  LearnerSettings learner;
  MapSettings map;
  RecoveryConfig recovery;
  RunSettings run;
};

// Sub-seed labels; every random stream of a run is derived from run.seed.
enum SeedLabel : std::uint64_t {
  kSeedData = 1,
  kSeedMap = 2,
  kSeedInit = 3,
  kSeedTeacher = 4,
  kSeedLearner = 5,
  kSeedBasis = 6,
  kSeedSplit = 7,
  kSeedProjectTeacher = 8,
  kSeedProjectStudent = 9,
};

/// Everything shared by the teachers of one replicate.
struct Problem {
  Dataset train;  // teacher space
  Dataset test;   // teacher space, may be empty
  FeatureMap map = FeatureMap::identity(1);
  Vector v_star;
  Vector w0;  // student space, unit norm
  double eta = 0.0;
  QuerySet basis;
  double map_residual = 0.0;
  bool map_flagged = false;  // fitted map residual above 1e-6
  bool shared_space = false;
};

Problem build_problem(const ExperimentConfig& config);

/// Runs one teacher on `problem`. Row t is recorded after t teaching steps
/// (every metrics_period steps, plus the initial and final rows). Library
/// errors raised mid-run come back as RunFailure with the rows so far.
Trace run_teacher(const Problem& problem, const ExperimentConfig& config, TeacherKind kind);

Trace run_experiment(const ExperimentConfig& config);

/// Random, omniscient, lazy and active teachers on one forgetting learner.
/// The active teacher examines every exam_period iterations.
std::vector<Trace> run_forgetting_scenario(const ExperimentConfig& config, double sigma_forget);

/// Active teachers taking over at `switch_points` (n_teachers - 1 increasing
/// iterations); each incoming teacher starts with its own background exam.
Trace run_multi_teacher(const ExperimentConfig& config, int n_teachers,
                        const std::vector<std::int64_t>& switch_points);

struct ExpFit {
  double rate = 1.0;      // exp(slope)
  double residual = 0.0;  // RMSE of the log-space fit
  std::size_t rows_used = 0;
};

/// Least-squares fit of log(param_dist) against iteration over rows with
/// param_dist > 1e-12. Needs at least 10 such rows.
ExpFit exponential_fit(const std::vector<TraceRow>& rows);

/// Rows from the start up to and including the first one with
/// param_dist <= fraction * initial (all rows if never reached).
std::vector<TraceRow> rows_until_fraction(const std::vector<TraceRow>& rows, double fraction);

/// Teaching samples at the first row with param_dist <= fraction * initial.
std::optional<std::int64_t> samples_to_threshold(const std::vector<TraceRow>& rows,
                                                 double fraction);

/// Median param_dist over the last 10% of rows (at least one row).
double plateau(const std::vector<TraceRow>& rows);

double median(std::vector<double> values);

}  // namespace teachsim
