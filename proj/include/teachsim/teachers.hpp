#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "teachsim/exam.hpp"
#include "teachsim/feature_space.hpp"
#include "teachsim/learners.hpp"
#include "teachsim/rng.hpp"

namespace teachsim {

enum class ModeKind { synthesis, combination, pool, rescalable_pool };
ModeKind parse_mode_kind(std::string_view s);
std::string_view to_string(ModeKind k);

// Where pool-mode labels come from. `data` keeps the pool label (scaled with
// gamma for regression, flipped with sign(gamma) for classification).
// `teacher` lets the teacher pick the label: its own prediction <v*, x> for
// regression, the better of +1 and -1 for classification.
enum class LabelSource { data, teacher };
LabelSource parse_label_source(std::string_view s);
std::string_view to_string(LabelSource s);

struct TeachingMode {
  ModeKind kind = ModeKind::rescalable_pool;
  double norm_bound = 1e3;  // R
  Dataset pool;             // teacher-space candidates (pool modes) or D (combination)
  std::vector<double> gamma_grid;  // empty selects default_gamma_grid()
  LabelSource labels = LabelSource::teacher;
  // Selection metric for pool modes. Candidates lie in span(D), so the span
  // and ambient objectives coincide; the flag is carried for reporting.
  bool span_metric = false;
};

/// 41 log-spaced magnitudes in [1e-2, 1e2], each with both signs, ordered by
/// increasing |gamma| (negative first).
std::vector<double> default_gamma_grid();

struct ETCheckReport {
  double gamma_beta = 0.0;
  double upper_bound = 0.0;  // 2 (1 - lambda) sigma_min / (eta sigma_max^2)
  bool satisfied = false;
};

struct SelectedExample {
  Vector x;  // teacher space, already scaled by gamma
  double y = 0.0;
  double gamma = 1.0;
  double objective = std::numeric_limits<double>::quiet_NaN();  // NaN for random picks
  Index index = -1;  // pool row, -1 for synthesized examples
  std::optional<ETCheckReport> et;
};

/// eta^2 beta^2 ||x||^2 - 2 eta beta <v - v*, x>, beta = d loss / d <v, x>.
/// Equals ||v+ - v*||^2 - ||v - v*||^2 for the virtual update v+.
double omniscient_objective(const Vector& v, const Vector& v_star, double eta, LossKind loss,
                            const Vector& x, double y);

/// v - eta beta(<v, x>, y) x.
Vector virtual_update(const Vector& v, double eta, LossKind loss, const Vector& x, double y);

ETCheckReport et_condition_check(double gamma, double beta, double eta,
                                 const SpectralStats& spectral, double lambda);

/// Exact argmin of the objective over pool x gamma grid (x labels); ties go
/// to the lowest pool index, then the smallest |gamma|, then label +1.
SelectedExample select_pool(const Vector& v, const Vector& v_star, const TeachingMode& mode,
                            double eta, LossKind loss);

/// x = gamma (v - v*) with gamma searched on [-R/||v - v*||, R/||v - v*||].
/// Throws TeachingComplete when v == v*.
SelectedExample select_synthesis(const Vector& v, const Vector& v_star, double eta, LossKind loss,
                                 double norm_bound, const SpectralStats& spectral, double lambda);

/// Synthesis along the projection of v - v* onto span(D).
SelectedExample select_combination(const Vector& v, const Vector& v_star, const SpanMetric& span,
                                   double eta, LossKind loss, double norm_bound,
                                   const SpectralStats& spectral, double lambda);

/// Uniform draw from the pool with gamma = 1 and the pool label.
SelectedExample random_select(const Dataset& pool, Rng& rng);

/// Monte Carlo upper estimate of the pool volume: the minimum over `n_dirs`
/// random unit directions w in span(D) of max_x <w, x>_D. Direction j depends
/// only on (seed, j), so more directions never raise the estimate.
double pool_volume(const SpanMetric& span, const Matrix& pool_columns, int n_dirs,
                   std::uint64_t seed);

enum class TeacherKind { random, omniscient, lazy, active };
TeacherKind parse_teacher_kind(std::string_view s);
std::string_view to_string(TeacherKind k);

// `automatic`: one background exam for a unitary map, otherwise every
// exam_period iterations. `periodic`: every exam_period iterations regardless.
enum class ExamSchedule { automatic, periodic };
ExamSchedule parse_exam_schedule(std::string_view s);
std::string_view to_string(ExamSchedule s);

struct TeacherSettings {
  TeacherKind kind = TeacherKind::active;
  int exam_period = 1;
  ExamSchedule schedule = ExamSchedule::automatic;
  double stop_tolerance = 1e-6;
  double lambda = 0.5;
};

/// Everything the teacher is allowed to know about the problem.
struct TeacherContext {
  Vector v_star;
  double eta = 1e-4;
  LossKind loss = LossKind::square;
  SpectralStats spectral;  // of G^T G
  bool map_unitary = true;
  QuerySet basis;
  RecoveryConfig recovery;
  // ||G^T w|| for sign-feedback exams (the known-norm assumption).
  std::function<double()> norm_oracle;
  std::uint64_t seed = 0;
};

struct StepOutcome {
  bool stopped = false;
  bool examined = false;
  std::int64_t exam_queries = 0;
  SelectedExample example;
};

/// One teaching policy driving one Student. Only the omniscient teacher reads
/// the student's parameters; the others go through answer() and teach().
class Teacher {
 public:
  Teacher(TeacherSettings settings, TeachingMode mode, TeacherContext context);

  /// One iteration: exam if due, stop check, select, virtual update, teach.
  StepOutcome step(Student& student);

  /// Exam right now (a teacher taking over a learner). Returns the queries
  /// used; 0 for teachers that never examine.
  std::int64_t background_exam(Student& student);

  TeacherKind kind() const noexcept { return settings_.kind; }
  /// Current virtual learner (empty before the first exam, or for random).
  const Vector& virtual_learner() const noexcept { return v_; }
  double est_error() const noexcept { return est_error_; }
  std::int64_t iteration() const noexcept { return t_; }
  const std::optional<ExamResult>& last_exam() const noexcept { return last_exam_; }

 private:
  bool exam_due() const;
  void examine(Student& student, StepOutcome& out);
  SelectedExample select(const Vector& v) const;

  TeacherSettings settings_;
  TeachingMode mode_;
  TeacherContext ctx_;
  std::optional<SpanMetric> span_;
  Rng rng_;
  Vector v_;
  double est_error_ = 0.0;
  std::int64_t t_ = 0;
  std::optional<std::int64_t> last_exam_at_;
  std::optional<ExamResult> last_exam_;
};

}  // namespace teachsim
