#pragma once

#include <cstdint>
#include <string_view>

#include "teachsim/feature_space.hpp"

namespace teachsim {

enum class LossKind { square, logistic, hinge };
enum class FeedbackKind { identity, sigmoid, sign, hinge_value };

LossKind parse_loss(std::string_view s);
FeedbackKind parse_feedback(std::string_view s);
std::string_view to_string(LossKind k);
std::string_view to_string(FeedbackKind k);

/// Smoothness constant of the loss in its first argument (hinge: 1 on the
/// differentiable region).
double lipschitz_smooth(LossKind k);
bool is_classification(LossKind k);

struct ForgettingConfig {
  double sigma_forget = 0.0;  // per-coordinate std-dev of the post-update deviation
};

/// Student parameters plus everything that shapes how the student learns and
/// answers. A value type: every step returns a new state.
struct LearnerState {
  Vector w;
  double eta = 0.0;
  LossKind loss = LossKind::square;
  FeedbackKind feedback = FeedbackKind::identity;
  ForgettingConfig forgetting;
  std::uint64_t rng_seed = 0;
  std::uint64_t step = 0;  // number of updates applied; keys the forgetting noise
};

/// Rows of `features` are examples.
struct Dataset {
  Matrix features;
  Vector labels;

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }
};

double loss_value(LossKind loss, double z, double y);
/// beta(z, y) = d loss / d z.
double loss_grad_scalar(LossKind loss, double z, double y);
double feedback_value(FeedbackKind f, double z);

/// w <- w - eta * beta(<w, x~>, y) * x~.
LearnerState sgd_step(const LearnerState& s, const Vector& x_tilde, double y);
/// sgd_step followed by an N(0, sigma_forget^2 I) deviation keyed by (rng_seed, step).
LearnerState forgetting_step(const LearnerState& s, const Vector& x_tilde, double y);
/// F(<w, x~>).
double respond(const LearnerState& s, const Vector& x_tilde);
/// Mean loss over the dataset (student-space features).
double training_objective(const LearnerState& s, const Dataset& data);

/// The real learner as seen through the simulation: a LearnerState living in
/// student space behind a feature map. Teachers that are not omniscient only
/// use `answer` and `teach`; both count their calls.
class Student {
 public:
  Student(LearnerState state, FeatureMap map);

  /// Learner feedback for a teacher-space query q, i.e. F(<w, G q>).
  double answer(const Vector& query);
  /// One learning step on the teacher-space example (x, y), perceived as (G x, y).
  void teach(const Vector& x, double y);

  FeedbackKind feedback() const noexcept { return state_.feedback; }
  Index teacher_dim() const noexcept { return map_.teacher_dim(); }
  std::int64_t queries() const noexcept { return queries_; }
  std::int64_t teaching_samples() const noexcept { return teaching_samples_; }

  // Harness-side access, for metrics and omniscient teachers.
  const LearnerState& state() const noexcept { return state_; }
  const FeatureMap& map() const noexcept { return map_; }
  /// G^T w: the ideal virtual learner.
  const Vector& teacher_view() const noexcept { return teacher_view_; }

 private:
  LearnerState state_;
  FeatureMap map_;
  Vector teacher_view_;
  std::int64_t queries_ = 0;
  std::int64_t teaching_samples_ = 0;
};

}  // namespace teachsim
