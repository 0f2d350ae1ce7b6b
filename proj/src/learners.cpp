#include "teachsim/learners.hpp"

#include <cmath>
#include <string>

#include "teachsim/errors.hpp"
#include "teachsim/rng.hpp"

namespace teachsim {

namespace {

void require_sign_label(LossKind loss, double y) {
  if (loss != LossKind::square && y != 1.0 && y != -1.0) {
    throw InvalidArgument("classification loss needs a label in {-1, +1}, got " +
                          std::to_string(y));
  }
}

// log(1 + exp(m)) without overflow.
double softplus(double m) {
  if (m > 30.0) return m + std::log1p(std::exp(-m));
  return std::log1p(std::exp(m));
}

}  // namespace

LossKind parse_loss(std::string_view s) {
  if (s == "square") return LossKind::square;
  if (s == "logistic") return LossKind::logistic;
  if (s == "hinge") return LossKind::hinge;
  throw InvalidArgument("unknown loss '" + std::string(s) + "'");
}

FeedbackKind parse_feedback(std::string_view s) {
  if (s == "identity") return FeedbackKind::identity;
  if (s == "sigmoid") return FeedbackKind::sigmoid;
  if (s == "sign") return FeedbackKind::sign;
  if (s == "hinge_value") return FeedbackKind::hinge_value;
  throw InvalidArgument("unknown feedback '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::square: return "square";
    case LossKind::logistic: return "logistic";
    case LossKind::hinge: return "hinge";
  }
  return "?";
}

std::string_view to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::identity: return "identity";
    case FeedbackKind::sigmoid: return "sigmoid";
    case FeedbackKind::sign: return "sign";
    case FeedbackKind::hinge_value: return "hinge_value";
  }
  return "?";
}

double lipschitz_smooth(LossKind k) {
  switch (k) {
    case LossKind::square: return 1.0;
    case LossKind::logistic: return 0.25;
    case LossKind::hinge: return 1.0;
  }
  return 1.0;
}

bool is_classification(LossKind k) { return k != LossKind::square; }

double loss_value(LossKind loss, double z, double y) {
  require_sign_label(loss, y);
  switch (loss) {
    case LossKind::square: return 0.5 * (z - y) * (z - y);
    case LossKind::logistic: return softplus(-y * z);
    case LossKind::hinge: return std::max(1.0 - y * z, 0.0);
  }
  return 0.0;
}

double loss_grad_scalar(LossKind loss, double z, double y) {
  require_sign_label(loss, y);
  switch (loss) {
    case LossKind::square: return z - y;
    case LossKind::logistic: return -y / (1.0 + std::exp(y * z));
    // Subgradient 0 at the kink yz = 1.
    case LossKind::hinge: return y * z < 1.0 ? -y : 0.0;
  }
  return 0.0;
}

double feedback_value(FeedbackKind f, double z) {
  switch (f) {
    case FeedbackKind::identity: return z;
    case FeedbackKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case FeedbackKind::sign: return z >= 0.0 ? 1.0 : -1.0;
    case FeedbackKind::hinge_value: return std::max(0.0, z);
  }
  return z;
}

LearnerState sgd_step(const LearnerState& s, const Vector& x_tilde, double y) {
  require_dim(x_tilde, s.w.size(), "sgd_step");
  LearnerState next = s;
  const double beta = loss_grad_scalar(s.loss, s.w.dot(x_tilde), y);
  next.w.noalias() -= (s.eta * beta) * x_tilde;
  ++next.step;
  return next;
}

LearnerState forgetting_step(const LearnerState& s, const Vector& x_tilde, double y) {
  LearnerState next = sgd_step(s, x_tilde, y);
  const double sigma = s.forgetting.sigma_forget;
  if (sigma > 0.0) {
    Rng rng(derive_seed(s.rng_seed, s.step));
    for (Index i = 0; i < next.w.size(); ++i) next.w(i) += sigma * rng.normal();
  }
  return next;
}

double respond(const LearnerState& s, const Vector& x_tilde) {
  require_dim(x_tilde, s.w.size(), "respond");
  return feedback_value(s.feedback, s.w.dot(x_tilde));
}

double training_objective(const LearnerState& s, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("training_objective: empty dataset");
  if (data.dim() != s.w.size()) {
    throw DimensionError("training_objective: data dimension " + std::to_string(data.dim()) +
                         " does not match learner dimension " + std::to_string(s.w.size()));
  }
  const Vector z = data.features * s.w;
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) total += loss_value(s.loss, z(i), data.labels(i));
  return total / static_cast<double>(data.size());
}

Student::Student(LearnerState state, FeatureMap map)
    : state_(std::move(state)), map_(std::move(map)) {
  require_dim(state_.w, map_.student_dim(), "Student");
  if (!(state_.eta >= 0.0)) throw InvalidArgument("Student: learning rate must be >= 0");
  teacher_view_ = conjugate_apply(map_, state_.w);
}

double Student::answer(const Vector& query) {
  require_dim(query, map_.teacher_dim(), "Student::answer");
  ++queries_;
  // <w, G q> evaluated through the adjoint, which is cached after each update.
  return feedback_value(state_.feedback, teacher_view_.dot(query));
}

void Student::teach(const Vector& x, double y) {
  state_ = forgetting_step(state_, apply_map(map_, x), y);
  teacher_view_ = conjugate_apply(map_, state_.w);
  ++teaching_samples_;
}

}  // namespace teachsim
