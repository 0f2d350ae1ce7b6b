#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "teachsim/errors.hpp"
#include "teachsim/learners.hpp"

using namespace teachsim;

TEST(LossValue, HandValues) {
  EXPECT_DOUBLE_EQ(loss_value(LossKind::square, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(loss_value(LossKind::hinge, 2.0, 1.0), 0.0);
  EXPECT_NEAR(loss_value(LossKind::logistic, 0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_value(LossKind::logistic, 0.0, 1.0), 0.693147, 1e-6);
}

TEST(LossValue, LogisticIsFiniteForHugeMargins) {
  EXPECT_TRUE(std::isfinite(loss_value(LossKind::logistic, -1e4, 1.0)));
  EXPECT_NEAR(loss_value(LossKind::logistic, -1e4, 1.0), 1e4, 1e-9);
  EXPECT_GE(loss_value(LossKind::logistic, 1e4, 1.0), 0.0);
}

TEST(LossValue, ClassificationRejectsOtherLabels) {
  EXPECT_THROW(loss_value(LossKind::logistic, 0.0, 0.5), InvalidArgument);
  EXPECT_THROW(loss_grad_scalar(LossKind::hinge, 0.0, 2.0), InvalidArgument);
}

TEST(LossGrad, HandValues) {
  EXPECT_DOUBLE_EQ(loss_grad_scalar(LossKind::square, 0.3, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(loss_grad_scalar(LossKind::hinge, 2.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(loss_grad_scalar(LossKind::logistic, 0.0, 1.0), -0.5);
  // Kink taken as inactive.
  EXPECT_DOUBLE_EQ(loss_grad_scalar(LossKind::hinge, 1.0, 1.0), 0.0);
}

TEST(LossGrad, MatchesCentralDifferences) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> zdist(-5.0, 5.0);
  for (LossKind k : {LossKind::square, LossKind::logistic, LossKind::hinge}) {
    int checked = 0;
    while (checked < 100) {
      const double z = zdist(gen);
      const double y = k == LossKind::square ? zdist(gen) : (gen() % 2 ? 1.0 : -1.0);
      if (k == LossKind::hinge && std::abs(y * z - 1.0) < 1e-4) continue;
      const double fd = oracle::central_difference(k, z, y);
      const double b = loss_grad_scalar(k, z, y);
      EXPECT_LE(std::abs(b - fd) / std::max(1.0, std::abs(fd)), 1e-5) << z << " " << y;
      ++checked;
    }
  }
}

TEST(Feedback, Values) {
  LearnerState s;
  s.w = (Vector(2) << 1, 1).finished();
  s.feedback = FeedbackKind::identity;
  EXPECT_DOUBLE_EQ(respond(s, (Vector(2) << 2, 3).finished()), 5.0);
  EXPECT_DOUBLE_EQ(feedback_value(FeedbackKind::sign, -0.2), -1.0);
  EXPECT_DOUBLE_EQ(feedback_value(FeedbackKind::sign, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(feedback_value(FeedbackKind::sigmoid, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(feedback_value(FeedbackKind::hinge_value, -3.0), 0.0);
  EXPECT_DOUBLE_EQ(feedback_value(FeedbackKind::hinge_value, 3.0), 3.0);
  // Stateless.
  const Vector x = (Vector(2) << 0.3, -0.1).finished();
  EXPECT_EQ(respond(s, x), respond(s, x));
}

TEST(SgdStep, HandComputation) {
  LearnerState s;
  s.w = Vector::Zero(2);
  s.eta = 0.5;
  s.loss = LossKind::square;
  const LearnerState next = sgd_step(s, Vector::Unit(2, 0), 1.0);
  EXPECT_EQ(next.w, (Vector(2) << 0.5, 0.0).finished());
  EXPECT_EQ(s.w, Vector::Zero(2));  // input untouched
  EXPECT_EQ(next.step, s.step + 1);
}

TEST(SgdStep, ZeroGradientAndZeroRateLeaveWUnchanged) {
  LearnerState s;
  s.w = (Vector(2) << 1.0, 2.0).finished();
  s.eta = 0.3;
  s.loss = LossKind::square;
  const Vector x = (Vector(2) << 1.0, 1.0).finished();
  EXPECT_EQ(sgd_step(s, x, 3.0).w, s.w);
  s.eta = 0.0;
  EXPECT_EQ(sgd_step(s, x, -7.0).w, s.w);
  EXPECT_THROW(sgd_step(s, Vector::Zero(3), 1.0), DimensionError);
}

TEST(SgdStep, DescentForSquareLossWithSmallStep) {
  std::mt19937_64 gen(12);
  for (int k = 0; k < 50; ++k) {
    LearnerState s;
    s.w = oracle::gaussian_vec(5, gen);
    const Vector x = oracle::gaussian_vec(5, gen);
    s.eta = 1.9 / x.squaredNorm();
    s.loss = LossKind::square;
    const double y = oracle::gaussian_vec(1, gen)(0);
    const double before = loss_value(LossKind::square, s.w.dot(x), y);
    const double after = loss_value(LossKind::square, sgd_step(s, x, y).w.dot(x), y);
    EXPECT_LE(after, before + 1e-15);
  }
}

TEST(ForgettingStep, ZeroSigmaIsBitIdenticalToSgd) {
  std::mt19937_64 gen(13);
  LearnerState s;
  s.w = oracle::gaussian_vec(6, gen);
  s.eta = 0.1;
  s.loss = LossKind::logistic;
  s.rng_seed = 99;
  const Vector x = oracle::gaussian_vec(6, gen);
  EXPECT_EQ(forgetting_step(s, x, 1.0).w, sgd_step(s, x, 1.0).w);
}

TEST(ForgettingStep, NoiseVarianceMonteCarlo) {
  LearnerState s;
  const Index d = 10;
  s.w = Vector::Zero(d);
  s.eta = 0.0;
  s.loss = LossKind::square;
  s.forgetting.sigma_forget = 0.1;
  s.rng_seed = 5;
  double acc = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const LearnerState next = forgetting_step(s, Vector::Zero(d), 0.0);
    acc += (next.w - s.w).squaredNorm() / static_cast<double>(d);
    s = next;
  }
  EXPECT_NEAR(acc / draws, 0.01, 0.05 * 0.01);
}

TEST(ForgettingStep, DeterministicPerSeedAndPureNoiseAtZeroRate) {
  LearnerState s;
  s.w = Vector::Ones(4);
  s.eta = 0.0;
  s.loss = LossKind::square;
  s.forgetting.sigma_forget = 0.1;
  s.rng_seed = 77;
  const Vector x = Vector::Ones(4);
  const LearnerState a = forgetting_step(s, x, 0.0), b = forgetting_step(s, x, 0.0);
  EXPECT_EQ(a.w, b.w);
  EXPECT_GT((a.w - s.w).norm(), 0.0);
  s.rng_seed = 78;
  EXPECT_NE(forgetting_step(s, x, 0.0).w, a.w);
}

TEST(TrainingObjective, MeanOfLosses) {
  LearnerState s;
  s.w = (Vector(1) << 1.0).finished();
  s.loss = LossKind::square;
  Dataset data;
  data.features = Matrix::Ones(2, 1);
  // losses 0.5 * (1 - y)^2 = 0.2 and 0.4
  data.labels = (Vector(2) << 1.0 - std::sqrt(0.4), 1.0 + std::sqrt(0.8)).finished();
  EXPECT_NEAR(training_objective(s, data), 0.3, 1e-12);
  Dataset one;
  one.features = Matrix::Constant(1, 1, 2.0);
  one.labels = Vector::Constant(1, 1.0);
  EXPECT_DOUBLE_EQ(training_objective(s, one), loss_value(LossKind::square, 2.0, 1.0));
  Dataset perfect;
  perfect.features = Matrix::Identity(3, 1);
  perfect.labels = perfect.features.col(0);
  EXPECT_DOUBLE_EQ(training_objective(s, perfect), 0.0);
  EXPECT_THROW(training_objective(s, Dataset{}), InvalidArgument);
}

TEST(Student, CountsCallsAndMapsExamples) {
  LearnerState s;
  s.w = (Vector(2) << 1.0, -1.0).finished();
  s.eta = 0.5;
  s.loss = LossKind::square;
  s.feedback = FeedbackKind::identity;
  Matrix g(2, 2);
  g << 2, 0, 0, 1;
  Student student(s, FeatureMap(g));
  EXPECT_EQ(student.teacher_view(), (Vector(2) << 2.0, -1.0).finished());
  EXPECT_DOUBLE_EQ(student.answer(Vector::Unit(2, 0)), 2.0);
  EXPECT_EQ(student.queries(), 1);
  student.teach(Vector::Unit(2, 0), 0.0);  // x~ = (2, 0), beta = 2
  EXPECT_EQ(student.teaching_samples(), 1);
  EXPECT_EQ(student.state().w, (Vector(2) << -1.0, -1.0).finished());
  EXPECT_EQ(student.teacher_view(), conjugate_apply(student.map(), student.state().w));
}
