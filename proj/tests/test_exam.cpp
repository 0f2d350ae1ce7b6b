#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "teachsim/errors.hpp"
#include "teachsim/exam.hpp"

using namespace teachsim;

namespace {

Student make_student(const Vector& w, const FeatureMap& g, FeedbackKind f, double eta = 0.1,
                     LossKind loss = LossKind::square) {
  LearnerState s;
  s.w = w;
  s.eta = eta;
  s.loss = loss;
  s.feedback = f;
  return Student(s, g);
}

double sin_angle(const Vector& a, const Vector& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

}  // namespace

TEST(Queries, BasisSetsAreFullRank) {
  const QuerySet q3 = make_basis_queries(3, 1);
  EXPECT_EQ(q3.size(), 3);
  EXPECT_EQ(Eigen::FullPivLU<Matrix>(q3.as_rows()).rank(), 3);
  const QuerySet e = make_standard_basis_queries(4);
  EXPECT_EQ(e.as_rows(), Matrix::Identity(4, 4));
  const QuerySet q50 = make_basis_queries(50, 9);
  Eigen::JacobiSVD<Matrix> svd(q50.as_rows());
  EXPECT_GT(svd.singularValues().minCoeff(), 1e-8);
  EXPECT_EQ(make_basis_queries(5, 2).as_rows(), make_basis_queries(5, 2).as_rows());
}

TEST(Queries, PairedSetAlternatesSigns) {
  const QuerySet b = make_basis_queries(3, 4);
  const QuerySet p = make_paired_queries(b);
  ASSERT_EQ(p.size(), 6);
  EXPECT_EQ(p.kind, QueryKind::paired_2d);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(p.queries[2 * i], b.queries[i]);
    EXPECT_EQ(p.queries[2 * i + 1], -b.queries[i]);
  }
}

TEST(ExactBijective, StandardBasisReadsWDirectly) {
  const Vector w = (Vector(3) << 0.5, -1.25, 2.0).finished();
  Student s = make_student(w, FeatureMap::identity(3), FeedbackKind::identity);
  const ExamResult r = construct_virtual_learner(s, RecoveryConfig{}, make_standard_basis_queries(3));
  EXPECT_LE((r.v_hat - w).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r.queries_used, 3);
  EXPECT_EQ(r.branch, RecoveryBranch::exact_bijective);
}

TEST(ExactBijective, ZeroLearnerGivesZero) {
  Student s = make_student(Vector::Zero(4), random_map(4, MapKind::general, 3), FeedbackKind::identity);
  const ExamResult r = construct_virtual_learner(s, RecoveryConfig{}, make_basis_queries(4, 1));
  EXPECT_LE(r.v_hat.norm(), 1e-15);
}

TEST(ExactRecovery, MatchesConjugateApplyOracle) {
  std::mt19937_64 gen(21);
  for (FeedbackKind f : {FeedbackKind::identity, FeedbackKind::sigmoid, FeedbackKind::hinge_value}) {
    for (int k = 0; k < 50; ++k) {
      const Index d = 50;
      const FeatureMap g = random_map(d, k % 2 ? MapKind::general : MapKind::unitary, 500 + k);
      const Vector w = oracle::gaussian_vec(d, gen);
      Student s = make_student(w, g, f);
      const ExamResult r =
          construct_virtual_learner(s, RecoveryConfig{}, make_basis_queries(d, 900 + k, 1e-2));
      EXPECT_LE((r.v_hat - conjugate_apply(g, w)).norm(), 1e-8);
      EXPECT_EQ(r.queries_used, f == FeedbackKind::hinge_value ? 2 * d : d);
      EXPECT_EQ(s.queries(), r.queries_used);
      EXPECT_LE(r.residual, 1e-8);
    }
  }
}

TEST(ExactBijective, QueryReuseGivesIdenticalEstimates) {
  std::mt19937_64 gen(22);
  const FeatureMap g = random_map(8, MapKind::general, 5);
  Student s = make_student(oracle::gaussian_vec(8, gen), g, FeedbackKind::sigmoid);
  const QuerySet q = make_basis_queries(8, 6, 1e-2);
  EXPECT_EQ(construct_virtual_learner(s, RecoveryConfig{}, q).v_hat,
            construct_virtual_learner(s, RecoveryConfig{}, q).v_hat);
}

TEST(ExactBijective, SaturatedSigmoidAndRankDeficiencyAreErrors) {
  const QuerySet q = make_standard_basis_queries(2);
  const std::vector<double> saturated = {1.0, 0.5};
  EXPECT_THROW(exact_recover_bijective(q, saturated, FeedbackKind::sigmoid), NumericError);
  QuerySet bad = q;
  bad.queries[1] = bad.queries[0];
  const std::vector<double> ok = {0.3, 0.3};
  EXPECT_THROW(exact_recover_bijective(bad, ok, FeedbackKind::identity), NumericError);
  EXPECT_THROW(exact_recover_bijective(q, ok, FeedbackKind::sign), InvalidArgument);
}

TEST(ExactBijective, NearlySaturatedSigmoidIsClampedAndFlagged) {
  const QuerySet q = make_standard_basis_queries(2);
  const std::vector<double> r = {1.0 - 1e-15, 0.5};
  const ExamResult out = exact_recover_bijective(q, r, FeedbackKind::sigmoid);
  EXPECT_TRUE(out.saturated);
  EXPECT_TRUE(std::isfinite(out.v_hat(0)));
}

TEST(ExactHinge, OneSidedAndZeroResponses) {
  // <w, z_i> > 0 for every basis vector: the positive-side equations are used.
  const Vector w = (Vector(3) << 1.0, 2.0, 3.0).finished();
  Student s = make_student(w, FeatureMap::identity(3), FeedbackKind::hinge_value);
  const ExamResult r = construct_virtual_learner(s, RecoveryConfig{}, make_standard_basis_queries(3));
  EXPECT_LE((r.v_hat - w).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r.branch, RecoveryBranch::exact_hinge);

  const Vector w0 = (Vector(3) << 1.0, 0.0, -2.0).finished();
  Student s0 = make_student(w0, FeatureMap::identity(3), FeedbackKind::hinge_value);
  const ExamResult r0 =
      construct_virtual_learner(s0, RecoveryConfig{}, make_standard_basis_queries(3));
  EXPECT_LE((r0.v_hat - w0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(r0.queries_used, 6);
}

TEST(ExactHinge, RandomD20MatchesOracle) {
  std::mt19937_64 gen(23);
  const FeatureMap g = random_map(20, MapKind::general, 8);
  const Vector w = oracle::gaussian_vec(20, gen);
  Student s = make_student(w, g, FeedbackKind::hinge_value);
  const ExamResult r = construct_virtual_learner(s, RecoveryConfig{}, make_basis_queries(20, 3));
  EXPECT_LE((r.v_hat - conjugate_apply(g, w)).norm(), 1e-8);
}

TEST(SignRecovery, RequiresKnownNorm) {
  Student s = make_student(Vector::Ones(3), FeatureMap::identity(3), FeedbackKind::sign);
  EXPECT_THROW(construct_virtual_learner(s, RecoveryConfig{}, make_basis_queries(3, 1)),
               InvalidArgument);
}

TEST(SignRecovery, AlignedStartNeedsNoRound) {
  const Vector truth = Vector::Unit(4, 0) * 2.0;
  auto oracle_fn = [&](const Vector& q) { return truth.dot(q) >= 0.0 ? 1.0 : -1.0; };
  RecoveryConfig c;
  c.eps_est = 1e-6;
  const ExamResult r = approx_recover_sign(oracle_fn, 2.0, c, 4);
  EXPECT_EQ(r.rounds, 0);
  EXPECT_DOUBLE_EQ(sin_angle(r.v_hat, truth), 0.0);
  EXPECT_TRUE(r.reached_target);
}

TEST(SignRecovery, ContractionAgainstKnownDirection) {
  std::mt19937_64 gen(24);
  for (Index d : {2, 10, 50}) {
    for (int k = 0; k < 20; ++k) {
      const Vector truth = oracle::gaussian_vec(d, gen);
      int calls = 0;
      auto oracle_fn = [&](const Vector& q) {
        ++calls;
        return truth.dot(q) >= 0.0 ? 1.0 : -1.0;
      };
      RecoveryConfig c;
      c.eps_est = 1e-3;
      const ExamResult r = approx_recover_sign(oracle_fn, truth.norm(), c, d);
      ASSERT_EQ(r.round_estimates.size(), r.round_sin_bounds.size());
      const double sin0 = sin_angle(r.round_estimates[0], truth);
      for (size_t j = 1; j < r.round_estimates.size(); ++j) {
        EXPECT_LE(sin_angle(r.round_estimates[j], truth),
                  std::pow(0.8, static_cast<double>(j)) * sin0 + 1e-12);
      }
      EXPECT_LE((r.v_hat - truth).norm(), 1e-3);
      EXPECT_EQ(r.queries_used, calls);
    }
  }
}

TEST(SignRecovery, ScaleInvariance) {
  std::mt19937_64 gen(25);
  const Vector truth = oracle::gaussian_vec(6, gen);
  std::vector<double> a1, a3;
  auto o1 = [&](const Vector& q) {
    a1.push_back(truth.dot(q) >= 0 ? 1.0 : -1.0);
    return a1.back();
  };
  auto o3 = [&](const Vector& q) {
    a3.push_back((3.0 * truth).dot(q) >= 0 ? 1.0 : -1.0);
    return a3.back();
  };
  RecoveryConfig c;
  const ExamResult r1 = approx_recover_sign(o1, truth.norm(), c, 6);
  // Same norm argument: only the oracle's internal scale differs.
  const ExamResult r3 = approx_recover_sign(o3, truth.norm(), c, 6);
  EXPECT_EQ(a1, a3);
  EXPECT_EQ(r1.v_hat, r3.v_hat);
}

TEST(SignRecovery, DispatchThroughStudentWithKnownNorm) {
  std::mt19937_64 gen(26);
  const FeatureMap g = random_map(10, MapKind::general, 4);
  const Vector w = oracle::gaussian_vec(10, gen);
  Student s = make_student(w, g, FeedbackKind::sign);
  RecoveryConfig c;
  c.eps_est = 0.01;
  c.known_norm = conjugate_apply(g, w).norm();
  const ExamResult r = construct_virtual_learner(s, c, make_basis_queries(10, 1));
  EXPECT_EQ(r.branch, RecoveryBranch::approximate_sign);
  EXPECT_LE((r.v_hat - conjugate_apply(g, w)).norm(), 0.01);
  EXPECT_EQ(r.queries_used, s.queries());
}

TEST(LearningRate, RecoversEtaWithTwoExamsAndOneSample) {
  std::mt19937_64 gen(27);
  for (double eta : {1e-4, 1e-2, 0.5}) {
    for (int k = 0; k < 7; ++k) {
      const Index d = 10;
      const FeatureMap g = random_map(d, MapKind::unitary, 40 + k);
      Student s = make_student(oracle::gaussian_vec(d, gen), g, FeedbackKind::identity, eta);
      Dataset pool;
      pool.features = oracle::gaussian(30, d, gen);
      pool.labels = oracle::gaussian_vec(30, gen);
      const LearningRateEstimate e =
          estimate_learning_rate(s, pool, make_basis_queries(d, 3), RecoveryConfig{});
      EXPECT_LE(std::abs(e.eta_hat - eta) / eta, 1e-6);
      EXPECT_EQ(e.interactions, 2 * d + 1);
      EXPECT_EQ(s.queries() + s.teaching_samples(), 2 * d + 1);
    }
  }
}

TEST(LearningRate, LogisticSigmoidAndZeroRate) {
  std::mt19937_64 gen(28);
  const Index d = 10;
  const FeatureMap g = random_map(d, MapKind::unitary, 9);
  Dataset pool;
  pool.features = oracle::gaussian(40, d, gen);
  pool.labels = Vector::Ones(40);
  for (Index i = 0; i < 40; i += 2) pool.labels(i) = -1.0;
  Student s = make_student(0.1 * oracle::gaussian_vec(d, gen), g, FeedbackKind::sigmoid, 0.5,
                           LossKind::logistic);
  const LearningRateEstimate e =
      estimate_learning_rate(s, pool, make_basis_queries(d, 3, 1e-2), RecoveryConfig{});
  EXPECT_LE(std::abs(e.eta_hat - 0.5) / 0.5, 1e-6);

  Student z = make_student(oracle::gaussian_vec(d, gen), g, FeedbackKind::identity, 0.0);
  pool.labels = oracle::gaussian_vec(40, gen);
  EXPECT_EQ(estimate_learning_rate(z, pool, make_basis_queries(d, 3), RecoveryConfig{}).eta_hat, 0.0);
}

TEST(LearningRate, SignFeedbackRefused) {
  Student s = make_student(Vector::Ones(3), FeatureMap::identity(3), FeedbackKind::sign);
  Dataset pool;
  pool.features = Matrix::Identity(3, 3);
  pool.labels = Vector::Ones(3);
  EXPECT_THROW(estimate_learning_rate(s, pool, make_basis_queries(3, 1), RecoveryConfig{}),
               InvalidArgument);
}
