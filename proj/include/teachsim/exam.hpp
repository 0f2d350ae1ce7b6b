#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "teachsim/feature_space.hpp"
#include "teachsim/learners.hpp"

namespace teachsim {

enum class QueryKind { basis_d, paired_2d, synthesized_active };

/// Teacher-space exam questions.
struct QuerySet {
  std::vector<Vector> queries;
  QueryKind kind = QueryKind::basis_d;

  Index size() const noexcept { return static_cast<Index>(queries.size()); }
  /// Query matrix with one query per row.
  Matrix as_rows() const;
};

/// d random orthonormal directions scaled to length `scale`. Reusable across
/// iterations for the same learner.
QuerySet make_basis_queries(Index d, std::uint64_t seed, double scale = 1.0);
QuerySet make_standard_basis_queries(Index d, double scale = 1.0);
/// Extends a basis set to (z_1, -z_1, ..., z_d, -z_d).
QuerySet make_paired_queries(const QuerySet& basis);

enum class RecoveryBranch { exact_bijective, exact_hinge, approximate_sign };
std::string_view to_string(RecoveryBranch b);

struct ExamResult {
  Vector v_hat;
  std::int64_t queries_used = 0;
  RecoveryBranch branch = RecoveryBranch::exact_bijective;
  double residual = 0.0;     // exact branches: max |Q v_hat - b|
  double angle_bound = 0.0;  // approximate branch: certified sin(angle) of the direction
  double est_error = 0.0;    // bound on ||v_hat - G^T w|| (exact: the residual)
  bool reached_target = true;
  bool saturated = false;    // a sigmoid response was clamped before inversion
  int rounds = 0;
  // Approximate branch: unit direction estimate and its certified sin bound
  // after each refinement round; entry 0 is the oriented starting direction.
  std::vector<Vector> round_estimates;
  std::vector<double> round_sin_bounds;
};

struct RecoveryConfig {
  double eps_est = 1e-3;
  double delta = 0.05;  // carried for reporting; the refinement scheme is deterministic
  double lambda = 0.5;
  std::optional<double> known_norm;  // ||G^T w||, required for sign feedback
  int max_rounds = 200;
  double contraction_rho = 0.8;
  double query_scale = 1e-2;  // length of exact-recovery queries
};

/// Answers sign(<w, G q>) for a teacher-space query q.
using SignOracle = std::function<double(const Vector&)>;

/// Solves <v, q_j> = F^{-1}(response_j) for identity or sigmoid feedback.
ExamResult exact_recover_bijective(const QuerySet& queries, std::span<const double> responses,
                                   FeedbackKind feedback);

/// Hinge-value feedback on paired queries: per pair keep the equation whose
/// response is non-zero; if both are zero the inner product is exactly 0.
ExamResult exact_recover_hinge(const QuerySet& paired, std::span<const double> responses);

/// Direction refinement from 1-bit answers, rescaled by the known norm.
/// `initial` seeds the direction estimate (default e_1).
ExamResult approx_recover_sign(const SignOracle& oracle, std::optional<double> norm,
                               const RecoveryConfig& config, Index d,
                               const Vector* initial = nullptr);

/// Examines the student and reconstructs v ~ G^T w, dispatching on the
/// student's feedback kind. `basis` must be a basis_d set.
ExamResult construct_virtual_learner(Student& student, const RecoveryConfig& config,
                                     const QuerySet& basis, const Vector* initial = nullptr);

struct LearningRateEstimate {
  double eta_hat = 0.0;
  std::int64_t interactions = 0;  // 2m exam queries + 1 training sample
  Index probe_index = -1;
  int coordinates_used = 0;
};

/// Exam, one training step on a probe example from `pool` (teacher space),
/// exam again; eta is the mean of the element-wise ratio of the parameter change
/// to the gradient. Assumes G^T G = I so teacher-space gradients match.
LearningRateEstimate estimate_learning_rate(Student& student, const Dataset& pool,
                                            const QuerySet& basis, const RecoveryConfig& config);

}  // namespace teachsim
