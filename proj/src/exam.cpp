#include "teachsim/exam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "teachsim/errors.hpp"

namespace teachsim {

namespace {

constexpr double kSolveThreshold = 1e-10;
constexpr double kSigmoidClamp = 1e-12;
// Angular width below which a tangent coordinate is no longer refined; answers
// at this resolution are dominated by rounding in the learner's dot product.
constexpr double kAngleFloor = 1e-14;
// Direction error treated as exact (covered by the 1e-12 slack of the contract).
constexpr double kAbsoluteSinFloor = 5e-13;
constexpr double kHalfPi = std::numbers::pi / 2.0;

Vector solve_rows(const Matrix& rows, const Vector& rhs, double* residual) {
  Eigen::ColPivHouseholderQR<Matrix> qr(rows);
  qr.setThreshold(kSolveThreshold);
  if (qr.rank() < rows.cols()) {
    throw NumericError("query matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                       " of " + std::to_string(rows.cols()) + ")");
  }
  Vector v = qr.solve(rhs);
  *residual = rows.rows() > 0 ? (rows * v - rhs).cwiseAbs().maxCoeff() : 0.0;
  return v;
}

// Chord length between unit vectors whose angle has sine at most s (angle acute).
double chord_from_sin(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return 2.0 * std::sin(0.5 * std::asin(s));
}

}  // namespace

Matrix QuerySet::as_rows() const {
  if (queries.empty()) return Matrix(0, 0);
  Matrix m(size(), queries.front().size());
  for (Index j = 0; j < size(); ++j) m.row(j) = queries[static_cast<size_t>(j)].transpose();
  return m;
}

QuerySet make_basis_queries(Index d, std::uint64_t seed, double scale) {
  if (d < 1) throw InvalidArgument("make_basis_queries: d must be >= 1");
  const Matrix q = random_orthogonal(d, seed);
  QuerySet set;
  set.kind = QueryKind::basis_d;
  for (Index j = 0; j < d; ++j) set.queries.push_back(scale * q.col(j));
  return set;
}

QuerySet make_standard_basis_queries(Index d, double scale) {
  if (d < 1) throw InvalidArgument("make_standard_basis_queries: d must be >= 1");
  QuerySet set;
  set.kind = QueryKind::basis_d;
  for (Index j = 0; j < d; ++j) set.queries.push_back(scale * Vector::Unit(d, j));
  return set;
}

QuerySet make_paired_queries(const QuerySet& basis) {
  QuerySet set;
  set.kind = QueryKind::paired_2d;
  for (const Vector& z : basis.queries) {
    set.queries.push_back(z);
    set.queries.push_back(-z);
  }
  return set;
}

std::string_view to_string(RecoveryBranch b) {
  switch (b) {
    case RecoveryBranch::exact_bijective: return "exact_bijective";
    case RecoveryBranch::exact_hinge: return "exact_hinge";
    case RecoveryBranch::approximate_sign: return "approximate_sign";
  }
  return "?";
}

ExamResult exact_recover_bijective(const QuerySet& queries, std::span<const double> responses,
                                   FeedbackKind feedback) {
  if (feedback != FeedbackKind::identity && feedback != FeedbackKind::sigmoid) {
    throw InvalidArgument("exact_recover_bijective needs identity or sigmoid feedback");
  }
  if (queries.size() == 0 || static_cast<size_t>(queries.size()) != responses.size()) {
    throw DimensionError("exact_recover_bijective: " + std::to_string(queries.size()) +
                         " queries but " + std::to_string(responses.size()) + " responses");
  }
  ExamResult out;
  out.branch = RecoveryBranch::exact_bijective;
  out.queries_used = queries.size();
  Vector rhs(queries.size());
  for (Index j = 0; j < rhs.size(); ++j) {
    double r = responses[static_cast<size_t>(j)];
    if (feedback == FeedbackKind::sigmoid) {
      if (!(r > 0.0 && r < 1.0)) {
        throw NumericError("sigmoid response " + std::to_string(r) +
                           " is saturated; rescale the queries");
      }
      if (r < kSigmoidClamp || r > 1.0 - kSigmoidClamp) {
        r = std::clamp(r, kSigmoidClamp, 1.0 - kSigmoidClamp);
        out.saturated = true;
      }
      r = std::log(r) - std::log1p(-r);
    }
    rhs(j) = r;
  }
  out.v_hat = solve_rows(queries.as_rows(), rhs, &out.residual);
  out.est_error = out.residual;
  return out;
}

ExamResult exact_recover_hinge(const QuerySet& paired, std::span<const double> responses) {
  if (paired.kind != QueryKind::paired_2d || paired.size() % 2 != 0 || paired.size() == 0) {
    throw InvalidArgument("exact_recover_hinge needs a paired query set");
  }
  if (static_cast<size_t>(paired.size()) != responses.size()) {
    throw DimensionError("exact_recover_hinge: response count mismatch");
  }
  const Index d = paired.size() / 2;
  Matrix rows(d, paired.queries.front().size());
  Vector rhs(d);
  for (Index i = 0; i < d; ++i) {
    const auto plus = static_cast<size_t>(2 * i);
    const double r_plus = responses[plus];
    const double r_minus = responses[plus + 1];
    if (r_plus < 0.0 || r_minus < 0.0) throw InvalidArgument("hinge responses must be >= 0");
    if (r_plus > 0.0) {
      rows.row(i) = paired.queries[plus].transpose();
      rhs(i) = r_plus;
    } else if (r_minus > 0.0) {
      rows.row(i) = paired.queries[plus + 1].transpose();
      rhs(i) = r_minus;
    } else {
      rows.row(i) = paired.queries[plus].transpose();
      rhs(i) = 0.0;
    }
  }
  ExamResult out;
  out.branch = RecoveryBranch::exact_hinge;
  out.queries_used = paired.size();
  out.v_hat = solve_rows(rows, rhs, &out.residual);
  out.est_error = out.residual;
  return out;
}

// The unknown unit direction a is written in a fixed frame (alpha, t_1..t_{d-1})
// built around the oriented starting estimate alpha, as a ~ (1, r) with
// r_i = <a, t_i> / <a, alpha> = tan(psi_i). A probe cos(th) t_i - sin(th) alpha
// has answer sign(psi_i - th), so two probes per coordinate trisect the interval
// known to contain psi_i. For r^ built from interval midpoints,
//   sin(a, a^) <= ||r - r^|| / sqrt(1 + ||r||^2),  sin(a, alpha) = ||r|| / sqrt(1 + ||r||^2),
// and the intervals bound ||r - r^|| from above and ||r|| from below. Round k is
// closed once those bounds certify sin_k <= rho^k sin_0 (or sin_k is below
// rounding level), so the contraction holds against the true initial angle.
ExamResult approx_recover_sign(const SignOracle& oracle, std::optional<double> norm,
                               const RecoveryConfig& config, Index d, const Vector* initial) {
  if (!norm.has_value() || !(*norm > 0.0)) {
    throw InvalidArgument("sign-feedback recovery requires the known norm ||G^T w|| > 0");
  }
  if (d < 1) throw InvalidArgument("approx_recover_sign: d must be >= 1");
  if (!(config.contraction_rho > 0.0 && config.contraction_rho < 1.0)) {
    throw InvalidArgument("contraction_rho must lie in (0, 1)");
  }

  ExamResult out;
  out.branch = RecoveryBranch::approximate_sign;

  Vector alpha = Vector::Unit(d, 0);
  if (initial != nullptr) {
    require_dim(*initial, d, "approx_recover_sign initial");
    const double n = initial->norm();
    if (n > 0.0 && std::isfinite(n)) alpha = *initial / n;
  }
  ++out.queries_used;
  if (oracle(alpha) < 0.0) alpha = -alpha;

  const Index m = d - 1;
  Matrix tangents(d, m);
  if (m > 0) {
    const Matrix alpha_col = alpha;
    Eigen::HouseholderQR<Matrix> qr(alpha_col);
    const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    tangents = q.rightCols(m);
  }

  std::vector<double> lo(static_cast<size_t>(m), -kHalfPi);
  std::vector<double> hi(static_cast<size_t>(m), kHalfPi);

  Vector r_hat = Vector::Zero(m);
  auto estimate = [&]() {
    Vector a = alpha;
    if (m > 0) a += tangents * r_hat;
    return Vector(a / a.norm());
  };

  // Returns the certified sin bound and the lower bound on ||r||.
  auto certify = [&](double* r_lower) {
    double err2 = 0.0, low2 = 0.0;
    for (Index i = 0; i < m; ++i) {
      const auto k = static_cast<size_t>(i);
      const double tl = std::tan(lo[k]);
      const double th = std::tan(hi[k]);
      r_hat(i) = 0.5 * (tl + th);
      const double hw = 0.5 * (th - tl);
      err2 += hw * hw;
      if (lo[k] > 0.0) low2 += tl * tl;
      else if (hi[k] < 0.0) low2 += th * th;
    }
    *r_lower = std::sqrt(low2);
    return std::sqrt(err2);
  };

  double r_lower = 0.0;
  double err = certify(&r_lower);
  out.round_estimates.push_back(alpha);
  out.round_sin_bounds.push_back(1.0);

  auto done = [&](double sin_bound) {
    return *norm * chord_from_sin(sin_bound) <= config.eps_est;
  };

  const double rho = config.contraction_rho;
  double sin_bound = 1.0;
  bool finished = (m == 0);
  if (m == 0) sin_bound = 0.0;

  while (!finished) {
    bool refined = false;
    for (Index i = 0; i < m; ++i) {
      const auto k = static_cast<size_t>(i);
      const double width = hi[k] - lo[k];
      if (width <= kAngleFloor) continue;
      const double t1 = lo[k] + width / 3.0;
      const double t2 = lo[k] + 2.0 * width / 3.0;
      const Vector probe1 = std::cos(t1) * tangents.col(i) - std::sin(t1) * alpha;
      const Vector probe2 = std::cos(t2) * tangents.col(i) - std::sin(t2) * alpha;
      const double s1 = oracle(probe1);
      const double s2 = oracle(probe2);
      out.queries_used += 2;
      if (s1 < 0.0) {
        hi[k] = t1;
      } else if (s2 < 0.0) {
        lo[k] = t1;
        hi[k] = t2;
      } else {
        lo[k] = t2;
      }
      refined = true;
    }
    err = certify(&r_lower);
    const double bound = std::min(1.0, err / std::sqrt(1.0 + r_lower * r_lower));

    // Close every round whose certificate is now satisfied.
    while (out.rounds < config.max_rounds &&
           (err <= std::pow(rho, out.rounds + 1) * r_lower || err <= kAbsoluteSinFloor)) {
      ++out.rounds;
      sin_bound = bound;
      out.round_estimates.push_back(estimate());
      out.round_sin_bounds.push_back(sin_bound);
      if (done(sin_bound)) {
        finished = true;
        break;
      }
    }
    // The target can be certified before the contraction bookkeeping closes
    // a round (e.g. when the start direction is already accurate).
    if (!finished && done(bound)) {
      sin_bound = bound;
      finished = true;
    }
    if (finished) break;
    if (out.rounds >= config.max_rounds || !refined) {
      out.reached_target = false;
      sin_bound = bound;
      break;
    }
  }

  const Vector a_hat = estimate();
  out.angle_bound = sin_bound;
  out.est_error = *norm * chord_from_sin(sin_bound);
  out.reached_target = out.reached_target && out.est_error <= config.eps_est;
  out.v_hat = *norm * a_hat;
  return out;
}

ExamResult construct_virtual_learner(Student& student, const RecoveryConfig& config,
                                     const QuerySet& basis, const Vector* initial) {
  const Index d = student.teacher_dim();
  const std::int64_t before = student.queries();
  ExamResult out;
  switch (student.feedback()) {
    case FeedbackKind::identity:
    case FeedbackKind::sigmoid: {
      std::vector<double> responses;
      responses.reserve(basis.queries.size());
      for (const Vector& q : basis.queries) responses.push_back(student.answer(q));
      out = exact_recover_bijective(basis, responses, student.feedback());
      break;
    }
    case FeedbackKind::hinge_value: {
      const QuerySet paired = make_paired_queries(basis);
      std::vector<double> responses;
      responses.reserve(paired.queries.size());
      for (const Vector& q : paired.queries) responses.push_back(student.answer(q));
      out = exact_recover_hinge(paired, responses);
      break;
    }
    case FeedbackKind::sign: {
      const SignOracle oracle = [&student](const Vector& q) { return student.answer(q); };
      out = approx_recover_sign(oracle, config.known_norm, config, d, initial);
      break;
    }
  }
  // Counts come from the student, so they match actual oracle invocations.
  out.queries_used = student.queries() - before;
  return out;
}

LearningRateEstimate estimate_learning_rate(Student& student, const Dataset& pool,
                                            const QuerySet& basis, const RecoveryConfig& config) {
  if (student.feedback() == FeedbackKind::sign) {
    throw InvalidArgument("learning-rate estimation needs exactly recoverable feedback");
  }
  if (pool.size() == 0) throw InvalidArgument("estimate_learning_rate: empty pool");
  require_dim(pool.features.row(0).transpose(), student.teacher_dim(), "estimate_learning_rate");
  const LossKind loss = student.state().loss;
  const std::int64_t q0 = student.queries();
  const std::int64_t t0 = student.teaching_samples();

  const Vector v1 = construct_virtual_learner(student, config, basis).v_hat;

  // Probe: the pool example whose smallest gradient coordinate is largest.
  constexpr double kGradFloor = 1e-8;
  LearningRateEstimate est;
  double best = -1.0;
  for (Index i = 0; i < pool.size(); ++i) {
    const Vector x = pool.features.row(i).transpose();
    const double beta = loss_grad_scalar(loss, v1.dot(x), pool.labels(i));
    const double smallest = (beta * x).cwiseAbs().minCoeff();
    if (smallest > best) {
      best = smallest;
      est.probe_index = i;
    }
  }
  const Vector x = pool.features.row(est.probe_index).transpose();
  const double y = pool.labels(est.probe_index);
  const Vector grad = loss_grad_scalar(loss, v1.dot(x), y) * x;
  if (grad.cwiseAbs().maxCoeff() < kGradFloor) {
    throw NumericError("every pool example has a vanishing gradient; resample the probe");
  }
  student.teach(x, y);
  const Vector v2 = construct_virtual_learner(student, config, basis).v_hat;

  double total = 0.0;
  for (Index j = 0; j < grad.size(); ++j) {
    if (std::abs(grad(j)) < kGradFloor) continue;
    total += (v1(j) - v2(j)) / grad(j);
    ++est.coordinates_used;
  }
  est.eta_hat = total / est.coordinates_used;
  est.interactions = (student.queries() - q0) + (student.teaching_samples() - t0);
  return est;
}

}  // namespace teachsim
