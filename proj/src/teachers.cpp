#include "teachsim/teachers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teachsim/errors.hpp"

namespace teachsim {

namespace {

constexpr int kGammaGridPoints = 2001;
constexpr double kGoldenWidth = 1e-10;
constexpr double kNullDirection = 1e-12;

// Objective along x = gamma * d, with p = <v, d>, q = <v - v*, d>, n2 = ||d||^2.
double line_objective(double gamma, double p, double q, double n2, double eta, LossKind loss,
                      double y) {
  const double beta = loss_grad_scalar(loss, gamma * p, y);
  return eta * eta * beta * beta * gamma * gamma * n2 - 2.0 * eta * beta * gamma * q;
}

struct LineChoice {
  double gamma = 0.0;
  double y = 0.0;
  double objective = 0.0;
};

// Grid search plus golden-section refinement for one fixed label rule.
template <class LabelFn>
LineChoice line_search(double limit, double p, double q, double n2, double eta, LossKind loss,
                       LabelFn label) {
  auto f = [&](double g) { return line_objective(g, p, q, n2, eta, loss, label(g)); };
  const double step = 2.0 * limit / (kGammaGridPoints - 1);
  int best = 0;
  double best_val = f(-limit);
  for (int k = 1; k < kGammaGridPoints; ++k) {
    const double val = f(-limit + step * k);
    if (val < best_val) {
      best_val = val;
      best = k;
    }
  }
  double a = -limit + step * std::max(best - 1, 0);
  double b = -limit + step * std::min(best + 1, kGammaGridPoints - 1);
  LineChoice choice{-limit + step * best, 0.0, best_val};
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double width = kGoldenWidth * std::max(1.0, limit);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double g = fc < fd ? c : d;
  const double fg = std::min(fc, fd);
  if (fg < choice.objective) {
    choice.gamma = g;
    choice.objective = fg;
  }
  choice.y = label(choice.gamma);
  return choice;
}

SelectedExample synthesize_along(const Vector& v, const Vector& v_star, const Vector& dir,
                                 double eta, LossKind loss, double norm_bound,
                                 const SpectralStats& spectral, double lambda) {
  if (!(norm_bound > 0.0)) throw InvalidArgument("norm bound R must be > 0");
  const double n2 = dir.squaredNorm();
  const double limit = norm_bound / std::sqrt(n2);
  const double p = v.dot(dir);
  const double q = (v - v_star).dot(dir);
  LineChoice best;
  if (loss == LossKind::square) {
    const double s = v_star.dot(dir);
    best = line_search(limit, p, q, n2, eta, loss, [s](double g) { return g * s; });
  } else {
    const LineChoice plus = line_search(limit, p, q, n2, eta, loss, [](double) { return 1.0; });
    const LineChoice minus = line_search(limit, p, q, n2, eta, loss, [](double) { return -1.0; });
    best = minus.objective < plus.objective ? minus : plus;
  }
  SelectedExample out;
  out.gamma = best.gamma;
  out.x = best.gamma * dir;
  out.y = best.y;
  out.objective = omniscient_objective(v, v_star, eta, loss, out.x, out.y);
  const double beta = loss_grad_scalar(loss, v.dot(out.x), out.y);
  out.et = et_condition_check(best.gamma, beta, eta, spectral, lambda);
  return out;
}

}  // namespace

ModeKind parse_mode_kind(std::string_view s) {
  if (s == "synthesis") return ModeKind::synthesis;
  if (s == "combination") return ModeKind::combination;
  if (s == "pool") return ModeKind::pool;
  if (s == "rescalable_pool") return ModeKind::rescalable_pool;
  throw InvalidArgument("unknown teaching mode '" + std::string(s) + "'");
}

std::string_view to_string(ModeKind k) {
  switch (k) {
    case ModeKind::synthesis: return "synthesis";
    case ModeKind::combination: return "combination";
    case ModeKind::pool: return "pool";
    case ModeKind::rescalable_pool: return "rescalable_pool";
  }
  return "?";
}

LabelSource parse_label_source(std::string_view s) {
  if (s == "data") return LabelSource::data;
  if (s == "teacher") return LabelSource::teacher;
  throw InvalidArgument("unknown label source '" + std::string(s) + "'");
}

std::string_view to_string(LabelSource s) {
  return s == LabelSource::data ? "data" : "teacher";
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  grid.reserve(82);
  for (int k = 0; k < 41; ++k) {
    const double mag = std::pow(10.0, -2.0 + 4.0 * k / 40.0);
    grid.push_back(-mag);
    grid.push_back(mag);
  }
  return grid;
}

double omniscient_objective(const Vector& v, const Vector& v_star, double eta, LossKind loss,
                            const Vector& x, double y) {
  require_dim(v_star, v.size(), "omniscient_objective v*");
  require_dim(x, v.size(), "omniscient_objective x");
  const double beta = loss_grad_scalar(loss, v.dot(x), y);
  return eta * eta * beta * beta * x.squaredNorm() - 2.0 * eta * beta * (v - v_star).dot(x);
}

Vector virtual_update(const Vector& v, double eta, LossKind loss, const Vector& x, double y) {
  require_dim(x, v.size(), "virtual_update");
  const double beta = loss_grad_scalar(loss, v.dot(x), y);
  Vector next = v;
  next.noalias() -= (eta * beta) * x;
  return next;
}

ETCheckReport et_condition_check(double gamma, double beta, double eta,
                                 const SpectralStats& spectral, double lambda) {
  ETCheckReport r;
  r.gamma_beta = gamma * beta;
  r.upper_bound =
      2.0 * (1.0 - lambda) * spectral.sigma_min / (eta * spectral.sigma_max * spectral.sigma_max);
  r.satisfied = r.gamma_beta > 0.0 && r.gamma_beta < r.upper_bound;
  return r;
}

SelectedExample select_pool(const Vector& v, const Vector& v_star, const TeachingMode& mode,
                            double eta, LossKind loss) {
  const Dataset& pool = mode.pool;
  if (pool.size() == 0) throw InvalidArgument("select_pool: empty pool");
  if (pool.dim() != v.size()) {
    throw DimensionError("select_pool: pool dimension " + std::to_string(pool.dim()) +
                         " does not match learner dimension " + std::to_string(v.size()));
  }
  require_dim(v_star, v.size(), "select_pool v*");
  std::vector<double> grid;
  if (mode.kind == ModeKind::pool) {
    grid = {1.0};
  } else {
    grid = mode.gamma_grid.empty() ? default_gamma_grid() : mode.gamma_grid;
    std::stable_sort(grid.begin(), grid.end(),
                     [](double a, double b) { return std::abs(a) < std::abs(b); });
  }

  const Index n = pool.size();
  const Eigen::ArrayXd vx = (pool.features * v).array();
  const Eigen::ArrayXd sx = (pool.features * v_star).array();
  const Eigen::ArrayXd q = vx - sx;
  const Eigen::ArrayXd n2 = pool.features.rowwise().squaredNorm().array();
  const double max_n2 = n2.maxCoeff();
  const Eigen::ArrayXd data_y = pool.labels.array();
  const double r2 = mode.norm_bound * mode.norm_bound;
  const bool classify = is_classification(loss);
  if (classify && mode.labels == LabelSource::data && !(data_y.abs() == 1.0).all()) {
    throw InvalidArgument("select_pool: classification pool labels must be in {-1, +1}");
  }
  const int n_labels = classify && mode.labels == LabelSource::teacher ? 2 : 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();


  // Each (gamma, label) column is reduced to its first minimizing admissible
  // row; the columns are then merged in (value, row, column) order, which is
  // the same as a row-major scan with strict improvement.
  bool found = false;
  double best_obj = 0.0;
  Index best_i = -1;
  double best_g = 0.0, best_y = 0.0;
  Index best_col = -1;
  Eigen::ArrayXd y_col[2];
  double col_min[2];
  Index col_arg[2];
  auto reduce = [&](int k, const Eigen::ArrayXd& o, double g2) {
    col_min[k] = kInf;
    col_arg[k] = 0;
    if (g2 * max_n2 <= r2 && !o.isNaN().any()) {
      col_min[k] = o.minCoeff();
      while (o[col_arg[k]] != col_min[k]) ++col_arg[k];
      return;
    }
    for (Index i = 0; i < n; ++i) {
      if (o[i] < col_min[k] && g2 * n2[i] <= r2) {
        col_min[k] = o[i];
        col_arg[k] = i;
      }
    }
  };
  // Logistic with free labels: the (-g, +1) column equals the (g, -1) column
  // bit for bit (and vice versa), so a sign pair shares one evaluation.
  const bool logistic_pair = loss == LossKind::logistic && n_labels == 2;
  double cached_g = std::numeric_limits<double>::quiet_NaN();
  for (size_t gp = 0; gp < grid.size(); ++gp) {
    const double g = grid[gp];
    const double a = eta * eta * g * g, b = 2.0 * eta * g;
    const Eigen::ArrayXd an2 = a * n2;
    if (logistic_pair) {
      if (y_col[0].size() != n) {
        y_col[0] = Eigen::ArrayXd::Constant(n, 1.0);
        y_col[1] = Eigen::ArrayXd::Constant(n, -1.0);
      }
      if (g == -cached_g) {
        std::swap(col_min[0], col_min[1]);
        std::swap(col_arg[0], col_arg[1]);
      } else {
        // beta for y = +1 and y = -1 from a single exp(-|z|). Tails below
        // e^-340 are flushed to zero: their squares would be subnormal, which
        // costs far more than the whole column and moves no objective above
        // rounding level.
        const Eigen::ArrayXd t = -(g * vx).abs();
        const Eigen::ArrayXd e = (t < -340.0).select(0.0, t.exp());
        const Eigen::ArrayXd inv = 1.0 / (1.0 + e);
        const Eigen::ArrayXd small = e * inv;
        const auto pos = g * vx >= 0.0;
        const Eigen::ArrayXd bp = pos.select(-small, -inv);
        const Eigen::ArrayXd bm = pos.select(inv, small);
        reduce(0, bp * bp * an2 - b * bp * q, g * g);
        reduce(1, bm * bm * an2 - b * bm * q, g * g);
      }
      cached_g = g;
    } else {
      const Eigen::ArrayXd z = g * vx;
      for (int k = 0; k < n_labels; ++k) {
        Eigen::ArrayXd& y = y_col[k];
        if (mode.labels == LabelSource::teacher) {
          y = classify ? Eigen::ArrayXd::Constant(n, k == 0 ? 1.0 : -1.0) : Eigen::ArrayXd(g * sx);
        } else {
          y = classify ? Eigen::ArrayXd(g < 0.0 ? -data_y : data_y) : Eigen::ArrayXd(g * data_y);
        }
        Eigen::ArrayXd beta;
        switch (loss) {
          case LossKind::square: beta = z - y; break;
          case LossKind::logistic: beta = -y / (1.0 + (y * z).exp()); break;
          case LossKind::hinge: beta = ((y * z) < 1.0).select(-y, 0.0); break;
        }
        reduce(k, beta * beta * an2 - b * beta * q, g * g);
      }
    }
    for (int k = 0; k < n_labels; ++k) {
      const double o = col_min[k];
      const Index i = col_arg[k];
      const Index col = static_cast<Index>(gp) * n_labels + k;
      if (!(o < kInf)) continue;
      if (!found || o < best_obj || (o == best_obj && (i < best_i || (i == best_i && col < best_col)))) {
        found = true;
        best_obj = o;
        best_i = i;
        best_col = col;
        best_g = g;
        best_y = y_col[k](i);
      }
    }
  }
  if (!found) throw InvalidArgument("select_pool: every candidate violates the norm bound");
  SelectedExample out;
  out.index = best_i;
  out.gamma = best_g;
  out.x = best_g * pool.features.row(best_i).transpose();
  out.y = best_y;
  out.objective = omniscient_objective(v, v_star, eta, loss, out.x, out.y);
  return out;
}

SelectedExample select_synthesis(const Vector& v, const Vector& v_star, double eta, LossKind loss,
                                 double norm_bound, const SpectralStats& spectral, double lambda) {
  require_dim(v_star, v.size(), "select_synthesis");
  const Vector dir = v - v_star;
  if (dir.norm() == 0.0) throw TeachingComplete();
  return synthesize_along(v, v_star, dir, eta, loss, norm_bound, spectral, lambda);
}

SelectedExample select_combination(const Vector& v, const Vector& v_star, const SpanMetric& span,
                                   double eta, LossKind loss, double norm_bound,
                                   const SpectralStats& spectral, double lambda) {
  require_dim(v_star, v.size(), "select_combination");
  if (span.rank() < 1) throw InvalidArgument("select_combination: span(D) is empty");
  const Vector raw = v - v_star;
  if (raw.norm() == 0.0) throw TeachingComplete();
  const Vector dir = project_span(span, raw);
  if (dir.norm() <= kNullDirection) {
    throw NumericError("select_combination: v - v* is orthogonal to span(D); no progress possible");
  }
  return synthesize_along(v, v_star, dir, eta, loss, norm_bound, spectral, lambda);
}

SelectedExample random_select(const Dataset& pool, Rng& rng) {
  if (pool.size() == 0) throw InvalidArgument("random_select: empty pool");
  SelectedExample out;
  out.index = static_cast<Index>(rng.below(static_cast<std::uint64_t>(pool.size())));
  out.x = pool.features.row(out.index).transpose();
  out.y = pool.labels(out.index);
  return out;
}

double pool_volume(const SpanMetric& span, const Matrix& pool_columns, int n_dirs,
                   std::uint64_t seed) {
  if (pool_columns.cols() == 0) throw InvalidArgument("pool_volume: empty pool");
  if (pool_columns.rows() != span.dim()) throw DimensionError("pool_volume: dimension mismatch");
  if (span.rank() < 1) throw InvalidArgument("pool_volume: span(D) is empty");
  if (n_dirs < 1) throw InvalidArgument("pool_volume: n_dirs must be >= 1");
  const Matrix projected = span.projector() * pool_columns;
  Rng rng(seed);
  double volume = std::numeric_limits<double>::infinity();
  const Index d = span.dim();
  for (int j = 0; j < n_dirs; ++j) {
    Rng dir_rng = rng.split(static_cast<std::uint64_t>(j));
    Vector g(d);
    for (Index i = 0; i < d; ++i) g(i) = dir_rng.normal();
    Vector w = span.projector() * g;
    const double n = w.norm();
    if (!(n > 0.0)) continue;
    w /= n;
    const double best = (projected.transpose() * w).maxCoeff();
    volume = std::min(volume, best);
  }
  return volume;
}

TeacherKind parse_teacher_kind(std::string_view s) {
  if (s == "random") return TeacherKind::random;
  if (s == "omniscient") return TeacherKind::omniscient;
  if (s == "lazy") return TeacherKind::lazy;
  if (s == "active") return TeacherKind::active;
  throw InvalidArgument("unknown teacher '" + std::string(s) + "'");
}

std::string_view to_string(TeacherKind k) {
  switch (k) {
    case TeacherKind::random: return "random";
    case TeacherKind::omniscient: return "omniscient";
    case TeacherKind::lazy: return "lazy";
    case TeacherKind::active: return "active";
  }
  return "?";
}

ExamSchedule parse_exam_schedule(std::string_view s) {
  if (s == "automatic") return ExamSchedule::automatic;
  if (s == "periodic") return ExamSchedule::periodic;
  throw InvalidArgument("unknown exam schedule '" + std::string(s) + "'");
}

std::string_view to_string(ExamSchedule s) {
  return s == ExamSchedule::automatic ? "automatic" : "periodic";
}

Teacher::Teacher(TeacherSettings settings, TeachingMode mode, TeacherContext context)
    : settings_(settings),
      mode_(std::move(mode)),
      ctx_(std::move(context)),
      rng_(ctx_.seed) {
  if (settings_.exam_period < 1) throw InvalidArgument("exam_period must be >= 1");
  if (!(ctx_.eta > 0.0)) throw InvalidArgument("teacher learning rate must be > 0");
  const bool needs_pool = mode_.kind != ModeKind::synthesis;
  if ((needs_pool || settings_.kind == TeacherKind::random) && mode_.pool.size() == 0) {
    throw InvalidArgument("teacher needs a non-empty pool");
  }
  if (mode_.kind == ModeKind::combination) span_.emplace(mode_.pool.features.transpose());
}

bool Teacher::exam_due() const {
  if (settings_.kind != TeacherKind::lazy && settings_.kind != TeacherKind::active) return false;
  if (!last_exam_at_) return true;
  if (settings_.kind == TeacherKind::lazy) return false;
  if (settings_.schedule == ExamSchedule::automatic && ctx_.map_unitary) return false;
  return t_ - *last_exam_at_ >= settings_.exam_period;
}

std::int64_t Teacher::background_exam(Student& student) {
  if (settings_.kind != TeacherKind::lazy && settings_.kind != TeacherKind::active) return 0;
  StepOutcome out;
  examine(student, out);
  return out.exam_queries;
}

void Teacher::examine(Student& student, StepOutcome& out) {
  RecoveryConfig rc = ctx_.recovery;
  const Vector* initial = nullptr;
  if (student.feedback() == FeedbackKind::sign) {
    if (!ctx_.norm_oracle) throw InvalidArgument("sign feedback needs a norm oracle");
    rc.known_norm = ctx_.norm_oracle();
    if (v_.size() > 0) {
      // Tighten the target as the learner approaches v*.
      const double adaptive = settings_.lambda * ctx_.spectral.sigma_min /
                              ctx_.spectral.sigma_max * (v_ - ctx_.v_star).norm();
      rc.eps_est = std::max(std::min(rc.eps_est, adaptive), 1e-9 * *rc.known_norm);
      initial = &v_;
    }
  }
  ExamResult r = construct_virtual_learner(student, rc, ctx_.basis, initial);
  v_ = r.v_hat;
  est_error_ = r.est_error;
  out.examined = true;
  out.exam_queries = r.queries_used;
  last_exam_at_ = t_;
  last_exam_ = std::move(r);
}

SelectedExample Teacher::select(const Vector& v) const {
  switch (mode_.kind) {
    case ModeKind::synthesis:
      return select_synthesis(v, ctx_.v_star, ctx_.eta, ctx_.loss, mode_.norm_bound,
                              ctx_.spectral, settings_.lambda);
    case ModeKind::combination:
      return select_combination(v, ctx_.v_star, *span_, ctx_.eta, ctx_.loss, mode_.norm_bound,
                                ctx_.spectral, settings_.lambda);
    case ModeKind::pool:
    case ModeKind::rescalable_pool:
      return select_pool(v, ctx_.v_star, mode_, ctx_.eta, ctx_.loss);
  }
  throw InvalidArgument("bad teaching mode");
}

StepOutcome Teacher::step(Student& student) {
  StepOutcome out;
  if (settings_.kind == TeacherKind::random) {
    out.example = random_select(mode_.pool, rng_);
    student.teach(out.example.x, out.example.y);
    ++t_;
    return out;
  }
  if (settings_.kind == TeacherKind::omniscient) {
    v_ = student.teacher_view();
  } else if (exam_due()) {
    examine(student, out);
  }
  if ((v_ - ctx_.v_star).norm() <= settings_.stop_tolerance) {
    out.stopped = true;
    return out;
  }
  try {
    out.example = select(v_);
  } catch (const TeachingComplete&) {
    out.stopped = true;
    return out;
  }
  if (settings_.kind != TeacherKind::omniscient) {
    v_ = virtual_update(v_, ctx_.eta, ctx_.loss, out.example.x, out.example.y);
  }
  student.teach(out.example.x, out.example.y);
  ++t_;
  return out;
}

}  // namespace teachsim
