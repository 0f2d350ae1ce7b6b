#include "teachsim/feature_space.hpp"

#include <cmath>
#include <string>

#include "teachsim/errors.hpp"
#include "teachsim/rng.hpp"

namespace teachsim {

void require_dim(const Vector& v, Index expected, std::string_view what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(v.size()));
  }
}

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

SpectralStats spectral_stats(const Matrix& g) {
  const Matrix gram = g.transpose() * g;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of G^T G failed");
  SpectralStats s;
  s.sigma_min = eig.eigenvalues().minCoeff();
  s.sigma_max = eig.eigenvalues().maxCoeff();
  const double floor = FeatureMap::kSingularThreshold * FeatureMap::kSingularThreshold;
  if (!(s.sigma_min > floor)) {
    throw NumericError("feature map is singular (smallest eigenvalue of G^T G is " +
                       std::to_string(s.sigma_min) + ")");
  }
  s.kappa = s.sigma_max / s.sigma_min;
  return s;
}

FeatureMap::FeatureMap(Matrix g) : g_(std::move(g)) {
  if (g_.rows() == 0 || g_.rows() != g_.cols()) {
    throw NumericError("feature map must be square and non-empty, got " +
                       std::to_string(g_.rows()) + "x" + std::to_string(g_.cols()));
  }
  if (!g_.allFinite()) throw InvalidArgument("feature map has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(g_);
  if (!(svd.singularValues().minCoeff() > kSingularThreshold)) {
    throw NumericError("feature map is singular");
  }
  spectral_ = teachsim::spectral_stats(g_);
  const Matrix gram = g_.transpose() * g_;
  unitary_ = (gram - Matrix::Identity(g_.cols(), g_.cols())).cwiseAbs().maxCoeff() <=
             kUnitaryTolerance;
}

FeatureMap FeatureMap::identity(Index d) { return FeatureMap(Matrix::Identity(d, d)); }

Vector apply_map(const FeatureMap& g, const Vector& x) {
  require_dim(x, g.teacher_dim(), "apply_map");
  return g.matrix() * x;
}

Vector conjugate_apply(const FeatureMap& g, const Vector& w) {
  require_dim(w, g.student_dim(), "conjugate_apply");
  return g.matrix().transpose() * w;
}

SpectralStats spectral_stats(const FeatureMap& g) { return g.spectral(); }

MapKind parse_map_kind(std::string_view s) {
  if (s == "identity") return MapKind::identity;
  if (s == "unitary") return MapKind::unitary;
  if (s == "general") return MapKind::general;
  throw InvalidArgument("unknown map kind '" + std::string(s) + "'");
}

std::string_view to_string(MapKind k) {
  switch (k) {
    case MapKind::identity: return "identity";
    case MapKind::unitary: return "unitary";
    case MapKind::general: return "general";
  }
  return "?";
}

Matrix random_orthogonal(Index dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Column signs follow diag(R) so the distribution is Haar.
  for (Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

FeatureMap random_map(Index dim, MapKind kind, std::uint64_t seed) {
  if (dim < 1) throw InvalidArgument("random_map: dim must be >= 1");
  switch (kind) {
    case MapKind::identity:
      return FeatureMap::identity(dim);
    case MapKind::unitary:
      return FeatureMap(random_orthogonal(dim, seed));
    case MapKind::general: {
      // Singular values of G log-uniform in [1, 10], so kappa(G^T G) <= 100.
      Rng rng(derive_seed(seed, 3));
      const Matrix u = random_orthogonal(dim, derive_seed(seed, 1));
      const Matrix v = random_orthogonal(dim, derive_seed(seed, 2));
      Vector s(dim);
      for (Index i = 0; i < dim; ++i) s(i) = std::pow(10.0, rng.uniform());
      if (dim > 1) {
        s(0) = 1.0;
        s(dim - 1) = 10.0;
      }
      return FeatureMap(u * s.asDiagonal() * v.transpose());
    }
  }
  throw InvalidArgument("random_map: bad kind");
}

SpanMetric::SpanMetric(Matrix candidates) : candidates_(std::move(candidates)) {
  const Index d = candidates_.rows();
  if (d == 0) throw DimensionError("SpanMetric: empty candidate dimension");
  projector_ = Matrix::Zero(d, d);
  if (candidates_.cols() == 0) return;
  Eigen::BDCSVD<Matrix> svd(candidates_, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return;
  const double cutoff = kRankCutoff * sv(0);
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank_;
  const Matrix basis = svd.matrixU().leftCols(rank_);
  projector_ = basis * basis.transpose();
}

double span_inner(const SpanMetric& m, const Vector& a, const Vector& b) {
  require_dim(a, m.dim(), "span_inner");
  require_dim(b, m.dim(), "span_inner");
  return a.dot(m.projector() * b);
}

Vector project_span(const SpanMetric& m, const Vector& v) {
  require_dim(v, m.dim(), "project_span");
  return m.projector() * v;
}

}  // namespace teachsim
