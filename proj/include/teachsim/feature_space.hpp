#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace teachsim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Throws DimensionError unless v.size() == expected.
void require_dim(const Vector& v, Index expected, std::string_view what);
// Throws InvalidArgument if any entry is NaN or infinite.
void require_finite(const Vector& v, std::string_view what);

/// Extreme eigenvalues of G^T G. `kappa` is their ratio.
struct SpectralStats {
  double sigma_min = 1.0;
  double sigma_max = 1.0;
  double kappa = 1.0;
};

/// Invertible linear map G from the teacher's feature space (dimension d) to
/// the student's (dimension s). Only square maps are supported.
class FeatureMap {
 public:
  static constexpr double kSingularThreshold = 1e-10;
  static constexpr double kUnitaryTolerance = 1e-10;

  /// Throws NumericError if g is not square or its smallest singular value is
  /// at or below kSingularThreshold.
  explicit FeatureMap(Matrix g);

  static FeatureMap identity(Index d);

  Index teacher_dim() const noexcept { return g_.cols(); }
  Index student_dim() const noexcept { return g_.rows(); }
  const Matrix& matrix() const noexcept { return g_; }
  bool is_unitary() const noexcept { return unitary_; }
  const SpectralStats& spectral() const noexcept { return spectral_; }

 private:
  Matrix g_;
  bool unitary_ = false;
  SpectralStats spectral_;
};

/// x~ = G x.
Vector apply_map(const FeatureMap& g, const Vector& x);
/// v = G^T w, the adjoint: <w, G x> = <G^T w, x>.
Vector conjugate_apply(const FeatureMap& g, const Vector& w);

SpectralStats spectral_stats(const FeatureMap& g);
// Symmetric eigendecomposition of G^T G; exposed for FeatureMap's constructor.
SpectralStats spectral_stats(const Matrix& g);

enum class MapKind { identity, unitary, general };

MapKind parse_map_kind(std::string_view s);
std::string_view to_string(MapKind k);

/// Deterministic random map. `unitary` is Haar-distributed orthogonal;
/// `general` has Haar singular vectors and a spectrum with kappa <= 100.
FeatureMap random_map(Index dim, MapKind kind, std::uint64_t seed);

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
Matrix random_orthogonal(Index dim, std::uint64_t seed);

/// Inner product restricted to span(D): <a, b>_D = a^T D (D^T D)^+ D^T b.
class SpanMetric {
 public:
  static constexpr double kRankCutoff = 1e-10;

  /// `candidates` is d x k, one pool vector per column.
  explicit SpanMetric(Matrix candidates);

  const Matrix& candidates() const noexcept { return candidates_; }
  const Matrix& projector() const noexcept { return projector_; }
  Index dim() const noexcept { return projector_.rows(); }
  Index rank() const noexcept { return rank_; }

 private:
  Matrix candidates_;
  Matrix projector_;
  Index rank_ = 0;
};

double span_inner(const SpanMetric& m, const Vector& a, const Vector& b);
Vector project_span(const SpanMetric& m, const Vector& v);

}  // namespace teachsim
