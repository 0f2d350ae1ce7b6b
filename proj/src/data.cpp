#include "teachsim/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "teachsim/errors.hpp"
#include "teachsim/rng.hpp"

namespace teachsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double regularized_objective(const Dataset& data, LossKind loss, double ridge, const Vector& v) {
  const Vector z = data.features * v;
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) total += loss_value(loss, z(i), data.labels(i));
  return total / static_cast<double>(data.size()) + 0.5 * ridge * v.squaredNorm();
}

Vector fit_logistic(const Dataset& data, double ridge) {
  const Index n = data.size();
  const Index d = data.dim();
  const Matrix& x = data.features;
  Vector v = Vector::Zero(d);
  double f = regularized_objective(data, LossKind::logistic, ridge, v);
  double gnorm = 0.0;
  for (int it = 0; it < 500; ++it) {
    const Vector z = x * v;
    Vector coef(n), curv(n);
    for (Index i = 0; i < n; ++i) {
      const double y = data.labels(i);
      const double p = sigmoid(-y * z(i));
      coef(i) = -y * p;
      curv(i) = p * (1.0 - p);
    }
    const Vector grad = x.transpose() * coef / static_cast<double>(n) + ridge * v;
    gnorm = grad.norm();
    if (gnorm <= 1e-8) return v;
    Matrix h = x.transpose() * curv.asDiagonal() * x / static_cast<double>(n);
    h.diagonal().array() += ridge;
    const Vector step = h.ldlt().solve(grad);
    double t = 1.0;
    const double slope = grad.dot(step);
    while (t > 1e-12) {
      const Vector cand = v - t * step;
      const double fc = regularized_objective(data, LossKind::logistic, ridge, cand);
      if (fc <= f - 1e-4 * t * slope) {
        v = cand;
        f = fc;
        break;
      }
      t *= 0.5;
    }
    if (t <= 1e-12) break;  // no further decrease representable
  }
  const Vector z = x * v;
  Vector coef(n);
  for (Index i = 0; i < n; ++i) coef(i) = -data.labels(i) * sigmoid(-data.labels(i) * z(i));
  gnorm = (x.transpose() * coef / static_cast<double>(n) + ridge * v).norm();
  if (gnorm <= 1e-8) return v;
  throw NumericError("logistic fit did not converge (gradient norm " + fmt17(gnorm) + ")");
}

Vector fit_hinge(const Dataset& data, double ridge) {
  constexpr int kIterations = 20000;
  const Index n = data.size();
  const Index d = data.dim();
  Vector v = Vector::Zero(d);
  Vector avg = Vector::Zero(d);
  for (int it = 1; it <= kIterations; ++it) {
    const Vector z = data.features * v;
    Vector coef(n);
    for (Index i = 0; i < n; ++i) coef(i) = loss_grad_scalar(LossKind::hinge, z(i), data.labels(i));
    const Vector g = data.features.transpose() * coef / static_cast<double>(n) + ridge * v;
    v -= (1.0 / std::sqrt(static_cast<double>(it))) * g;
    avg += (v - avg) / static_cast<double>(it);
  }
  return avg;
}

}  // namespace

Task parse_task(std::string_view s) {
  if (s == "regression") return Task::regression;
  if (s == "classification" || s == "binary_classification") return Task::binary_classification;
  throw InvalidArgument("unknown task '" + std::string(s) + "'");
}

std::string_view to_string(Task t) {
  return t == Task::regression ? "regression" : "classification";
}

RegressionData gen_regression_data(const DatasetSpec& spec) {
  if (spec.d < 1 || spec.n < 1) throw InvalidArgument("dataset needs d >= 1 and n >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
  Rng root(spec.seed);
  Rng truth = root.split(1);
  Rng rows = root.split(2);
  RegressionData out;
  out.w_star_truth.resize(spec.d);
  for (Index j = 0; j < spec.d; ++j) out.w_star_truth(j) = truth.normal();
  out.data.features.resize(spec.n, spec.d);
  out.data.labels.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    for (Index j = 0; j < spec.d; ++j) out.data.features(i, j) = rows.normal();
    const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * rows.normal() : 0.0;
    out.data.labels(i) = out.data.features.row(i).dot(out.w_star_truth) + noise;
  }
  return out;
}

Dataset gen_classification_data(const DatasetSpec& spec) {
  if (spec.d < 1 || spec.n < 1) throw InvalidArgument("dataset needs d >= 1 and n >= 1");
  Rng rows = Rng(spec.seed).split(3);
  Dataset out;
  out.features.resize(2 * spec.n, spec.d);
  out.labels.resize(2 * spec.n);
  for (Index i = 0; i < 2 * spec.n; ++i) {
    const double label = i < spec.n ? 1.0 : -1.0;
    for (Index j = 0; j < spec.d; ++j)
      out.features(i, j) = label * spec.mean_separation + rows.normal();
    out.labels(i) = label;
  }
  return out;
}

Dataset ingest_tabular(const std::filesystem::path& path, std::string_view label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty", 1, "");
  const std::vector<std::string_view> header_views = split_commas(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());
  Index label_idx = -1;
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = static_cast<Index>(j);
  if (label_idx < 0) {
    throw ParseError("missing label column '" + std::string(label_column) + "'", 1,
                     std::string(label_column));
  }
  const Index cols = static_cast<Index>(header.size());
  std::vector<double> values;
  std::vector<double> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string_view> cells = split_commas(line);
    if (static_cast<Index>(cells.size()) != cols) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                           " fields, got " + std::to_string(cells.size()),
                       line_no, "");
    }
    for (Index j = 0; j < cols; ++j) {
      const std::string_view cell = cells[static_cast<size_t>(j)];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        const std::string& col = header[static_cast<size_t>(j)];
        throw ParseError("line " + std::to_string(line_no) + ", column '" + col +
                             "': not a finite number: '" + std::string(cell) + "'",
                         line_no, col);
      }
      if (j == label_idx) {
        labels.push_back(value);
      } else {
        values.push_back(value);
      }
    }
  }
  Dataset out;
  const Index n = static_cast<Index>(labels.size());
  out.features.resize(n, cols - 1);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.labels(i) = labels[static_cast<size_t>(i)];
    for (Index j = 0; j < cols - 1; ++j)
      out.features(i, j) = values[static_cast<size_t>(i * (cols - 1) + j)];
  }
  return out;
}

void write_tabular(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream os;
  for (Index j = 0; j < data.dim(); ++j) os << 'x' << j << ',';
  os << "label\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) os << fmt17(data.features(i, j)) << ',';
    os << fmt17(data.labels(i)) << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << os.str();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must lie in [0, 1)");
  }
  const Index n = data.size();
  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  const auto n_test = static_cast<Index>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<bool> is_test(static_cast<size_t>(n), false);
  for (Index k = 0; k < n_test; ++k) is_test[static_cast<size_t>(perm[static_cast<size_t>(k)])] = true;
  Dataset train, test;
  train.features.resize(n - n_test, data.dim());
  train.labels.resize(n - n_test);
  test.features.resize(n_test, data.dim());
  test.labels.resize(n_test);
  Index a = 0, b = 0;
  for (Index i = 0; i < n; ++i) {
    if (is_test[static_cast<size_t>(i)]) {
      test.features.row(b) = data.features.row(i);
      test.labels(b++) = data.labels(i);
    } else {
      train.features.row(a) = data.features.row(i);
      train.labels(a++) = data.labels(i);
    }
  }
  return {std::move(train), std::move(test)};
}

TwoViews random_project(const Dataset& raw, Index out_dim, std::uint64_t seed_teacher,
                        std::uint64_t seed_student, bool identity) {
  if (out_dim < 1) throw InvalidArgument("random_project: out_dim must be >= 1");
  if (identity) {
    if (out_dim != raw.dim()) throw InvalidArgument("identity projection needs out_dim == raw dim");
    return {raw, raw};
  }
  auto project = [&](std::uint64_t seed) {
    Rng rng(seed);
    Matrix p(raw.dim(), out_dim);
    for (Index j = 0; j < out_dim; ++j)
      for (Index i = 0; i < raw.dim(); ++i) p(i, j) = rng.normal();
    p /= std::sqrt(static_cast<double>(raw.dim()));
    Dataset view;
    view.features = raw.features * p;
    view.labels = raw.labels;
    return view;
  };
  return {project(seed_teacher), project(seed_student)};
}

FittedMap fit_map(const Dataset& teacher, const Dataset& student) {
  if (teacher.size() != student.size() || teacher.size() == 0) {
    throw DimensionError("fit_map: views must have the same non-zero number of rows");
  }
  const Matrix gt = teacher.features.colPivHouseholderQr().solve(student.features);
  FittedMap out;
  out.g = gt.transpose();
  out.residual = (teacher.features * gt - student.features).cwiseAbs().maxCoeff();
  return out;
}

Vector train_optimal(const Dataset& data, LossKind loss, double ridge) {
  if (data.size() == 0) throw InvalidArgument("train_optimal: empty dataset");
  if (!(ridge >= 0.0)) throw InvalidArgument("train_optimal: ridge must be >= 0");
  switch (loss) {
    case LossKind::square: {
      const double n = static_cast<double>(data.size());
      Matrix a = data.features.transpose() * data.features / n;
      a.diagonal().array() += ridge;
      const Vector b = data.features.transpose() * data.labels / n;
      const Vector v = a.colPivHouseholderQr().solve(b);
      const double res = (a * v - b).cwiseAbs().maxCoeff();
      if (!(res <= 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()))) {
        throw NumericError("ridge normal equations are singular (residual " + fmt17(res) + ")");
      }
      return v;
    }
    case LossKind::logistic:
      return fit_logistic(data, ridge);
    case LossKind::hinge:
      return fit_hinge(data, ridge);
  }
  throw InvalidArgument("train_optimal: bad loss");
}

double accuracy(const Dataset& data, const Vector& v) {
  if (data.size() == 0) throw InvalidArgument("accuracy: empty dataset");
  const Vector z = data.features * v;
  Index hits = 0;
  for (Index i = 0; i < data.size(); ++i)
    if ((z(i) >= 0.0 ? 1.0 : -1.0) == data.labels(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace teachsim
