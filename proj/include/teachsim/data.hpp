#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "teachsim/feature_space.hpp"
#include "teachsim/learners.hpp"

namespace teachsim {

enum class Task { regression, binary_classification };
Task parse_task(std::string_view s);
std::string_view to_string(Task t);

struct DatasetSpec {
  Task task = Task::binary_classification;
  Index d = 50;
  Index n = 1000;  // rows for regression, rows per class for classification
  double mean_separation = 0.5;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
};

struct RegressionData {
  Dataset data;
  Vector w_star_truth;
};

/// x entries iid N(0, 1), y = <w*, x> + N(0, noise_sigma^2), w* iid N(0, 1).
RegressionData gen_regression_data(const DatasetSpec& spec);

/// n rows with mean (+s, ..., +s) labelled +1 followed by n rows with mean
/// (-s, ..., -s) labelled -1, identity covariance.
Dataset gen_classification_data(const DatasetSpec& spec);

/// Comma-separated file with a header row; every column except `label_column`
/// is a feature, in file order.
Dataset ingest_tabular(const std::filesystem::path& path, std::string_view label_column);

/// Writes features as x0..x{d-1} followed by `label`, 17 significant digits.
void write_tabular(const std::filesystem::path& path, const Dataset& data);

/// Seeded random split; `test_fraction` of the rows (rounded down) go to the
/// second set. Row order inside each part follows the original order.
std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double test_fraction,
                                          std::uint64_t seed);

struct TwoViews {
  Dataset teacher;
  Dataset student;
};

/// Two Gaussian projections of the raw features to `out_dim` dimensions,
/// scaled by 1/sqrt(raw dim). With `identity`, out_dim must equal the raw
/// dimension and both views are the raw data.
TwoViews random_project(const Dataset& raw, Index out_dim, std::uint64_t seed_teacher,
                        std::uint64_t seed_student, bool identity = false);

struct FittedMap {
  Matrix g;         // student = g * teacher, per example
  double residual;  // max |teacher_row G^T - student_row|
};

/// Least-squares linear map from teacher features to student features.
FittedMap fit_map(const Dataset& teacher, const Dataset& student);

/// Minimizer of mean loss + (ridge / 2) ||v||^2.
/// Square: normal equations. Logistic: damped Newton to gradient norm 1e-8.
/// Hinge: averaged subgradient over a fixed budget.
Vector train_optimal(const Dataset& data, LossKind loss, double ridge);

/// Fraction of rows with sign(<v, x>) == y.
double accuracy(const Dataset& data, const Vector& v);

}  // namespace teachsim
