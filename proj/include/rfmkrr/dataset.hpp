#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rfmkrr {

// One libsvm row: target plus sparse (1-based index, value) pairs with
// strictly increasing indices.
struct RawRow {
  double target = 0.0;
  std::vector<std::pair<int, double>> features;
};

struct RawDataset {
  std::vector<RawRow> rows;
  int declared_dim = 0;  // max index seen across all rows
};

// Dense, preprocessed data: columns min-max scaled into [-1, 1], targets
// centered and scaled to max|y| = 1.
struct Dataset {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // n
  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

struct SplitSpec {
  int n_train = 0;
  int n_test = 0;
  std::uint64_t seed = 0;
};

// Which rows supply the per-column min/max used for feature scaling.
enum class ScalingSource { TrainOnly, Global };

RawDataset parse_libsvm(std::istream& in);
RawDataset parse_libsvm_file(const std::string& path);

// Densify and scale using global statistics (all loaded rows).
Dataset preprocess(const RawDataset& raw);

// Deterministic disjoint train/test row selection from a preprocessed set.
std::pair<Dataset, Dataset> subsample(const Dataset& ds, const SplitSpec& spec);

// Select rows first, then scale: feature min/max from the training rows
// (default) or from all loaded rows; target statistics always come from
// the full loaded set so both halves share one normalization.
std::pair<Dataset, Dataset> load_split(const RawDataset& raw, const SplitSpec& spec,
                                       ScalingSource scaling = ScalingSource::TrainOnly);

// Debug export, header "y,x1,...,xd".
void write_csv(const Dataset& ds, std::ostream& out);

void write_libsvm(const Dataset& ds, std::ostream& out);
void write_libsvm(const RawDataset& raw, std::ostream& out);

}  // namespace rfmkrr
