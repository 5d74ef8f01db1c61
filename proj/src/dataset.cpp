#include "rfmkrr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rfmkrr/rng.hpp"

namespace rfmkrr {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("libsvm parse error at line " + std::to_string(line_no) +
                           ": " + what);
}

double parse_real(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) parse_fail(line_no, "trailing characters in '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(line_no, "non-numeric token '" + tok + "'");
  } catch (const std::out_of_range&) {
    parse_fail(line_no, "value out of range '" + tok + "'");
  }
}

int parse_index(const std::string& tok, std::size_t line_no) {
  int idx = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    parse_fail(line_no, "bad feature index '" + tok + "'");
  if (idx < 1) parse_fail(line_no, "feature index must be >= 1, got " + tok);
  return idx;
}

}  // namespace

RawDataset parse_libsvm(std::istream& in) {
  RawDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    RawRow row;
    row.target = parse_real(tok, line_no);

    int prev_idx = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        parse_fail(line_no, "expected idx:val, got '" + tok + "'");
      const int idx = parse_index(tok.substr(0, colon), line_no);
      const double val = parse_real(tok.substr(colon + 1), line_no);
      if (idx <= prev_idx)
        parse_fail(line_no, "non-increasing index " + std::to_string(idx));
      prev_idx = idx;
      row.features.emplace_back(idx, val);
      out.declared_dim = std::max(out.declared_dim, idx);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw std::runtime_error("libsvm parse error: empty input");
  return out;
}

RawDataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in);
}

namespace {

Eigen::MatrixXd densify(const RawDataset& raw, const std::vector<int>& rows) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            raw.declared_dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, val] : raw.rows[static_cast<std::size_t>(rows[i])].features)
      X(static_cast<Eigen::Index>(i), idx - 1) = val;
  return X;
}

struct ColumnStats {
  Eigen::VectorXd lo, hi;
};

ColumnStats column_stats(const Eigen::MatrixXd& X) {
  return {X.colwise().minCoeff(), X.colwise().maxCoeff()};
}

// Min-max map onto [-1,1]; constant columns collapse to 0.
void scale_columns(Eigen::MatrixXd& X, const ColumnStats& st) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double span = st.hi(j) - st.lo(j);
    if (span == 0.0) {
      X.col(j).setZero();
    } else {
      X.col(j) = (2.0 / span) * (X.col(j).array() - st.lo(j)) - 1.0;
    }
  }
}

struct TargetStats {
  double mean, max_abs;
};

TargetStats target_stats(const RawDataset& raw) {
  double sum = 0.0;
  for (const auto& r : raw.rows) sum += r.target;
  const double mean = sum / static_cast<double>(raw.rows.size());
  double max_abs = 0.0;
  for (const auto& r : raw.rows) max_abs = std::max(max_abs, std::abs(r.target - mean));
  if (max_abs == 0.0) throw std::runtime_error("degenerate targets: y is constant");
  return {mean, max_abs};
}

Eigen::VectorXd gather_targets(const RawDataset& raw, const std::vector<int>& rows,
                               const TargetStats& ts) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    y(static_cast<Eigen::Index>(i)) =
        (raw.rows[static_cast<std::size_t>(rows[i])].target - ts.mean) / ts.max_abs;
  return y;
}

std::vector<int> all_rows(const RawDataset& raw) {
  std::vector<int> rows(raw.rows.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// Partial Fisher-Yates: the first k entries of a permutation of [0, n).
std::vector<int> draw_indices(int n, int k, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

void check_split(const SplitSpec& spec, Eigen::Index total) {
  if (spec.n_train < 1 || spec.n_test < 1)
    throw std::invalid_argument("split sizes must be positive");
  if (static_cast<Eigen::Index>(spec.n_train) + spec.n_test > total)
    throw std::invalid_argument(
        "split requests " + std::to_string(spec.n_train + spec.n_test) +
        " rows but only " + std::to_string(total) + " are available");
}

}  // namespace

Dataset preprocess(const RawDataset& raw) {
  if (raw.rows.size() < 2)
    throw std::invalid_argument("preprocess requires at least 2 rows");
  const auto rows = all_rows(raw);
  Dataset ds;
  ds.X = densify(raw, rows);
  scale_columns(ds.X, column_stats(ds.X));
  ds.y = gather_targets(raw, rows, target_stats(raw));
  return ds;
}

std::pair<Dataset, Dataset> subsample(const Dataset& ds, const SplitSpec& spec) {
  check_split(spec, ds.n());
  const auto idx = draw_indices(static_cast<int>(ds.n()), spec.n_train + spec.n_test,
                                spec.seed);
  Dataset train, test;
  train.X.resize(spec.n_train, ds.dim());
  train.y.resize(spec.n_train);
  test.X.resize(spec.n_test, ds.dim());
  test.y.resize(spec.n_test);
  for (int i = 0; i < spec.n_train; ++i) {
    train.X.row(i) = ds.X.row(idx[static_cast<std::size_t>(i)]);
    train.y(i) = ds.y(idx[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < spec.n_test; ++i) {
    const int k = idx[static_cast<std::size_t>(spec.n_train) + static_cast<std::size_t>(i)];
    test.X.row(i) = ds.X.row(k);
    test.y(i) = ds.y(k);
  }
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> load_split(const RawDataset& raw, const SplitSpec& spec,
                                       ScalingSource scaling) {
  check_split(spec, static_cast<Eigen::Index>(raw.rows.size()));
  const auto idx = draw_indices(static_cast<int>(raw.rows.size()),
                                spec.n_train + spec.n_test, spec.seed);
  const std::vector<int> train_rows(idx.begin(), idx.begin() + spec.n_train);
  const std::vector<int> test_rows(idx.begin() + spec.n_train, idx.end());

  Dataset train, test;
  train.X = densify(raw, train_rows);
  test.X = densify(raw, test_rows);
  const ColumnStats st = scaling == ScalingSource::TrainOnly
                             ? column_stats(train.X)
                             : column_stats(densify(raw, all_rows(raw)));
  scale_columns(train.X, st);
  scale_columns(test.X, st);

  const TargetStats ts = target_stats(raw);
  train.y = gather_targets(raw, train_rows, ts);
  test.y = gather_targets(raw, test_rows, ts);
  return {std::move(train), std::move(test)};
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << "y";
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", ds.y(i));
    out << buf;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g", ds.X(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void write_libsvm(const Dataset& ds, std::ostream& out) {
  char buf[32];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.y(i));
    out << buf;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      if (ds.X(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", ds.X(i, j));
      out << ' ' << (j + 1) << ':' << buf;
    }
    out << "\n";
  }
}

void write_libsvm(const RawDataset& raw, std::ostream& out) {
  char buf[32];
  for (const auto& row : raw.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", row.target);
    out << buf;
    for (const auto& [idx, val] : row.features) {
      std::snprintf(buf, sizeof buf, "%.17g", val);
      out << ' ' << idx << ':' << buf;
    }
    out << "\n";
  }
}

}  // namespace rfmkrr
