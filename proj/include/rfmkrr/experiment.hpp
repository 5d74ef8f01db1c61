#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rfmkrr/dataset.hpp"
#include "rfmkrr/feature_map.hpp"
#include "rfmkrr/kernel.hpp"

namespace rfmkrr {

struct ExperimentConfig {
  std::string data_path;
  KernelFamily kernel = KernelFamily::Rbf;
  double lambda_mult = 1.0;     // lambda = lambda_mult / sqrt(n_train)
  double lambda_override = 0.0; // > 0 wins over the rule
  double sigma_override = 0.0;  // > 0 wins over the interpoint-distance heuristic
  std::vector<int> s_grid;      // mse-vs-s
  std::vector<int> n_grid;      // ratio-vs-n
  int s_fixed = 100;            // ratio-vs-n
  int repeats = 100;
  int n_train = 2000;
  int n_test = 2000;            // ratio-vs-n: 0 means "same as n"
  std::uint64_t master_seed = 0;
  FeatureMode mode = FeatureMode::Unbiased;
  ScalingSource scaling = ScalingSource::TrainOnly;
  int threads = 0;              // repeats run concurrently; 0 = hardware count
};

struct CurvePoint {
  double x = 0.0;              // s or n
  double mse = 0.0;            // mean over repeats of mean (f~ - f)^2 on test
  double mse_stderr = 0.0;
  double bound = 0.0;          // (1/s) ||K^{1/2}(K+n lambda I)^{-1} y||^2
  double ratio = 0.0;          // bound / mse, defined only when mse > 0
  double extrapolation = 0.0;  // first-point mse scaled by x_1 / x
  bool ratio_defined = false;
};

struct RunResult {
  std::vector<CurvePoint> points;
  std::vector<std::vector<double>> cell_mse;  // [grid index][repeat]
  std::vector<double> lambdas;                // per grid point
  double b = 0.0;                             // feature bound constant used
  int krr_fit_count = 0;
  int krr_predict_count = 0;
};

// MSE of the RFM-KRR vs exact-KRR prediction gap against s, one exact KRR
// fit shared across all repeats and grid points. Repeat r at grid value s
// uses the feature seed hash(master_seed, s, r), so extending the grid or
// the repeat count never changes existing cells.
RunResult run_mse_vs_s(const ExperimentConfig& cfg, const Dataset& train,
                       const Dataset& test);
RunResult run_mse_vs_s(const ExperimentConfig& cfg, const Dataset& pool);
RunResult run_mse_vs_s(const ExperimentConfig& cfg);

// Bound/MSE ratio against training-set size at fixed s. Each n gets its own
// deterministic train/test split, exact KRR fit, and bound.
RunResult run_ratio_vs_n(const ExperimentConfig& cfg, const Dataset& pool);
RunResult run_ratio_vs_n(const ExperimentConfig& cfg);

// CSV with header x,mse,mse_stderr,bound,ratio,extrapolation, 12 significant
// digits, "nan" for undefined ratios. Byte-stable for fixed inputs.
void emit_csv(const std::vector<CurvePoint>& points, std::ostream& out);
void emit_csv_file(const std::vector<CurvePoint>& points, const std::string& path);

nlohmann::json config_json(const ExperimentConfig& cfg);
nlohmann::json run_report_json(const ExperimentConfig& cfg, const RunResult& result);
void emit_json_file(const nlohmann::json& j, const std::string& path);

// Gaussian inputs with a smooth nonlinear target plus noise, in libsvm row
// form so it flows through the standard preprocessing.
RawDataset make_synthetic_raw(int n, int d, std::uint64_t seed);

// Least-squares slope of log(y) against log(x); the 1/s-rate diagnostic.
double log_log_slope(const std::vector<CurvePoint>& points);

}  // namespace rfmkrr
