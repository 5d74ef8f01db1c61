#include "rfmkrr/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "rfmkrr/bounds.hpp"
#include "rfmkrr/krr.hpp"
#include "rfmkrr/rng.hpp"

namespace rfmkrr {

namespace {

constexpr std::uint64_t kSplitTag = 0x53504c49;  // split-seed domain

void check_grid(const std::vector<int>& grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1)
      throw std::invalid_argument(std::string(name) + " grid entries must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument(std::string(name) +
                                  " grid must be strictly increasing");
  }
}

double resolve_lambda(const ExperimentConfig& cfg, int n_train) {
  if (cfg.lambda_override > 0.0) return cfg.lambda_override;
  if (!(cfg.lambda_mult > 0.0))
    throw std::invalid_argument("lambda multiplier must be positive");
  return cfg.lambda_mult / std::sqrt(static_cast<double>(n_train));
}

KernelSpec resolve_kernel(const ExperimentConfig& cfg, const Eigen::MatrixXd& X_train) {
  KernelSpec spec;
  spec.family = cfg.kernel;
  if (spec.family == KernelFamily::AngularSimilarity) {
    spec.sigma = 1.0;
    return spec;
  }
  spec.sigma = cfg.sigma_override > 0.0 ? cfg.sigma_override
                                        : bandwidth_heuristic(spec.family, X_train);
  return spec;
}

// Mean prediction gap per repeat, repeats spread over a small thread pool.
// Results land in per-repeat slots and are reduced in index order, so the
// outcome does not depend on scheduling.
std::vector<double> repeat_gaps(const ExperimentConfig& cfg, const Dataset& train,
                                const Dataset& test, const KernelSpec& spec,
                                double lambda, int s, std::uint64_t cell_tag,
                                const Eigen::VectorXd& f_exact) {
  const FeatureFamily family = feature_family_for(spec.family);
  std::vector<double> gaps(static_cast<std::size_t>(cfg.repeats));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= cfg.repeats) return;
        const std::uint64_t seed =
            seed_combine(cfg.master_seed, cell_tag, static_cast<std::uint64_t>(r));
        const FeatureMap fm = draw_map(family, static_cast<int>(train.dim()), s,
                                       spec.sigma, seed, cfg.mode);
        const RfmModel model = rfm_fit_x(train.X, train.y, lambda, fm);
        gaps[static_cast<std::size_t>(r)] =
            (rfm_predict(model, test.X) - f_exact).squaredNorm() /
            static_cast<double>(test.n());
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(cfg.repeats);
    }
  };
  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, cfg.repeats));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return gaps;
}

CurvePoint summarize(double x, const std::vector<double>& gaps, double bound) {
  CurvePoint pt;
  pt.x = x;
  pt.bound = bound;
  double acc = 0.0;
  for (double g : gaps) acc += g;
  pt.mse = acc / static_cast<double>(gaps.size());
  if (gaps.size() > 1) {
    double ss = 0.0;
    for (double g : gaps) ss += (g - pt.mse) * (g - pt.mse);
    pt.mse_stderr = std::sqrt(ss / static_cast<double>(gaps.size() - 1) /
                              static_cast<double>(gaps.size()));
  }
  pt.ratio_defined = pt.mse > 0.0;
  pt.ratio = pt.ratio_defined ? bound / pt.mse
                              : std::numeric_limits<double>::quiet_NaN();
  return pt;
}

void fill_extrapolation(std::vector<CurvePoint>& points) {
  if (points.empty()) return;
  const double anchor = points.front().mse * points.front().x;
  for (auto& pt : points) pt.extrapolation = anchor / pt.x;
}

}  // namespace

RunResult run_mse_vs_s(const ExperimentConfig& cfg, const Dataset& train,
                       const Dataset& test) {
  check_grid(cfg.s_grid, "s");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (train.n() < 1 || test.n() < 1)
    throw std::invalid_argument("empty train or test set");

  const double lambda = resolve_lambda(cfg, static_cast<int>(train.n()));
  const KernelSpec spec = resolve_kernel(cfg, train.X);

  RunResult res;
  res.b = feature_bound_constant(feature_family_for(spec.family), cfg.mode);

  const KrrModel exact = krr_fit(train.X, train.y, spec, lambda);
  ++res.krr_fit_count;
  const Eigen::VectorXd f_exact = krr_predict(exact, test.X);
  ++res.krr_predict_count;
  const KernelSpectrum spectrum = kernel_spectrum(kernel_matrix(spec, train.X));

  for (int s : cfg.s_grid) {
    const auto gaps = repeat_gaps(cfg, train, test, spec, lambda, s,
                                  static_cast<std::uint64_t>(s), f_exact);
    res.points.push_back(
        summarize(s, gaps, plot_bound(spectrum, train.y, lambda, s)));
    res.cell_mse.push_back(gaps);
    res.lambdas.push_back(lambda);
  }
  fill_extrapolation(res.points);
  return res;
}

RunResult run_mse_vs_s(const ExperimentConfig& cfg, const Dataset& pool) {
  auto [train, test] = subsample(
      pool, SplitSpec{cfg.n_train, cfg.n_test, seed_combine(cfg.master_seed, kSplitTag)});
  return run_mse_vs_s(cfg, train, test);
}

RunResult run_mse_vs_s(const ExperimentConfig& cfg) {
  const RawDataset raw = parse_libsvm_file(cfg.data_path);
  auto [train, test] = load_split(
      raw, SplitSpec{cfg.n_train, cfg.n_test, seed_combine(cfg.master_seed, kSplitTag)},
      cfg.scaling);
  return run_mse_vs_s(cfg, train, test);
}

namespace {

RunResult run_ratio_impl(const ExperimentConfig& cfg,
                         const std::function<std::pair<Dataset, Dataset>(int, std::uint64_t)>&
                             split_at) {
  check_grid(cfg.n_grid, "n");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (cfg.s_fixed < 1) throw std::invalid_argument("s must be >= 1");

  RunResult res;
  for (int n : cfg.n_grid) {
    const auto [train, test] =
        split_at(n, seed_combine(cfg.master_seed, kSplitTag, static_cast<std::uint64_t>(n)));
    const double lambda = resolve_lambda(cfg, n);
    const KernelSpec spec = resolve_kernel(cfg, train.X);
    res.b = feature_bound_constant(feature_family_for(spec.family), cfg.mode);

    const KrrModel exact = krr_fit(train.X, train.y, spec, lambda);
    ++res.krr_fit_count;
    const Eigen::VectorXd f_exact = krr_predict(exact, test.X);
    ++res.krr_predict_count;

    const double bound =
        plot_bound(kernel_matrix(spec, train.X), train.y, lambda, cfg.s_fixed);
    const auto gaps = repeat_gaps(cfg, train, test, spec, lambda, cfg.s_fixed,
                                  static_cast<std::uint64_t>(n), f_exact);
    res.points.push_back(summarize(n, gaps, bound));
    res.cell_mse.push_back(gaps);
    res.lambdas.push_back(lambda);
  }
  fill_extrapolation(res.points);
  return res;
}

}  // namespace

RunResult run_ratio_vs_n(const ExperimentConfig& cfg, const Dataset& pool) {
  return run_ratio_impl(cfg, [&](int n, std::uint64_t seed) {
    const int n_test = cfg.n_test > 0 ? cfg.n_test : n;
    return subsample(pool, SplitSpec{n, n_test, seed});
  });
}

RunResult run_ratio_vs_n(const ExperimentConfig& cfg) {
  const RawDataset raw = parse_libsvm_file(cfg.data_path);
  return run_ratio_impl(cfg, [&](int n, std::uint64_t seed) {
    const int n_test = cfg.n_test > 0 ? cfg.n_test : n;
    return load_split(raw, SplitSpec{n, n_test, seed}, cfg.scaling);
  });
}

namespace {

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void emit_csv(const std::vector<CurvePoint>& points, std::ostream& out) {
  out << "x,mse,mse_stderr,bound,ratio,extrapolation\n";
  for (const auto& pt : points) {
    out << fmt12(pt.x) << ',' << fmt12(pt.mse) << ',' << fmt12(pt.mse_stderr) << ','
        << fmt12(pt.bound) << ',' << (pt.ratio_defined ? fmt12(pt.ratio) : "nan")
        << ',' << fmt12(pt.extrapolation) << "\n";
  }
}

void emit_csv_file(const std::vector<CurvePoint>& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  emit_csv(points, out);
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"data", cfg.data_path},
      {"kernel", to_string(cfg.kernel)},
      {"lambda_mult", cfg.lambda_mult},
      {"lambda_override", cfg.lambda_override},
      {"sigma_override", cfg.sigma_override},
      {"s_grid", cfg.s_grid},
      {"n_grid", cfg.n_grid},
      {"s_fixed", cfg.s_fixed},
      {"repeats", cfg.repeats},
      {"n_train", cfg.n_train},
      {"n_test", cfg.n_test},
      {"seed", cfg.master_seed},
      {"feature_mode", to_string(cfg.mode)},
      {"scaling", cfg.scaling == ScalingSource::TrainOnly ? "train-only" : "global"},
  };
}

nlohmann::json run_report_json(const ExperimentConfig& cfg, const RunResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& pt = result.points[i];
    nlohmann::json jp{{"x", pt.x},
                      {"mse", pt.mse},
                      {"mse_stderr", pt.mse_stderr},
                      {"bound", pt.bound},
                      {"extrapolation", pt.extrapolation},
                      {"lambda", result.lambdas[i]}};
    if (pt.ratio_defined)
      jp["ratio"] = pt.ratio;
    else
      jp["ratio"] = nullptr;
    jp["ratio_defined"] = pt.ratio_defined;
    points.push_back(std::move(jp));
  }
  return nlohmann::json{{"config", config_json(cfg)}, {"b", result.b},
                        {"points", std::move(points)}};
}

void emit_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

RawDataset make_synthetic_raw(int n, int d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw std::invalid_argument("make_synthetic_raw: bad shape");
  Rng rng(seed_combine(seed, 0x53594e54));
  RawDataset raw;
  raw.declared_dim = d;
  raw.rows.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd x(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(j) = rng.gaussian();
    double t = std::sin(M_PI * x(0));
    if (d > 2) t += 0.5 * x(1) * x(2);
    if (d > 3) t += std::exp(-x(3) * x(3));
    if (d > 4) t += 0.3 * x(4);
    t += 0.1 * rng.gaussian();
    RawRow row;
    row.target = t;
    for (int j = 0; j < d; ++j)
      if (x(j) != 0.0) row.features.emplace_back(j + 1, x(j));
    raw.rows.push_back(std::move(row));
  }
  return raw;
}

double log_log_slope(const std::vector<CurvePoint>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("log_log_slope: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : points) {
    if (!(pt.x > 0.0) || !(pt.mse > 0.0))
      throw std::invalid_argument("log_log_slope: nonpositive coordinate");
    const double lx = std::log(pt.x), ly = std::log(pt.mse);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(points.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace rfmkrr
