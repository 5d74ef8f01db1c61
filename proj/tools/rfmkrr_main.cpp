#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfmkrr/bounds.hpp"
#include "rfmkrr/dataset.hpp"
#include "rfmkrr/experiment.hpp"
#include "rfmkrr/krr.hpp"
#include "rfmkrr/oracles.hpp"
#include "rfmkrr/rng.hpp"

namespace rfmkrr {
// Dispatch helpers so predict works on either model kind.
Eigen::VectorXd predict(const KrrModel& m, const Eigen::MatrixXd& X) {
  return krr_predict(m, X);
}
Eigen::VectorXd predict(const RfmModel& m, const Eigen::MatrixXd& X) {
  return rfm_predict(m, X);
}
}  // namespace rfmkrr

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitContract = 2;

using rfmkrr::ExperimentConfig;

struct CommonOpts {
  std::string data;
  std::string out;
  std::string kernel = "rbf";
  double lambda_mult = 1.0;
  double lambda = 0.0;  // explicit lambda wins over the c/sqrt(n) rule
  double sigma = 0.0;   // 0 = interpoint-distance heuristic
  std::uint64_t seed = 0;
  std::string feature_mode = "unbiased";
  std::string scaling = "train-only";
  int threads = 0;
};

std::string g_config_help;  // placeholder target for the --config help entry

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_data) {
  auto* data = cmd->add_option("--data", o.data, "libsvm dataset path");
  if (needs_data) data->required();
  cmd->add_option("--kernel", o.kernel, "rbf|laplace|angular")
      ->check(CLI::IsMember({"rbf", "laplace", "angular"}))
      ->capture_default_str();
  cmd->add_option("--lambda-mult", o.lambda_mult, "lambda = c / sqrt(n)")
      ->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "explicit lambda (overrides --lambda-mult)");
  cmd->add_option("--sigma", o.sigma, "kernel bandwidth (default: heuristic)");
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--feature-mode", o.feature_mode, "unbiased|paper-exact")
      ->check(CLI::IsMember({"unbiased", "paper-exact"}))
      ->capture_default_str();
  cmd->add_option("--scaling", o.scaling, "train-only|global feature scaling")
      ->check(CLI::IsMember({"train-only", "global"}))
      ->capture_default_str();
  cmd->add_option("--threads", o.threads, "repeat-level threads (0 = auto)");
  cmd->add_option("--out", o.out, "output path");
  cmd->add_option("--config", g_config_help,
                  "key=value config file; flags override its entries");
}

// Expands `--config FILE` into `--key=value` tokens for every key in the
// file that was not already given on the command line. Keeping this outside
// CLI11 gives the plain key=value format precise override semantics.
std::vector<std::string> expand_config(const std::vector<std::string>& argv_tokens) {
  std::vector<std::string> tokens;
  std::vector<std::string> config_paths;
  for (std::size_t i = 0; i < argv_tokens.size(); ++i) {
    const std::string& tok = argv_tokens[i];
    if (tok == "--config") {
      if (i + 1 >= argv_tokens.size())
        throw std::runtime_error("--config requires a file path");
      config_paths.push_back(argv_tokens[++i]);
    } else if (tok.rfind("--config=", 0) == 0) {
      config_paths.push_back(tok.substr(9));
    } else {
      tokens.push_back(tok);
    }
  }

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& tok : tokens)
      if (tok == flag || tok.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  for (const auto& path : config_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == first)
        throw std::runtime_error("config " + path + " line " +
                                 std::to_string(line_no) + ": expected key=value");
      const auto key_end = line.find_last_not_of(" \t", eq - 1);
      std::string key = line.substr(first, key_end - first + 1);
      const auto val_begin = line.find_first_not_of(" \t", eq + 1);
      std::string value =
          val_begin == std::string::npos ? "" : line.substr(val_begin);
      while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                                value.back() == '\r'))
        value.pop_back();
      if (!given(key)) tokens.push_back("--" + key + "=" + value);
    }
  }
  return tokens;
}

ExperimentConfig to_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  cfg.data_path = o.data;
  cfg.kernel = rfmkrr::kernel_family_from_string(o.kernel);
  cfg.lambda_mult = o.lambda_mult;
  cfg.lambda_override = o.lambda;
  cfg.sigma_override = o.sigma;
  cfg.master_seed = o.seed;
  cfg.mode = rfmkrr::feature_mode_from_string(o.feature_mode);
  cfg.scaling = o.scaling == "global" ? rfmkrr::ScalingSource::Global
                                      : rfmkrr::ScalingSource::TrainOnly;
  cfg.threads = o.threads;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

int check_points(const rfmkrr::RunResult& res) {
  for (const auto& pt : res.points)
    if (!(pt.mse >= 0.0) || !std::isfinite(pt.bound)) {
      std::cerr << "contract failure: invalid curve point at x = " << pt.x << "\n";
      return kExitContract;
    }
  return kExitOk;
}

int run_fit(const CommonOpts& o, const std::string& model_kind, int s) {
  const rfmkrr::Dataset ds = rfmkrr::preprocess(rfmkrr::parse_libsvm_file(o.data));
  const double n = static_cast<double>(ds.n());
  const double lambda = o.lambda > 0.0 ? o.lambda : o.lambda_mult / std::sqrt(n);
  const rfmkrr::KernelFamily family = rfmkrr::kernel_family_from_string(o.kernel);
  rfmkrr::KernelSpec spec{family, 1.0};
  if (family != rfmkrr::KernelFamily::AngularSimilarity)
    spec.sigma = o.sigma > 0.0 ? o.sigma : rfmkrr::bandwidth_heuristic(family, ds.X);

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + o.out);
  if (model_kind == "krr") {
    rfmkrr::save_model(rfmkrr::krr_fit(ds.X, ds.y, spec, lambda), out);
  } else {
    const auto fm = rfmkrr::draw_map(rfmkrr::feature_family_for(family),
                                     static_cast<int>(ds.dim()), s, spec.sigma, o.seed,
                                     rfmkrr::feature_mode_from_string(o.feature_mode));
    rfmkrr::save_model(rfmkrr::rfm_fit_x(ds.X, ds.y, lambda, fm), out);
  }
  std::cerr << "fit " << model_kind << " on " << ds.n() << " rows (lambda = " << lambda
            << ", sigma = " << spec.sigma << ") -> " << o.out << "\n";
  return kExitOk;
}

int run_predict(const std::string& model_path, const CommonOpts& o) {
  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + model_path);
  const auto model = rfmkrr::load_model(in);
  const rfmkrr::Dataset ds = rfmkrr::preprocess(rfmkrr::parse_libsvm_file(o.data));
  const Eigen::VectorXd pred = std::visit(
      [&](const auto& m) { return rfmkrr::predict(m, ds.X); }, model);
  std::string text = "prediction\n";
  char buf[40];
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g\n", pred(i));
    text += buf;
  }
  write_text(o.out, text);
  return kExitOk;
}

int run_bounds(const CommonOpts& o, int s, double delta, double epsilon, int n_train) {
  const rfmkrr::RawDataset raw = rfmkrr::parse_libsvm_file(o.data);
  rfmkrr::Dataset ds = rfmkrr::preprocess(raw);
  if (n_train > 0 && n_train < ds.n()) {
    // bounds need only a training subset; reuse the deterministic splitter
    ds = rfmkrr::subsample(ds, {n_train, static_cast<int>(ds.n()) - n_train, o.seed})
             .first;
  }
  const rfmkrr::KernelFamily family = rfmkrr::kernel_family_from_string(o.kernel);
  rfmkrr::KernelSpec spec{family, 1.0};
  if (family != rfmkrr::KernelFamily::AngularSimilarity)
    spec.sigma = o.sigma > 0.0 ? o.sigma : rfmkrr::bandwidth_heuristic(family, ds.X);
  const double lambda =
      o.lambda > 0.0 ? o.lambda
                     : o.lambda_mult / std::sqrt(static_cast<double>(ds.n()));
  const double b = rfmkrr::feature_bound_constant(
      rfmkrr::feature_family_for(family),
      rfmkrr::feature_mode_from_string(o.feature_mode));
  const auto report = rfmkrr::make_bound_report(rfmkrr::kernel_matrix(spec, ds.X),
                                                ds.y, lambda, s, b, delta, epsilon);
  write_text(o.out, rfmkrr::to_json(report).dump(2) + "\n");
  return kExitOk;
}

int run_verify(long long draws, int trials, int nodes, std::uint64_t seed,
               const std::string& out_path) {
  using rfmkrr::KernelFamily;
  using rfmkrr::KernelSpec;
  std::vector<rfmkrr::LemmaReport> reports;

  // Lemma 1 at its sample-size threshold: sign features on a small discrete
  // support, b = 1.
  {
    const int m = 8, d = 3, s = 8;
    const double epsilon = 0.3, delta = 0.1;
    rfmkrr::Rng rng(rfmkrr::seed_combine(seed, 1));
    Eigen::MatrixXd support(m, d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) support(i, j) = rng.gaussian();
    const auto fm = rfmkrr::draw_map(rfmkrr::FeatureFamily::RandomSign, d, s, 1.0,
                                     rfmkrr::seed_combine(seed, 2));
    const auto thr = rfmkrr::sample_threshold(epsilon, s, fm.b, delta);
    const auto res = rfmkrr::verify_lemma1(fm, support, static_cast<int>(thr), epsilon,
                                           delta, trials, rfmkrr::seed_combine(seed, 3));
    rfmkrr::LemmaReport rep;
    rep.lemma = "lemma1";
    rep.pass = res.pass;
    rep.margin = res.rate_allowance - res.observed_failure_rate;
    rep.draws = trials;
    rep.seed = seed;
    rep.worst_eigenvalue = res.observed_failure_rate;
    reports.push_back(rep);
  }

  // Lemmas 2 and 3 for each kernel family on a tiny instance.
  {
    rfmkrr::Rng rng(rfmkrr::seed_combine(seed, 4));
    const int n = 5, d = 3, s = 8;
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) X(i, j) = rng.gaussian();
    Eigen::VectorXd x_test(d);
    for (int j = 0; j < d; ++j) x_test(j) = rng.gaussian();
    for (KernelFamily family : {KernelFamily::Rbf, KernelFamily::Laplace,
                                KernelFamily::AngularSimilarity}) {
      const KernelSpec spec{family, 1.5};
      auto rep2 = rfmkrr::verify_lemma2(spec, X, s, draws, rfmkrr::seed_combine(seed, 5));
      rep2.lemma += "/" + rfmkrr::to_string(family);
      reports.push_back(rep2);
      auto rep3 = rfmkrr::verify_lemma3(spec, X, x_test, s, draws,
                                        rfmkrr::seed_combine(seed, 6));
      rep3.lemma += "/" + rfmkrr::to_string(family);
      reports.push_back(rep3);
    }
  }

  // Sign-feature identity: exact quadrature in d = 2, Monte Carlo in d = 3.
  {
    Eigen::MatrixXd X2(2, 2);
    X2 << 1.0, 0.0, std::cos(M_PI / 3.0), std::sin(M_PI / 3.0);
    auto repq = rfmkrr::verify_sign_identity(X2, 16, nodes, 0, seed);
    repq.lemma += "/quadrature";
    reports.push_back(repq);

    rfmkrr::Rng rng(rfmkrr::seed_combine(seed, 7));
    Eigen::MatrixXd X3(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) X3(i, j) = rng.gaussian();
      X3.row(i).normalize();
    }
    auto repm = rfmkrr::verify_sign_identity(X3, 8, nodes, std::max(draws, 20000LL),
                                             rfmkrr::seed_combine(seed, 8));
    repm.lemma += "/monte-carlo";
    reports.push_back(repm);
  }

  bool all_pass = true;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rep : reports) {
    all_pass = all_pass && rep.pass;
    std::cout << (rep.pass ? "[PASS] " : "[FAIL] ") << rep.lemma
              << " (margin = " << rep.margin << ")\n";
    out.push_back(rfmkrr::to_json(rep));
  }
  if (!out_path.empty()) rfmkrr::emit_json_file(out, out_path);
  return all_pass ? kExitOk : kExitContract;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel ridge regression with random feature maps"};
  app.name("rfmkrr");
  app.require_subcommand(1);

  CommonOpts fit_o, pred_o, bounds_o, mse_o, ratio_o;
  std::string fit_model = "krr", pred_model_path;
  int fit_s = 100;

  auto* fit = app.add_subcommand("fit", "fit a KRR or RFM-KRR model");
  add_common(fit, fit_o, true);
  fit->add_option("--model", fit_model, "krr|rfm")
      ->check(CLI::IsMember({"krr", "rfm"}))
      ->capture_default_str();
  fit->add_option("--s", fit_s, "number of random features (rfm)")
      ->capture_default_str();

  auto* predict = app.add_subcommand("predict", "predict with a saved model");
  add_common(predict, pred_o, true);
  predict->add_option("--model", pred_model_path, "model blob path")->required();

  int bounds_s = 100, bounds_n = 0;
  double bounds_delta = 0.05, bounds_eps = 0.1;
  auto* bounds = app.add_subcommand("bounds", "compute the bound report");
  add_common(bounds, bounds_o, true);
  bounds->add_option("--s", bounds_s, "number of random features")
      ->capture_default_str();
  bounds->add_option("--delta", bounds_delta, "failure probability")
      ->capture_default_str();
  bounds->add_option("--epsilon", bounds_eps, "second-moment tolerance")
      ->capture_default_str();
  bounds->add_option("--n-train", bounds_n, "subsample size (0 = all rows)");

  std::vector<int> s_grid, n_grid;
  int mse_repeats = 100, mse_n_train = 2000, mse_n_test = 2000;
  std::string mse_json;
  auto* mse = app.add_subcommand("mse-vs-s", "prediction-gap MSE against s");
  add_common(mse, mse_o, true);
  mse->add_option("--s-grid", s_grid, "feature counts")
      ->required()
      ->delimiter(',');
  mse->add_option("--repeats", mse_repeats, "feature-map redraws per s")
      ->capture_default_str();
  mse->add_option("--n-train", mse_n_train, "training rows")->capture_default_str();
  mse->add_option("--n-test", mse_n_test, "test rows")->capture_default_str();
  mse->add_option("--json", mse_json, "also write a JSON report here");

  int ratio_s = 100, ratio_repeats = 10, ratio_n_test = 0;
  std::string ratio_json;
  auto* ratio = app.add_subcommand("ratio-vs-n", "bound/MSE ratio against n");
  add_common(ratio, ratio_o, true);
  ratio->add_option("--n-grid", n_grid, "training-set sizes")
      ->required()
      ->delimiter(',');
  ratio->add_option("--s", ratio_s, "fixed feature count")->capture_default_str();
  ratio->add_option("--repeats", ratio_repeats, "feature-map redraws per n")
      ->capture_default_str();
  ratio->add_option("--n-test", ratio_n_test, "test rows per n (0 = n)");
  ratio->add_option("--json", ratio_json, "also write a JSON report here");

  long long verify_draws = 100000;
  int verify_trials = 200, verify_nodes = 4096;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify-lemmas", "Monte-Carlo lemma checks");
  verify->add_option("--draws", verify_draws, "feature-map draws")
      ->capture_default_str();
  verify->add_option("--trials", verify_trials, "training-set redraws (lemma 1)")
      ->capture_default_str();
  verify->add_option("--nodes", verify_nodes, "circle quadrature nodes")
      ->capture_default_str();
  verify->add_option("--seed", verify_seed, "master seed")->capture_default_str();
  verify->add_option("--out", verify_out, "JSON report path");
  verify->add_option("--config", g_config_help,
                     "key=value config file; flags override its entries");

  try {
    std::vector<std::string> tokens(argv + 1, argv + argc);
    tokens = expand_config(tokens);
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (*fit) return run_fit(fit_o, fit_model, fit_s);
    if (*predict) return run_predict(pred_model_path, pred_o);
    if (*bounds)
      return run_bounds(bounds_o, bounds_s, bounds_delta, bounds_eps, bounds_n);
    if (*mse) {
      ExperimentConfig cfg = to_config(mse_o);
      cfg.s_grid = s_grid;
      cfg.repeats = mse_repeats;
      cfg.n_train = mse_n_train;
      cfg.n_test = mse_n_test;
      const auto res = rfmkrr::run_mse_vs_s(cfg);
      const int rc = check_points(res);
      std::ostringstream csv;
      rfmkrr::emit_csv(res.points, csv);
      write_text(mse_o.out, csv.str());
      if (!mse_json.empty())
        rfmkrr::emit_json_file(rfmkrr::run_report_json(cfg, res), mse_json);
      return rc;
    }
    if (*ratio) {
      ExperimentConfig cfg = to_config(ratio_o);
      cfg.n_grid = n_grid;
      cfg.s_fixed = ratio_s;
      cfg.repeats = ratio_repeats;
      cfg.n_test = ratio_n_test;
      const auto res = rfmkrr::run_ratio_vs_n(cfg);
      const int rc = check_points(res);
      std::ostringstream csv;
      rfmkrr::emit_csv(res.points, csv);
      write_text(ratio_o.out, csv.str());
      if (!ratio_json.empty())
        rfmkrr::emit_json_file(rfmkrr::run_report_json(cfg, res), ratio_json);
      return rc;
    }
    if (*verify)
      return run_verify(verify_draws, verify_trials, verify_nodes, verify_seed,
                        verify_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
