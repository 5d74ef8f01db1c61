#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rfmkrr/dataset.hpp"
#include "rfmkrr/experiment.hpp"

// Writes a synthetic libsvm dataset (Gaussian inputs, smooth nonlinear
// target plus noise) for exercising the experiment harness offline.
int main(int argc, char** argv) {
  CLI::App app{"synthetic libsvm dataset generator"};
  int n = 4000, d = 5;
  std::uint64_t seed = 0;
  std::string out_path;
  app.add_option("--n", n, "number of rows")->capture_default_str();
  app.add_option("--d", d, "number of features")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--out", out_path, "output path (default stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    const rfmkrr::RawDataset raw = rfmkrr::make_synthetic_raw(n, d, seed);
    if (out_path.empty()) {
      rfmkrr::write_libsvm(raw, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot open output file: " + out_path);
      rfmkrr::write_libsvm(raw, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
