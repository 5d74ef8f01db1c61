#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

struct TempDir {
  std::string path;
  TempDir() {
    char tmpl[] = "/tmp/rfmkrr_cli_XXXXXX";
    path = mkdtemp(tmpl);
  }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

const std::string kBin = RFMKRR_BIN;
const std::string kSynth = RFMKRR_SYNTH_BIN;

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("end-to-end through the executables") {
  TempDir dir;
  const std::string data = dir.file("data.libsvm");
  REQUIRE(run(kSynth + " --n 300 --d 3 --seed 5 --out " + data) == 0);

  SUBCASE("mse-vs-s runs are deterministic") {
    const std::string base = kBin + " mse-vs-s --data " + data +
                             " --kernel rbf --lambda-mult 1 --s-grid 4,8"
                             " --repeats 3 --n-train 80 --n-test 60 --seed 9 --out ";
    REQUIRE(run(base + dir.file("a.csv")) == 0);
    REQUIRE(run(base + dir.file("b.csv")) == 0);
    const std::string a = slurp(dir.file("a.csv"));
    CHECK(a == slurp(dir.file("b.csv")));
    CHECK(a.rfind("x,mse,mse_stderr,bound,ratio,extrapolation\n", 0) == 0);
  }

  SUBCASE("ratio-vs-n emits one row per n") {
    REQUIRE(run(kBin + " ratio-vs-n --data " + data +
                " --kernel laplace --lambda-mult 5 --n-grid 40,80 --s 8"
                " --repeats 2 --n-test 30 --seed 3 --out " +
                dir.file("r.csv")) == 0);
    const std::string csv = slurp(dir.file("r.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  SUBCASE("fit and predict round-trip") {
    REQUIRE(run(kBin + " fit --data " + data +
                " --kernel rbf --lambda-mult 1 --model krr --out " +
                dir.file("m.bin")) == 0);
    REQUIRE(run(kBin + " predict --model " + dir.file("m.bin") + " --data " + data +
                " --out " + dir.file("p.csv")) == 0);
    const std::string preds = slurp(dir.file("p.csv"));
    CHECK(preds.rfind("prediction\n", 0) == 0);
    CHECK(std::count(preds.begin(), preds.end(), '\n') == 301);

    REQUIRE(run(kBin + " fit --data " + data +
                " --kernel laplace --lambda-mult 1 --model rfm --s 16 --seed 2"
                " --out " +
                dir.file("m2.bin")) == 0);
    REQUIRE(run(kBin + " predict --model " + dir.file("m2.bin") + " --data " + data +
                " --out " + dir.file("p2.csv")) == 0);
    const std::string preds2 = slurp(dir.file("p2.csv"));
    CHECK(std::count(preds2.begin(), preds2.end(), '\n') == 301);
  }

  SUBCASE("bounds subcommand emits the report") {
    REQUIRE(run(kBin + " bounds --data " + data +
                " --kernel rbf --lambda-mult 1 --s 16 --n-train 60 --out " +
                dir.file("bounds.json")) == 0);
    const auto j = nlohmann::json::parse(slurp(dir.file("bounds.json")));
    CHECK(j["n"] == 60);
    CHECK(j["s"] == 16);
    CHECK(j["theorem1_bound"].get<double>() ==
          doctest::Approx(8.0 * j["plot_bound"].get<double>()));
    CHECK(j["plot_bound"].get<double>() <= j["cap"].get<double>() / 16.0 * 1.0001);
  }

  SUBCASE("config file values are overridable by flags") {
    {
      std::ofstream cfg(dir.file("exp.cfg"));
      cfg << "kernel=laplace\nrepeats=3\ns-grid=4,8\nn-train=60\nn-test=40\n";
    }
    REQUIRE(run(kBin + " mse-vs-s --data " + data + " --config " + dir.file("exp.cfg") +
                " --repeats 2 --seed 1 --out " + dir.file("c.csv") + " --json " +
                dir.file("c.json")) == 0);
    const auto j = nlohmann::json::parse(slurp(dir.file("c.json")));
    CHECK(j["config"]["kernel"] == "laplace");
    CHECK(j["config"]["repeats"] == 2);  // flag beats config
    CHECK(j["config"]["n_train"] == 60);
  }

  SUBCASE("errors exit with code 1") {
    CHECK(run(kBin + " mse-vs-s --data " + dir.file("missing.libsvm") +
              " --s-grid 4 --out " + dir.file("x.csv") + " 2>/dev/null") == 1);
  }
}

TEST_CASE("verify-lemmas passes at reduced scale") {
  TempDir dir;
  REQUIRE(run(kBin + " verify-lemmas --draws 4000 --trials 40 --seed 12 --out " +
              dir.file("lemmas.json") + " > /dev/null") == 0);
  const auto j = nlohmann::json::parse(slurp(dir.file("lemmas.json")));
  CHECK(j.is_array());
  CHECK(j.size() >= 8);
  for (const auto& rep : j) CHECK(rep["pass"] == true);
}

}  // TEST_SUITE
