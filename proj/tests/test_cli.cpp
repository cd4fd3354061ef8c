#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <flowbench/cli.hpp>
#include <flowbench/container.hpp>
#include <flowbench/dataio.hpp>
#include <flowbench/errors.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

using namespace flowbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "flowbench-cli-tests";
  fs::create_directories(dir);
  return dir;
}

std::string binary() {
  const char* bin = std::getenv("FLOWBENCH_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

int run(const std::string& args, const fs::path& stderr_to = {}) {
  std::string cmd = binary() + " " + args;
  if (!stderr_to.empty()) cmd += " 2>" + stderr_to.string();
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Raw array payload region; the header differs across runs because the
// provenance echo carries the output path.
std::string payload(const fs::path& path) {
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() >= 20);
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 12, 8);
  return bytes.substr(20 + header_len);
}

}  // namespace

TEST_CASE("generate: file exists and reads back, same seed gives identical bytes") {
  auto dir = work_dir();
  auto out1 = dir / "ar1.fbf";
  auto out2 = dir / "ar2.fbf";
  CHECK(run("generate --kind ar_process --seed 7 --out " + out1.string() +
            " --set samples=5000") == 0);
  CHECK(run("generate --kind ar_process --seed 7 --out " + out2.string() +
            " --set samples=5000") == 0);
  Container c = read_container(out1.string());
  CHECK(c.arrays.count("y") == 1);
  CHECK(c.meta.at("generator") == "ar_process");
  CHECK(payload(out1) == payload(out2));

  // Different seed changes the payload.
  auto out3 = dir / "ar3.fbf";
  CHECK(run("generate --kind ar_process --seed 8 --out " + out3.string() +
            " --set samples=5000") == 0);
  CHECK(payload(out1) != payload(out3));
}

TEST_CASE("generate: invalid kind fails with a single-line config error naming kinds") {
  auto dir = work_dir();
  auto err_file = dir / "stderr.txt";
  const int status =
      run("generate --kind bogus --out " + (dir / "x.fbf").string(), err_file);
  CHECK(status != 0);
  const std::string err = slurp(err_file);
  CHECK(err.rfind("error[config]:", 0) == 0);
  CHECK(err.find("ar_process") != std::string::npos);
  CHECK(err.find('\n') == err.size() - 1);  // single line
}

TEST_CASE("pod end-to-end: fit-apply produces a valid results file, evaluate scores it") {
  auto dir = work_dir();
  auto train = dir / "pod_train.fbf";
  auto results = dir / "pod_results.fbf";
  auto metrics = dir / "pod_metrics.fbf";
  auto csv = dir / "pod_metrics.csv";
  CHECK(run("generate --kind low_rank_field --seed 1 --out " + train.string() +
            " --set space=200 --set snapshots=40 --set \"energies=[9,4,1,0.5]\"") == 0);
  // Compress the training snapshots themselves: with the full modal count the
  // reconstruction is exact, which pins the whole pipeline.
  auto test = train;
  CHECK(run("fit-apply --method pod --train " + train.string() + " --test-input " +
            test.string() + " --out " + results.string() + " --set modes=4") == 0);

  ResultsFile r = read_results(results.string());
  CHECK(r.tag == ChallengeTag::compression);
  CHECK(r.arrays.at("modes").shape()[1] == 4);
  CHECK(validate_results(r, ChallengeTag::compression).empty());

  CHECK(run("evaluate --results " + results.string() + " --truth " + test.string() +
            " --out " + metrics.string() + " --csv " + csv.string()) == 0);
  MetricsFile m = read_metrics(metrics.string());
  CHECK(m.values.at("root_nmse").f64()[0] < 1e-6);  // same modal subspace by construction
  CHECK(m.values.at("compression_ratio").f64()[0] == doctest::Approx(200.0 / 4.0));
  const std::string csv_text = slurp(csv);
  CHECK(csv_text.rfind("index,metric,mean,std", 0) == 0);

  // Normalizing against the run's own timings pins both ratios at one.
  auto metrics2 = dir / "pod_metrics_base.fbf";
  CHECK(run("evaluate --results " + results.string() + " --truth " + test.string() +
            " --out " + metrics2.string() + " --baseline-results " + results.string()) == 0);
  MetricsFile m2 = read_metrics(metrics2.string());
  CHECK(m2.values.at("encode_time_ratio").f64()[0] == doctest::Approx(1.0));
  CHECK(m2.values.at("decode_time_ratio").f64()[0] == doctest::Approx(1.0));
}

TEST_CASE("dmd preset end-to-end: forecasts shaped sequences x horizon x space") {
  auto dir = work_dir();
  auto data = dir / "modal.fbf";
  auto results = dir / "dmd_results.fbf";
  auto metrics = dir / "dmd_metrics.fbf";
  CHECK(run("generate --kind linear_modal --seed 3 --out " + data.string() +
            " --set space=80 --set pairs=99 --set sequences=5") == 0);
  CHECK(run("fit-apply --preset cavity-70-30 --test-input " + data.string() + " --out " +
            results.string() + " --set rank=3") == 0);
  ResultsFile r = read_results(results.string());
  CHECK(r.tag == ChallengeTag::forecasting);
  const auto& shape = r.arrays.at("forecasts").shape();
  CHECK(shape == std::vector<std::int64_t>{5, 30, 80});
  // Provenance carries the expanded preset.
  json prov = json::parse(r.provenance);
  CHECK(prov.at("m_in") == 70);
  CHECK(prov.at("preset") == "cavity-70-30");

  CHECK(run("evaluate --results " + results.string() + " --truth " + data.string() +
            " --out " + metrics.string()) == 0);
  MetricsFile m = read_metrics(metrics.string());
  // Noiseless linear data: DMD forecasts are essentially exact.
  Eigen::VectorXd mean_curve =
      vector_from_array(m.values.at("nmse_mean"));
  CHECK(mean_curve.size() == 30);
  CHECK(mean_curve.maxCoeff() < 1e-10);
}

TEST_CASE("dmdc preset end-to-end: global model forecasts with known inputs") {
  auto dir = work_dir();
  auto data = dir / "forced.fbf";
  auto results = dir / "dmdc_results.fbf";
  auto metrics = dir / "dmdc_metrics.fbf";
  CHECK(run("generate --kind forced_linear --seed 13 --out " + data.string() +
            " --set steps=220 --set sequences=2 --set space=50") == 0);
  CHECK(run("fit-apply --preset airfoil-70-130 --train " + data.string() +
            " --test-input " + data.string() + " --out " + results.string()) == 0);
  ResultsFile r = read_results(results.string());
  CHECK(r.tag == ChallengeTag::forecasting);
  CHECK(r.arrays.at("forecasts").shape() == std::vector<std::int64_t>{2, 130, 50});

  CHECK(run("evaluate --results " + results.string() + " --truth " + data.string() +
            " --out " + metrics.string()) == 0);
  MetricsFile m = read_metrics(metrics.string());
  Eigen::VectorXd curve = vector_from_array(m.values.at("nmse_mean"));
  CHECK(curve.size() == 130);
  // Noiseless linear system identified from its own trajectories.
  CHECK(curve.maxCoeff() < 1e-10);
}

TEST_CASE("wiener preset end-to-end: warm-up offset declared as 200") {
  auto dir = work_dir();
  auto train = dir / "fir_train.fbf";
  auto test = dir / "fir_test.fbf";
  auto results = dir / "wiener_results.fbf";
  auto metrics = dir / "wiener_metrics.fbf";
  auto csv = dir / "wiener_metrics.csv";
  CHECK(run("generate --kind causal_fir_pair --seed 4 --out " + train.string() +
            " --set samples=20000") == 0);
  CHECK(run("generate --kind causal_fir_pair --seed 5 --out " + test.string() +
            " --set samples=3000") == 0);
  CHECK(run("fit-apply --preset jet-sensing-200 --train " + train.string() +
            " --test-input " + test.string() + " --out " + results.string()) == 0);
  ResultsFile r = read_results(results.string());
  CHECK(r.tag == ChallengeTag::sensing);
  CHECK(r.arrays.at("warmup").i64()[0] == 200);

  CHECK(run("evaluate --results " + results.string() + " --truth " + test.string() +
            " --out " + metrics.string() + " --csv " + csv.string()) == 0);
  MetricsFile m = read_metrics(metrics.string());
  CHECK(m.values.at("nmse_total").f64()[0] < 1e-3);
}

TEST_CASE("evaluate: tag mismatch between results and truth fails cleanly") {
  auto dir = work_dir();
  auto data = dir / "mm_modal.fbf";
  auto truth = dir / "mm_fir.fbf";
  auto results = dir / "mm_results.fbf";
  auto err_file = dir / "mm_stderr.txt";
  CHECK(run("generate --kind linear_modal --seed 6 --out " + data.string() +
            " --set space=40 --set pairs=99 --set sequences=2") == 0);
  CHECK(run("generate --kind causal_fir_pair --seed 6 --out " + truth.string() +
            " --set samples=2000") == 0);
  CHECK(run("fit-apply --preset cavity-70-30 --test-input " + data.string() + " --out " +
            results.string() + " --set rank=3") == 0);
  const int status = run("evaluate --results " + results.string() + " --truth " +
                             truth.string() + " --out " + (dir / "mm_metrics.fbf").string(),
                         err_file);
  CHECK(status != 0);
  CHECK(slurp(err_file).rfind("error[evaluation]:", 0) == 0);
}

TEST_CASE("inspect prints the header") {
  auto dir = work_dir();
  auto data = dir / "inspect_me.fbf";
  CHECK(run("generate --kind ar_process --seed 9 --out " + data.string() +
            " --set samples=500") == 0);
  auto out_file = dir / "inspect_out.txt";
  CHECK(std::system((binary() + std::string(" inspect ") + data.string() + " >" +
                     out_file.string())
                        .c_str()) == 0);
  const std::string text = slurp(out_file);
  CHECK(text.find("generator = ar_process") != std::string::npos);
  CHECK(text.find("y  f64") != std::string::npos);
}

TEST_CASE("missing input path is a single-line error with nonzero exit") {
  auto dir = work_dir();
  auto err_file = dir / "missing_stderr.txt";
  const int status = run("fit-apply --method pod --train " + (dir / "nope.fbf").string() +
                             " --test-input " + (dir / "nope.fbf").string() + " --out " +
                             (dir / "r.fbf").string(),
                         err_file);
  CHECK(status != 0);
  const std::string err = slurp(err_file);
  CHECK(err.rfind("error[io]:", 0) == 0);
}

TEST_CASE("config file + flag overrides: flags win") {
  auto dir = work_dir();
  auto config_path = dir / "config.json";
  {
    std::ofstream cfg(config_path);
    cfg << R"({"kind":"ar_process","samples":500,"seed":1,"out":")"
        << (dir / "cfg_a.fbf").string() << R"("})";
  }
  CHECK(run("generate --config " + config_path.string()) == 0);
  // Override the seed by flag; outputs must differ.
  CHECK(run("generate --config " + config_path.string() + " --seed 2 --out " +
            (dir / "cfg_b.fbf").string()) == 0);
  CHECK(payload(dir / "cfg_a.fbf") != payload(dir / "cfg_b.fbf"));

  // In-process calls produce byte-identical outputs to the binary.
  json cfg = json::parse(slurp(config_path));
  cfg["out"] = (dir / "cfg_c.fbf").string();
  cfg["threads"] = 1;
  cmd_generate(cfg);
  CHECK(payload(dir / "cfg_a.fbf") == payload(dir / "cfg_c.fbf"));
}

TEST_CASE("in-process evaluate matches the binary bit-for-bit") {
  auto dir = work_dir();
  auto train = dir / "ip_train.fbf";
  auto test = dir / "ip_test.fbf";
  auto results = dir / "ip_results.fbf";
  auto metrics_bin = dir / "ip_metrics_bin.fbf";
  auto metrics_proc = dir / "ip_metrics_proc.fbf";
  CHECK(run("generate --kind causal_fir_pair --seed 11 --out " + train.string() +
            " --set samples=12000") == 0);
  CHECK(run("generate --kind causal_fir_pair --seed 12 --out " + test.string() +
            " --set samples=2500") == 0);
  CHECK(run("fit-apply --method lse --train " + train.string() + " --test-input " +
            test.string() + " --out " + results.string() + " --set history=100") == 0);
  CHECK(run("evaluate --results " + results.string() + " --truth " + test.string() +
            " --out " + metrics_bin.string()) == 0);

  json cfg{{"results", results.string()},
           {"truth", test.string()},
           {"out", metrics_proc.string()},
           {"threads", 1}};
  cmd_evaluate(cfg);
  CHECK(slurp(metrics_bin) == slurp(metrics_proc));
}

TEST_CASE("evaluate: zero forecasts score NMSE one") {
  auto dir = work_dir();
  auto data = dir / "zf_modal.fbf";
  auto results = dir / "zf_results.fbf";
  auto metrics = dir / "zf_metrics.fbf";
  CHECK(run("generate --kind linear_modal --seed 31 --out " + data.string() +
            " --set space=30 --set pairs=99 --set sequences=2") == 0);
  // Hand-built results file full of zeros.
  ResultsFile r;
  r.tag = ChallengeTag::forecasting;
  r.method_name = "null";
  r.provenance = R"({"m_in":70})";
  r.arrays.emplace("forecasts",
                   TypedArray({2, 30, 30},
                              std::vector<double>(static_cast<std::size_t>(2 * 30 * 30), 0.0)));
  write_results(results.string(), r);
  CHECK(run("evaluate --results " + results.string() + " --truth " + data.string() +
            " --out " + metrics.string()) == 0);
  MetricsFile m = read_metrics(metrics.string());
  Eigen::VectorXd curve = vector_from_array(m.values.at("nmse_mean"));
  for (Eigen::Index k = 0; k < curve.size(); ++k)
    CHECK(curve(k) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("FLOWBENCH_THREADS only affects scheduling, not payloads") {
  auto dir = work_dir();
  auto a = dir / "env_a.fbf";
  auto b = dir / "env_b.fbf";
  CHECK(std::system(("FLOWBENCH_THREADS=1 " + binary() + " generate --kind linear_modal" +
                     " --seed 19 --set sequences=3 --out " + a.string())
                        .c_str()) == 0);
  CHECK(std::system(("FLOWBENCH_THREADS=4 " + binary() + " generate --kind linear_modal" +
                     " --seed 19 --set sequences=3 --out " + b.string())
                        .c_str()) == 0);
  CHECK(payload(a) == payload(b));
}

TEST_CASE("fit-apply sensing: emit_transfer attaches the estimator arrays") {
  auto dir = work_dir();
  auto train = dir / "tf_train.fbf";
  auto test = dir / "tf_test.fbf";
  auto results = dir / "tf_results.fbf";
  CHECK(run("generate --kind causal_fir_pair --seed 33 --out " + train.string() +
            " --set samples=12000") == 0);
  CHECK(run("generate --kind causal_fir_pair --seed 34 --out " + test.string() +
            " --set samples=2000") == 0);
  CHECK(run("fit-apply --preset jet-sensing-200 --train " + train.string() +
            " --test-input " + test.string() + " --out " + results.string() +
            " --set emit_transfer=true") == 0);
  ResultsFile r = read_results(results.string());
  CHECK(r.arrays.count("T_hat") == 1);
  CHECK(r.arrays.count("T_lag") == 1);
  CHECK(r.arrays.count("frequencies") == 1);
  CHECK(validate_results(r, ChallengeTag::sensing).empty());
}

TEST_CASE("unknown preset is a config error") {
  auto dir = work_dir();
  auto err_file = dir / "preset_stderr.txt";
  const int status = run("fit-apply --preset bogus-preset --test-input x --out y", err_file);
  CHECK(status != 0);
  CHECK(slurp(err_file).rfind("error[config]:", 0) == 0);
}
