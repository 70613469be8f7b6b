#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <omp.h>

#include <json.hpp>

#include "dbp/runner.hpp"

using namespace dbp;
using namespace dbp::runner;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(schema_version: 1
name: small
experiment: ul-eq
algorithm: bcd
seed: 4
trials: 3
system:
  M: 8
  C: 2
  L: 2
  n_sc: 4
  snr_db: 10
params:
  r: [2, 1]
  n_taps: 2
)";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("dbp_runner_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string error_of(const std::string& text)
{
    try {
        validate(parse_spec(text, "cfg.yaml"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Parse, ReadsEverySection)
{
    const auto s = parse_spec(kSmall);
    EXPECT_EQ(s.name, "small");
    EXPECT_EQ(s.experiment, "ul-eq");
    EXPECT_EQ(s.cfg.M, 8);
    EXPECT_EQ(s.cfg.m_sizes, (std::vector<int>{4, 4}));
    EXPECT_NEAR(s.cfg.noise_var, 0.1, 1e-15);
    EXPECT_EQ(s.params.r, (std::vector<int>{2, 1}));
    EXPECT_EQ(s.trials, 3);
    EXPECT_EQ(s.cfg.seed, 4u);
}

TEST(Parse, AcceptsJson)
{
    const auto s = parse_spec(R"({"experiment": "sweep", "algorithm": "lcmue",
        "system": {"M": 16, "C": 4, "n_sc": 2}, "sweep": {"parameter": "M", "values": [16, 32]}})");
    EXPECT_EQ(s.sweep_values.size(), 2u);
    EXPECT_EQ(at_sweep_point(s, 32).cfg.m_sizes, (std::vector<int>{8, 8, 8, 8}));
}

TEST(Parse, UnknownFieldReportsLine)
{
    const std::string err = error_of("algorithm: bcd\nexperiment: ul-eq\nsystem:\n  M: 4\n  bogus: 1\n");
    EXPECT_NE(err.find("cfg.yaml:5"), std::string::npos) << err;
    EXPECT_NE(err.find("system.bogus"), std::string::npos) << err;
}

TEST(Parse, WrongTypeReportsField)
{
    const std::string err = error_of("algorithm: bcd\nexperiment: ul-eq\nsystem:\n  M: eight\n");
    EXPECT_NE(err.find("system.M"), std::string::npos) << err;
    EXPECT_NE(err.find(":4"), std::string::npos) << err;
}

TEST(Parse, NoiseGivenTwiceIsRejected)
{
    EXPECT_NE(error_of("algorithm: bcd\nsystem:\n  M: 4\n  noise_var: 1\n  snr_db: 3\n").find("snr_db"),
              std::string::npos);
}

TEST(Validate, UnknownAlgorithmListsValidIds)
{
    const std::string err = error_of("experiment: dl-precode\nalgorithm: magic\nsystem:\n  M: 4\n");
    EXPECT_NE(err.find("magic"), std::string::npos);
    EXPECT_NE(err.find("wmmse, zf, lcp-wmmse, lcp-zf"), std::string::npos) << err;
}

TEST(Validate, RejectsBadCounts)
{
    EXPECT_FALSE(error_of("experiment: sweep\nalgorithm: lcmue\ntrials: 0\nsystem:\n  M: 4\n").empty());
    EXPECT_FALSE(error_of("experiment: sweep\nalgorithm: lcmue\nsystem:\n  M: 4\nsweep:\n  parameter: M\n  values: []\n").empty());
    EXPECT_FALSE(error_of("experiment: sweep\nalgorithm: lcmue\nsystem:\n  M: 4\nsweep:\n  parameter: seed\n  values: [1]\n").empty());
    EXPECT_FALSE(error_of("experiment: sweep\nalgorithm: lcmue\nsystem:\n  M: 4\n  C: 2\nparams:\n  r: [1, 1, 1]\n").empty());
}

TEST(Run, SinglePointSingleTrialGivesOneRowEach)
{
    auto spec = parse_spec(kSmall);
    spec.trials = 1;
    const auto dir = scratch("one");
    const auto res = run(spec, dir, {true, false});
    EXPECT_EQ(res.rows.size(), 1u);
    std::istringstream csv(slurp(dir / "results.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line))
        ++lines;
    EXPECT_EQ(lines, 2);
    const auto agg = nlohmann::json::parse(slurp(dir / "aggregate.json"));
    EXPECT_EQ(agg["schema_version"], 1);
    EXPECT_EQ(agg["rows"].size(), 1u);
    EXPECT_EQ(agg["rows"][0]["metrics"]["objective"]["std"], 0.0);
}

TEST(Run, RerunsAreByteIdenticalAcrossThreadCounts)
{
    const auto spec = parse_spec(kSmall);
    const auto a = scratch("a"), b = scratch("b");
    omp_set_num_threads(1);
    const auto ra = run(spec, a, {true, true});
    omp_set_num_threads(4);
    run(spec, b, {true, true});
    ASSERT_GE(ra.files.size(), 4u);
    for (const auto& f : ra.files)
        EXPECT_EQ(slurp(f), slurp(b / f.filename())) << f.filename();
}

TEST(Run, ScalingSweepChargesRawUpload)
{
    auto spec = parse_spec(R"(experiment: sweep
algorithm: centralized-eq
system: {M: 128, C: 4, L: 32, n_sc: 192, n_sym: 140}
sweep: {parameter: M, values: [128, 256, 512, 1024]}
)");
    const auto res = run(spec, scratch("fig"), {true, false});
    ASSERT_EQ(res.rows.size(), 4u);
    for (const auto& row : res.rows)
        EXPECT_EQ(row.metrics[0].second, row.sweep_value * 192 * 140);
}

TEST(Run, TrialIsIndependentOfTheBatch)
{
    const auto spec = parse_spec(kSmall);
    const auto res = run(spec, scratch("batch"), {true, false});
    const auto lone = run_trial(spec, 2);
    EXPECT_EQ(lone.metrics, res.rows[2].metrics);
}

TEST(Run, NumericalFailuresPropagate)
{
    // more receive antennas than the BS can null
    auto spec = parse_spec(R"(experiment: dl-precode
algorithm: zf
system: {M: 4, C: 2, K: 3}
params: {n_rx: 2}
)");
    EXPECT_THROW(run(spec, scratch("num"), {true, false}), NumericalError);
}

TEST(Configs, ShippedExamplesValidate)
{
    int n = 0;
    for (const auto& e : fs::recursive_directory_iterator(DBP_CONFIG_DIR))
        if (e.path().extension() == ".yaml") {
            EXPECT_NO_THROW(validate(load_spec(e.path()))) << e.path();
            ++n;
        }
    EXPECT_GT(n, 0);
}

TEST(Threads, EnvironmentOverrideIsChecked)
{
    setenv("DBP_THREADS", "3", 1);
    apply_thread_env();
    EXPECT_EQ(omp_get_max_threads(), 3);
    setenv("DBP_THREADS", "zero", 1);
    EXPECT_THROW(apply_thread_env(), ConfigError);
    unsetenv("DBP_THREADS");
}
