#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dbp/model.hpp"

namespace dbp::runner {

/// Algorithm-specific knobs. Unused fields are ignored by other algorithms.
struct Params
{
    // channel estimation
    double eta = 0.2;
    double sparsity = 0.1;
    double delay_span = 1.0;
    std::string profile = "uniform";  // uniform | exp-decay
    std::string topology = "star";    // star | daisy-chain
    // uplink / downlink compression
    std::vector<int> r;  // one entry for all DNs, or one per DN; empty = L clipped to M_i
    double rho = 1.0;
    int n_probe = 1;
    int n_pilot = 64;
    int n_taps = 1;
    int n_blocks = 1;
    int design_every = 1;
    double tol = 1e-9;
    int max_iter = 200;
    // downlink / multi-cell users
    int n_rx = 1;
    int streams = 1;
    double cross_gain = 0.5;
    int n_rounds = 5;
};

struct ExperimentSpec
{
    int schema_version = 1;
    std::string name = "experiment";
    std::string experiment;  // chanest | ul-eq | dl-precode | multicell | sweep
    std::string algorithm;
    model::SystemConfig cfg;
    bool explicit_split = false;  // m_sizes given in the file
    Params params;
    std::string sweep_parameter;  // empty: one point
    std::vector<double> sweep_values;
    int trials = 1;
};

/// Valid algorithm ids per experiment.
const std::map<std::string, std::vector<std::string>>& algorithms();

/// Parses YAML (or JSON) text. Errors carry the line and field.
ExperimentSpec parse_spec(const std::string& text, const std::string& origin = "<config>");
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Spec with the sweep parameter set to `value`; m_sizes re-split when M or C change.
ExperimentSpec at_sweep_point(const ExperimentSpec& spec, double value);

void validate(const ExperimentSpec& spec);

struct Row
{
    double sweep_value = 0.0;
    int trial = 0;
    std::vector<std::pair<std::string, double>> metrics;
};

struct RunOptions
{
    bool quiet = false;
    bool write_artifacts = true;  // ledgers, traces, precoders of trial 0 per sweep point
};

struct RunResult
{
    std::vector<Row> rows;  // sweep order, then trial order
    std::vector<std::filesystem::path> files;
};

/// Runs every (sweep value, trial) pair, trials in parallel, and writes
/// results.csv, aggregate.json and per-point artifacts into out_dir.
RunResult run(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
              const RunOptions& opt = {});

/// Evaluates one (sweep point, trial) without touching the filesystem.
Row run_trial(const ExperimentSpec& point, int trial);

/// Applies the thread-count override from DBP_THREADS, if set.
void apply_thread_env();

} // namespace dbp::runner
