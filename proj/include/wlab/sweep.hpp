#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wlab/eval.hpp"
#include "wlab/presets.hpp"

namespace wlab {

struct SweepOptions {
    Recipe recipe;
    std::string dataset_path;
    std::string out_dir;
    std::size_t jobs = 1;
};

struct SweepRunRow {
    std::string label;        // grid value or encoder kind
    double grid_value = 0.0;  // numeric sweeps
    std::size_t replicate = 0;
    double test_recon = 0.0;
    std::vector<double> scores_all;       // one entry per metric evaluation
    std::vector<double> scores_no_shape;  // same, on the reduced factor set
    double cdf_max_deviation = 0.0;       // cdf analysis
    std::string run_dir;
};

struct SweepAggregate {
    double grid_value = 0.0;
    ReplicateSummary all_factors;
    ReplicateSummary no_shape;
};

struct SweepReport {
    std::vector<SweepRunRow> rows;
    std::vector<SweepAggregate> aggregates;                // disentanglement
    std::vector<std::pair<std::string, double>> cdf_medians;  // cdf study
};

// Trains every (grid value, replicate) run of the recipe, evaluates the
// recipe's metrics, and writes raw and aggregated CSVs under out_dir. Runs
// execute concurrently up to `jobs`; raw rows are flushed as runs finish so
// partial results survive interruption.
SweepReport run_sweep(const SweepOptions& options, std::ostream* progress);

}  // namespace wlab
