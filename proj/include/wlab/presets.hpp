#pragma once

#include <string>
#include <vector>

#include "wlab/training.hpp"

namespace wlab {

enum class SweepAnalysis { single_run, disentanglement, cdf };

// A named, seed-pinned experiment recipe: a base training configuration plus,
// for sweep recipes, the hyper-parameter grid and replicate counts.
struct Recipe {
    std::string name;
    TrainConfig base;
    SweepAnalysis analysis = SweepAnalysis::single_run;
    std::string sweep_parameter;          // "lambda_p", "beta" or "encoder_kind"
    std::vector<double> grid;             // numeric sweep values
    std::vector<std::string> kind_grid;   // encoder kinds for the cdf study
    std::size_t replicates = 1;
    std::size_t metric_evals = 3;
    std::size_t cdf_samples = 100000;
};

std::vector<std::string> recipe_names();

// Throws ValueError listing the known presets when the name is unknown.
Recipe make_recipe(const std::string& name);

// Base model shapes used by the presets.
ModelSpec fading_squares_model(EncoderKind kind);
ModelSpec sprites_model(EncoderKind kind, bool bound_means);

}  // namespace wlab
