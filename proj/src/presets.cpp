#include "wlab/presets.hpp"

#include <sstream>

#include "wlab/errors.hpp"

namespace wlab {

ModelSpec fading_squares_model(EncoderKind kind) {
    ModelSpec m;
    m.encoder_kind = kind;
    m.encoder_hidden = {256, 128};
    m.decoder_hidden = {128, 256};
    m.input_dim = 1024;
    m.latent_dim = 2;
    m.prior = {PriorKind::uniform_box, 2};
    m.lambda = 10.0;
    m.lambda_p = 0.0;
    m.p = 1;
    m.bound_means = true;
    return m;
}

ModelSpec sprites_model(EncoderKind kind, bool bound_means) {
    ModelSpec m;
    m.encoder_kind = kind;
    m.encoder_hidden = {1200, 1200};
    m.decoder_hidden = {1200, 1200, 1200};
    m.input_dim = 4096;
    m.latent_dim = 16;
    m.prior = {kind == EncoderKind::uniform_box ? PriorKind::uniform_box
                                                : PriorKind::standard_gaussian,
               16};
    m.lambda = 10.0;
    m.lambda_p = 0.0;
    m.p = 1;
    m.bound_means = bound_means;
    return m;
}

std::vector<std::string> recipe_names() {
    return {"fading-squares-det", "fading-squares-box", "cdf-study",
            "dsprites-wae-sweep", "dsprites-bvae-sweep"};
}

Recipe make_recipe(const std::string& name) {
    Recipe r;
    r.name = name;
    r.base.batch_size = 100;
    r.base.learning_rate = 1e-3;
    r.base.seed = 1;
    r.base.log_interval = 50;
    r.base.holdout_fraction = 0.1;

    if (name == "fading-squares-det") {
        r.base.objective = ObjectiveKind::wae;
        r.base.model = fading_squares_model(EncoderKind::deterministic);
        r.base.epochs = 300;
        return r;
    }
    if (name == "fading-squares-box") {
        r.base.objective = ObjectiveKind::wae;
        r.base.model = fading_squares_model(EncoderKind::uniform_box);
        r.base.epochs = 300;
        return r;
    }
    if (name == "cdf-study") {
        r.base.objective = ObjectiveKind::wae;
        r.base.model = fading_squares_model(EncoderKind::deterministic);
        r.base.epochs = 300;
        r.analysis = SweepAnalysis::cdf;
        r.sweep_parameter = "encoder_kind";
        r.kind_grid = {"deterministic", "uniform_box"};
        r.replicates = 5;
        return r;
    }
    if (name == "dsprites-wae-sweep") {
        r.base.objective = ObjectiveKind::wae;
        r.base.model = sprites_model(EncoderKind::gaussian, /*bound_means=*/true);
        r.base.epochs = 40;
        r.analysis = SweepAnalysis::disentanglement;
        r.sweep_parameter = "lambda_p";
        r.grid = {0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0};
        r.replicates = 5;
        r.metric_evals = 3;
        return r;
    }
    if (name == "dsprites-bvae-sweep") {
        r.base.objective = ObjectiveKind::bvae;
        r.base.model = sprites_model(EncoderKind::gaussian, /*bound_means=*/false);
        r.base.epochs = 40;
        r.analysis = SweepAnalysis::disentanglement;
        r.sweep_parameter = "beta";
        r.grid = {1.0, 3.0, 10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0};
        r.replicates = 10;
        r.metric_evals = 3;
        return r;
    }

    std::ostringstream os;
    os << "unknown preset '" << name << "'; available:";
    for (const std::string& n : recipe_names()) os << " " << n;
    throw ValueError(os.str());
}

}  // namespace wlab
