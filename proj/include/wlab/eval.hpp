#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <utility>
#include <vector>

#include "wlab/datasets.hpp"
#include "wlab/models.hpp"

namespace wlab {

// Mean reconstruction loss over a held-out split, encoding through the mean
// (no sampling noise).
double test_recon_error(const WaeModel& model, const DatasetView& view);

// Encoder means for every image of the view, row-major (N, d_Z).
std::vector<double> encode_means(const WaeModel& model, const DatasetView& view);

// --- mean-pixel CDF diagnostics ----------------------------------------------

struct CdfDeviation {
    std::vector<double> grid;         // evaluation points over [0, 36/1024]
    std::vector<double> empirical;    // empirical CDF of the mean pixel values
    std::vector<double> theoretical;  // uniform CDF on [0, 36/1024]
    std::vector<double> deviation;    // empirical - theoretical
    double max_abs_deviation = 0.0;
};

CdfDeviation cdf_deviation_from_values(std::vector<double> mean_pixel_values,
                                       std::size_t grid_points = 1024);

// Generates n_samples images from the model prior through the decoder and
// compares the CDF of their mean pixel values against the uniform law of the
// fading-squares data.
CdfDeviation mean_pixel_cdf_deviation(const WaeModel& model,
                                      std::size_t n_samples, RandomStream& rng,
                                      std::size_t grid_points = 1024);

void write_cdf_csv(const CdfDeviation& d, const std::string& path);

// --- encoder variance diagnostics --------------------------------------------

struct VarianceProfile {
    std::vector<double> encoder_variance;   // mean over sample, true variance
    std::vector<double> mean_variance;      // spread of the encoder means
    std::vector<double> prior_variance;
    std::vector<double> mean_log_variance;  // mean over sample of log sigma^2
    std::vector<bool> collapsed;
    std::vector<bool> noise;

    std::size_t collapsed_count() const;
    std::size_t noise_count() const;
    std::size_t informative_count() const;  // neither collapsed nor noise
};

void to_json(nlohmann::json& j, const VarianceProfile& p);

// A dimension is collapsed when its mean log-variance sits below -10, and a
// noise dimension when the encoder fills at least half the prior variance
// while the means carry almost none of it.
VarianceProfile variance_profile(const WaeModel& model, const DatasetView& sample);

// --- disentanglement metric ---------------------------------------------------

struct DisentanglementConfig {
    std::vector<std::size_t> factor_set;
    std::size_t n_train_points = 5000;
    std::size_t pairs_per_point = 64;
    double holdout_fraction = 0.2;
    std::size_t gd_steps = 400;
    double gd_lr = 0.5;
    std::size_t replicates = 1;
};

struct DisentanglementResult {
    double accuracy = 0.0;  // mean of the replicates, held-out accuracy
    std::vector<double> per_replicate;
    std::vector<std::size_t> factor_set;
    std::size_t train_points = 0;
};

void to_json(nlohmann::json& j, const DisentanglementResult& r);

// Scores an arbitrary per-image code table (N, code_dim): for each sampled
// point, a factor is drawn, L pairs sharing it are averaged into
// |code(a) - code(b)|, and a standardized multiclass logistic regression
// predicts the shared factor; accuracy is measured on the held-out 20%.
DisentanglementResult disentanglement_score_codes(
    const std::vector<double>& codes, std::size_t code_dim,
    const LabeledImageDataset& ds, const DisentanglementConfig& cfg,
    RandomStream& rng);

// Same metric on the encoder mean map of a model.
DisentanglementResult disentanglement_score(const WaeModel& model,
                                            const LabeledImageDataset& ds,
                                            const DisentanglementConfig& cfg,
                                            RandomStream& rng);

// factor-set helpers: all factors, or all but "shape"
std::vector<std::size_t> factor_set_all(const LabeledImageDataset& ds);
std::vector<std::size_t> factor_set_excluding_shape(const LabeledImageDataset& ds);

// --- replicate filtering -------------------------------------------------------

struct ReplicateSummary {
    double mean_score = 0.0, sd_score = 0.0;
    double mean_recon = 0.0, sd_recon = 0.0;
    std::size_t retained = 0;
    std::vector<std::pair<double, double>> survivors;  // (recon, score)
};

// Discards the lower half of the scores (keeping ceil(n/2)) and summarizes
// the surviving (reconstruction, score) pairs.
ReplicateSummary replicate_protocol(
    std::vector<std::pair<double, double>> recon_score_pairs);

// --- latent-space exports -------------------------------------------------------

// Writes <prefix>posterior.csv, <prefix>prior.csv and <prefix>means.csv.
void latent_scatter_export(const WaeModel& model, const DatasetView& view,
                           std::size_t n, RandomStream& rng,
                           const std::string& prefix);

// Tiles decoder outputs over a uniform grid of the 2-D prior support into a
// grayscale PNG (resolution x resolution tiles of width x height pixels).
void decoder_grid_export(const WaeModel& model, std::size_t image_width,
                         std::size_t image_height, std::size_t resolution,
                         const std::string& path);

}  // namespace wlab
