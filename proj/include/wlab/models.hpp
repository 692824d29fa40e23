#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "wlab/divergences.hpp"
#include "wlab/nn.hpp"
#include "wlab/rng.hpp"
#include "wlab/tensor.hpp"

namespace wlab {

enum class EncoderKind { deterministic, gaussian, uniform_box };

EncoderKind encoder_kind_from_name(const std::string& name);
const char* encoder_kind_name(EncoderKind k);

// Architecture and objective hyper-parameters of one model.
struct ModelSpec {
    EncoderKind encoder_kind = EncoderKind::deterministic;
    std::vector<std::size_t> encoder_hidden;
    std::vector<std::size_t> decoder_hidden;
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
    PriorSpec prior;
    KernelSpec kernel;       // scale <= 0 requests the prior-derived default
    double lambda = 10.0;    // divergence weight
    double lambda_p = 0.0;   // log-variance penalty weight
    int p = 1;               // penalty exponent, 1 or 2
    double beta = 1.0;       // KL weight of the VAE-style objective
    bool bound_means = true;

    void validate() const;
    // copy with the kernel scale made concrete
    ModelSpec resolved() const;
};

void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

// Encoder heads for one batch: mean locations, and for random encoders the
// log of the per-dimension scale (log sigma^2 for Gaussian, log side length
// for the uniform box).
struct EncoderOutput {
    EncoderKind kind = EncoderKind::deterministic;
    Tensor mean;
    std::optional<Tensor> log_scale;

    bool is_random() const { return kind != EncoderKind::deterministic; }
    // log of the per-dimension scale squared
    Tensor log_variance() const;
};

class WaeModel {
public:
    WaeModel(ModelSpec spec, std::uint64_t init_seed);

    const ModelSpec& spec() const { return spec_; }

    EncoderOutput encode(const Tensor& x) const;
    Tensor decode(const Tensor& z) const;

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;

private:
    ModelSpec spec_;
    Mlp encoder_trunk_;
    std::optional<DenseLayer> mean_head_;
    std::optional<DenseLayer> scale_head_;
    Mlp decoder_;
};

// One latent draw per row with reparameterized gradients; the deterministic
// kind returns the mean tensor itself.
Tensor sample_latent(const EncoderOutput& enc, RandomStream& rng);

// Batch mean of the summed per-pixel Bernoulli cross-entropy.
Tensor recon_loss(const Tensor& x, const Tensor& x_hat);

// (lambda_p / N) sum_n sum_i |log sigma_i^2(x_n)|^p
Tensor log_var_penalty(const EncoderOutput& enc, double lambda_p, int p);

// Scalar objective with its logged decomposition. total is graph-connected;
// the doubles are the values of the weighted terms (they sum to total), and
// div_raw is the unweighted divergence estimate, which is evaluated for the
// log even when its weight is zero.
struct ObjectiveBreakdown {
    Tensor total;
    double recon = 0.0;
    double div_term = 0.0;
    double penalty_term = 0.0;
    double div_raw = 0.0;
};

ObjectiveBreakdown wae_objective(const WaeModel& model, const Tensor& x,
                                 const Tensor& prior_sample, RandomStream& rng);

ObjectiveBreakdown bvae_objective(const WaeModel& model, const Tensor& x,
                                  RandomStream& rng);

// --- checkpoints -------------------------------------------------------------

struct LoadedCheckpoint {
    WaeModel model;
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    std::string rng_state;
};

void save_checkpoint(const std::string& path, const WaeModel& model,
                     std::int64_t step, std::int64_t epoch,
                     const std::string& rng_state);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace wlab
