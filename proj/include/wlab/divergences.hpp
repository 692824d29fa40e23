#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "wlab/rng.hpp"
#include "wlab/tensor.hpp"

namespace wlab {

enum class PriorKind { standard_gaussian, uniform_box };

PriorKind prior_kind_from_name(const std::string& name);
const char* prior_kind_name(PriorKind k);

// Latent prior: standard Gaussian, or the uniform distribution on
// [-1, 1]^dim.
struct PriorSpec {
    PriorKind kind = PriorKind::standard_gaussian;
    std::size_t dim = 2;

    double per_dim_variance() const {
        return kind == PriorKind::standard_gaussian ? 1.0 : 1.0 / 3.0;
    }
};

// i.i.d. prior draws as an (n, dim) constant tensor.
Tensor sample_prior(const PriorSpec& prior, std::size_t n, RandomStream& rng);

enum class KernelKind { imq, rbf };

KernelKind kernel_kind_from_name(const std::string& name);
const char* kernel_kind_name(KernelKind k);

// imq: C / (C + ||x-y||^2) with scale = C
// rbf: exp(-||x-y||^2 / (2 h^2)) with scale = h; the bandwidth may instead be
// set per batch from the median pairwise distance
struct KernelSpec {
    KernelKind kind = KernelKind::imq;
    double scale = 1.0;
    bool median_heuristic = false;  // rbf only

    // the published default for this estimator: C = 2 d_Z sigma_z^2
    static KernelSpec default_for_prior(const PriorSpec& prior);
};

double kernel_eval(const KernelSpec& k, std::span<const double> x,
                   std::span<const double> y);

// Unbiased squared-MMD U-statistic between row samples X (n x d) and
// Y (m x d); may be negative. Differentiable through either argument that
// requires gradients.
Tensor mmd_sq_unbiased(const Tensor& x, const Tensor& y, const KernelSpec& k);

// Batch mean of the closed-form KL(N(mu, diag(exp(log_var))) || N(0, I)).
Tensor gaussian_kl_diag(const Tensor& mu, const Tensor& log_var);

}  // namespace wlab
