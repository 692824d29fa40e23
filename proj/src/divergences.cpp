#include "wlab/divergences.hpp"

#include <algorithm>
#include <cmath>

#include "wlab/errors.hpp"

namespace wlab {

PriorKind prior_kind_from_name(const std::string& name) {
    if (name == "standard_gaussian" || name == "gaussian")
        return PriorKind::standard_gaussian;
    if (name == "uniform_box") return PriorKind::uniform_box;
    throw ValueError("unknown prior kind: " + name);
}

const char* prior_kind_name(PriorKind k) {
    return k == PriorKind::standard_gaussian ? "standard_gaussian"
                                             : "uniform_box";
}

KernelKind kernel_kind_from_name(const std::string& name) {
    if (name == "imq") return KernelKind::imq;
    if (name == "rbf") return KernelKind::rbf;
    throw ValueError("unknown kernel kind: " + name);
}

const char* kernel_kind_name(KernelKind k) {
    return k == KernelKind::imq ? "imq" : "rbf";
}

Tensor sample_prior(const PriorSpec& prior, std::size_t n, RandomStream& rng) {
    if (n < 1) throw ValueError("sample_prior: n must be >= 1");
    std::vector<double> out(n * prior.dim);
    if (prior.kind == PriorKind::standard_gaussian) {
        for (double& v : out) v = rng.normal();
    } else {
        for (double& v : out) v = rng.uniform(-1.0, 1.0);
    }
    return Tensor::from_data({n, prior.dim}, std::move(out));
}

KernelSpec KernelSpec::default_for_prior(const PriorSpec& prior) {
    KernelSpec k;
    k.kind = KernelKind::imq;
    k.scale = 2.0 * static_cast<double>(prior.dim) * prior.per_dim_variance();
    return k;
}

double kernel_eval(const KernelSpec& k, std::span<const double> x,
                   std::span<const double> y) {
    if (x.size() != y.size())
        throw ShapeError("kernel_eval: dimension mismatch");
    if (!(k.scale > 0.0)) throw ValueError("kernel_eval: scale must be > 0");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    if (k.kind == KernelKind::imq) return k.scale / (k.scale + d2);
    return std::exp(-d2 / (2.0 * k.scale * k.scale));
}

namespace {

double median_sq_distance(const Tensor& sqdist) {
    std::vector<double> v = sqdist.values();
    if (v.empty()) throw ValueError("median heuristic: empty distance matrix");
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

Tensor mmd_sq_unbiased(const Tensor& x, const Tensor& y, const KernelSpec& k) {
    if (x.rank() != 2 || y.rank() != 2 || x.shape()[1] != y.shape()[1])
        throw ShapeError("mmd_sq_unbiased: need n x d and m x d samples");
    const std::size_t n = x.shape()[0], m = y.shape()[0];
    if (n < 2 || m < 2)
        throw ValueError("mmd_sq_unbiased: need at least 2 samples per side");
    if (!(k.scale > 0.0) && !k.median_heuristic)
        throw ValueError("mmd_sq_unbiased: kernel scale must be > 0");

    const Tensor dxx = pairwise_sqdist(x, x);
    const Tensor dyy = pairwise_sqdist(y, y);
    const Tensor dxy = pairwise_sqdist(x, y);

    KernelSpec kk = k;
    if (k.kind == KernelKind::rbf && k.median_heuristic) {
        // bandwidth^2 = median squared cross-distance / 2, a constant in the
        // differentiation record
        const double med = median_sq_distance(dxy);
        kk.scale = std::sqrt(std::max(med, 1e-12) / 2.0);
    }

    auto apply_kernel = [&](const Tensor& d2) {
        if (kk.kind == KernelKind::imq) {
            // C / (C + d2)
            return scale(pow(add_scalar(d2, kk.scale), -1.0), kk.scale);
        }
        return exp(scale(d2, -1.0 / (2.0 * kk.scale * kk.scale)));
    };

    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    // within-sample means exclude the diagonal, whose kernel value is exactly
    // 1 for both kernels (zero self-distance)
    Tensor term_xx =
        scale(add_scalar(sum(apply_kernel(dxx)), -nd), 1.0 / (nd * (nd - 1.0)));
    Tensor term_yy =
        scale(add_scalar(sum(apply_kernel(dyy)), -md), 1.0 / (md * (md - 1.0)));
    Tensor term_xy = scale(sum(apply_kernel(dxy)), -2.0 / (nd * md));
    return add(add(term_xx, term_yy), term_xy);
}

Tensor gaussian_kl_diag(const Tensor& mu, const Tensor& log_var) {
    if (mu.shape() != log_var.shape())
        throw ShapeError("gaussian_kl_diag: shape mismatch");
    if (mu.rank() != 2) throw ShapeError("gaussian_kl_diag: need n x d inputs");
    const double n = static_cast<double>(mu.shape()[0]);
    // mean over batch of 1/2 sum_i (exp(lv) + mu^2 - 1 - lv)
    Tensor inner = add(add(exp(log_var), multiply(mu, mu)),
                       add_scalar(scale(log_var, -1.0), -1.0));
    return scale(sum(inner), 0.5 / n);
}

}  // namespace wlab
