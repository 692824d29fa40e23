#include "wlab/models.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

#include "wlab/detail/binary_io.hpp"
#include "wlab/errors.hpp"

namespace wlab {

using json = nlohmann::json;

namespace {
constexpr double kLogScaleFloor = -30.0;
constexpr double kLogScaleCeil = 10.0;
}  // namespace

EncoderKind encoder_kind_from_name(const std::string& name) {
    if (name == "deterministic") return EncoderKind::deterministic;
    if (name == "gaussian") return EncoderKind::gaussian;
    if (name == "uniform_box") return EncoderKind::uniform_box;
    throw ValueError("unknown encoder kind: " + name);
}

const char* encoder_kind_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::deterministic: return "deterministic";
        case EncoderKind::gaussian: return "gaussian";
        case EncoderKind::uniform_box: return "uniform_box";
    }
    return "?";
}

void ModelSpec::validate() const {
    if (input_dim == 0 || latent_dim == 0)
        throw ValueError("ModelSpec: input_dim and latent_dim must be positive");
    if (prior.dim != latent_dim)
        throw ValueError("ModelSpec: prior dim != latent_dim");
    if (encoder_kind == EncoderKind::gaussian &&
        prior.kind != PriorKind::standard_gaussian)
        throw ValueError("ModelSpec: gaussian encoder requires gaussian prior");
    if (encoder_kind == EncoderKind::uniform_box &&
        prior.kind != PriorKind::uniform_box)
        throw ValueError("ModelSpec: uniform_box encoder requires uniform_box "
                         "prior");
    if (lambda < 0.0 || lambda_p < 0.0 || beta < 0.0)
        throw ValueError("ModelSpec: weights must be nonnegative");
    if (p != 1 && p != 2) throw ValueError("ModelSpec: p must be 1 or 2");
}

ModelSpec ModelSpec::resolved() const {
    ModelSpec s = *this;
    if (!(s.kernel.scale > 0.0) && !s.kernel.median_heuristic)
        s.kernel = KernelSpec::default_for_prior(s.prior);
    s.validate();
    return s;
}

void to_json(json& j, const ModelSpec& s) {
    j = json{{"encoder_kind", encoder_kind_name(s.encoder_kind)},
             {"encoder_hidden", s.encoder_hidden},
             {"decoder_hidden", s.decoder_hidden},
             {"input_dim", s.input_dim},
             {"latent_dim", s.latent_dim},
             {"prior", prior_kind_name(s.prior.kind)},
             {"kernel",
              {{"kind", kernel_kind_name(s.kernel.kind)},
               {"scale", s.kernel.scale},
               {"median_heuristic", s.kernel.median_heuristic}}},
             {"lambda", s.lambda},
             {"lambda_p", s.lambda_p},
             {"p", s.p},
             {"beta", s.beta},
             {"bound_means", s.bound_means}};
}

void from_json(const json& j, ModelSpec& s) {
    s.encoder_kind = encoder_kind_from_name(j.at("encoder_kind"));
    s.encoder_hidden = j.at("encoder_hidden").get<std::vector<std::size_t>>();
    s.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.latent_dim = j.at("latent_dim").get<std::size_t>();
    s.prior.kind = prior_kind_from_name(j.at("prior"));
    s.prior.dim = s.latent_dim;
    if (j.contains("kernel")) {
        const json& k = j.at("kernel");
        s.kernel.kind = kernel_kind_from_name(k.at("kind"));
        s.kernel.scale = k.at("scale").get<double>();
        s.kernel.median_heuristic = k.value("median_heuristic", false);
    } else {
        s.kernel.scale = 0.0;  // resolve from the prior later
    }
    s.lambda = j.at("lambda").get<double>();
    s.lambda_p = j.at("lambda_p").get<double>();
    s.p = j.at("p").get<int>();
    s.beta = j.value("beta", 1.0);
    s.bound_means = j.at("bound_means").get<bool>();
}

Tensor EncoderOutput::log_variance() const {
    if (!log_scale)
        throw ValueError("log_variance: deterministic encoder has no scale "
                         "head");
    // Gaussian parametrizes log sigma^2 directly; the box parametrizes log
    // side length, and sigma^2 = side^2
    if (kind == EncoderKind::gaussian) return *log_scale;
    return scale(*log_scale, 2.0);
}

WaeModel::WaeModel(ModelSpec spec, std::uint64_t init_seed)
    : spec_(spec.resolved()) {
    RandomStream rng = RandomStream::derive(init_seed, rng_tasks::init);

    std::size_t width = spec_.input_dim;
    for (std::size_t h : spec_.encoder_hidden) {
        encoder_trunk_.push_layer(width, h, Activation::tanh_fn, rng);
        width = h;
    }
    mean_head_.emplace(width, spec_.latent_dim,
                       spec_.bound_means ? Activation::tanh_fn
                                         : Activation::identity,
                       rng);
    if (spec_.encoder_kind != EncoderKind::deterministic)
        scale_head_.emplace(width, spec_.latent_dim, Activation::identity, rng);

    width = spec_.latent_dim;
    for (std::size_t h : spec_.decoder_hidden) {
        decoder_.push_layer(width, h, Activation::tanh_fn, rng);
        width = h;
    }
    decoder_.push_layer(width, spec_.input_dim, Activation::sigmoid_fn, rng);
}

EncoderOutput WaeModel::encode(const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != spec_.input_dim)
        throw ShapeError("encode: expected (n, " +
                         std::to_string(spec_.input_dim) + ") input");
    const Tensor trunk = encoder_trunk_.forward(x);
    EncoderOutput out;
    out.kind = spec_.encoder_kind;
    out.mean = mean_head_->forward(trunk);
    if (scale_head_)
        out.log_scale =
            clamp(scale_head_->forward(trunk), kLogScaleFloor, kLogScaleCeil);
    return out;
}

Tensor WaeModel::decode(const Tensor& z) const {
    if (z.rank() != 2 || z.shape()[1] != spec_.latent_dim)
        throw ShapeError("decode: expected (n, " +
                         std::to_string(spec_.latent_dim) + ") input");
    return decoder_.forward(z);
}

std::vector<Parameter*> WaeModel::parameters() {
    std::vector<Parameter*> out;
    encoder_trunk_.collect_params(out);
    mean_head_->collect_params(out);
    if (scale_head_) scale_head_->collect_params(out);
    decoder_.collect_params(out);
    return out;
}

std::vector<const Parameter*> WaeModel::parameters() const {
    auto* self = const_cast<WaeModel*>(this);
    std::vector<Parameter*> mut = self->parameters();
    return {mut.begin(), mut.end()};
}

Tensor sample_latent(const EncoderOutput& enc, RandomStream& rng) {
    if (enc.kind == EncoderKind::deterministic) return enc.mean;

    const std::size_t n = enc.mean.shape()[0], d = enc.mean.shape()[1];
    std::vector<double> noise(n * d);
    if (enc.kind == EncoderKind::gaussian) {
        for (double& v : noise) v = rng.normal();
        const Tensor eps = Tensor::from_data({n, d}, std::move(noise));
        return add(enc.mean, multiply(exp(scale(*enc.log_scale, 0.5)), eps));
    }
    // uniform box: mean + side ∘ (u - 1/2)
    for (double& v : noise) v = rng.uniform() - 0.5;
    const Tensor u = Tensor::from_data({n, d}, std::move(noise));
    return add(enc.mean, multiply(exp(*enc.log_scale), u));
}

Tensor recon_loss(const Tensor& x, const Tensor& x_hat) {
    if (x.shape() != x_hat.shape())
        throw ShapeError("recon_loss: shape mismatch");
    if (x.rank() != 2) throw ShapeError("recon_loss: need (n, d) inputs");
    const double n = static_cast<double>(x.shape()[0]);
    // -(x log xh + (1-x) log(1-xh)), summed over pixels, averaged over batch
    Tensor pos = multiply(x, log(x_hat));
    Tensor neg = multiply(add_scalar(scale(x, -1.0), 1.0),
                          log(add_scalar(scale(x_hat, -1.0), 1.0)));
    return scale(sum(add(pos, neg)), -1.0 / n);
}

Tensor log_var_penalty(const EncoderOutput& enc, double lambda_p, int p) {
    if (!enc.is_random())
        throw ValueError("log_var_penalty: deterministic encoder has no "
                         "log-variances");
    if (p != 1 && p != 2) throw ValueError("log_var_penalty: p must be 1 or 2");
    const double n = static_cast<double>(enc.mean.shape()[0]);
    Tensor a = abs(enc.log_variance());
    if (p == 2) a = multiply(a, a);
    return scale(sum(a), lambda_p / n);
}

ObjectiveBreakdown wae_objective(const WaeModel& model, const Tensor& x,
                                 const Tensor& prior_sample, RandomStream& rng) {
    const ModelSpec& spec = model.spec();
    if (x.shape()[0] < 2)
        throw ValueError("wae_objective: batch size must be >= 2");

    const EncoderOutput enc = model.encode(x);
    const Tensor z = sample_latent(enc, rng);
    const Tensor x_hat = model.decode(z);

    ObjectiveBreakdown out;
    Tensor total = recon_loss(x, x_hat);
    out.recon = total.item();

    if (spec.lambda > 0.0) {
        const Tensor mmd = mmd_sq_unbiased(z, prior_sample, spec.kernel);
        out.div_raw = mmd.item();
        const Tensor weighted = scale(mmd, spec.lambda);
        out.div_term = weighted.item();
        total = add(total, weighted);
    } else {
        // still evaluated for the log, but kept off the tape
        NoGradGuard ng;
        out.div_raw = mmd_sq_unbiased(z, prior_sample, spec.kernel).item();
    }

    if (enc.is_random() && spec.lambda_p > 0.0) {
        const Tensor pen = log_var_penalty(enc, spec.lambda_p, spec.p);
        out.penalty_term = pen.item();
        total = add(total, pen);
    }

    out.total = total;
    return out;
}

ObjectiveBreakdown bvae_objective(const WaeModel& model, const Tensor& x,
                                  RandomStream& rng) {
    const ModelSpec& spec = model.spec();
    if (spec.encoder_kind != EncoderKind::gaussian)
        throw ValueError("bvae_objective: requires a gaussian encoder");

    const EncoderOutput enc = model.encode(x);
    const Tensor z = sample_latent(enc, rng);
    const Tensor x_hat = model.decode(z);

    ObjectiveBreakdown out;
    Tensor total = recon_loss(x, x_hat);
    out.recon = total.item();

    const Tensor kl = gaussian_kl_diag(enc.mean, *enc.log_scale);
    out.div_raw = kl.item();
    if (spec.beta > 0.0) {
        const Tensor weighted = scale(kl, spec.beta);
        out.div_term = weighted.item();
        total = add(total, weighted);
    }

    out.total = total;
    return out;
}

// --- checkpoints -------------------------------------------------------------

void save_checkpoint(const std::string& path, const WaeModel& model,
                     std::int64_t step, std::int64_t epoch,
                     const std::string& rng_state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_checkpoint: cannot open " + path);

    const auto params = model.parameters();
    json pinfo = json::array();
    for (const Parameter* p : params)
        pinfo.push_back({{"size", p->value.size()}, {"adam_step", p->step}});
    json manifest = {{"spec", model.spec()},
                     {"step", step},
                     {"epoch", epoch},
                     {"rng_state", rng_state},
                     {"params", pinfo}};
    const std::string hs = manifest.dump();

    detail::write_magic(os, "WLABC1");
    detail::write_u64_le(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const Parameter* p : params) {
        detail::write_f64_array(os, p->value.values());
        detail::write_f64_array(os, p->first_moment);
        detail::write_f64_array(os, p->second_moment);
    }
    if (!os) throw IoError("save_checkpoint: write failed on " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_checkpoint: cannot open " + path);
    detail::expect_magic(is, "WLABC1", "load_checkpoint");
    const std::string hs = detail::read_header_json(is);

    json manifest;
    try {
        manifest = json::parse(hs);
    } catch (const json::parse_error& e) {
        throw HeaderError(std::string("load_checkpoint: manifest is not JSON: ") +
                          e.what());
    }

    ModelSpec spec;
    std::int64_t step, epoch;
    std::string rng_state;
    try {
        spec = manifest.at("spec").get<ModelSpec>();
        step = manifest.at("step").get<std::int64_t>();
        epoch = manifest.at("epoch").get<std::int64_t>();
        rng_state = manifest.at("rng_state").get<std::string>();
    } catch (const json::exception& e) {
        throw HeaderError(std::string("load_checkpoint: bad manifest: ") +
                          e.what());
    }

    LoadedCheckpoint out{WaeModel(spec, /*init_seed=*/0), step, epoch,
                         std::move(rng_state)};
    auto params = out.model.parameters();
    const json& pinfo = manifest.at("params");
    if (pinfo.size() != params.size())
        throw HeaderError("load_checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter* p = params[i];
        if (pinfo[i].at("size").get<std::size_t>() != p->value.size())
            throw HeaderError("load_checkpoint: parameter size mismatch");
        p->step = pinfo[i].at("adam_step").get<std::int64_t>();
        detail::read_f64_array(is, p->value.values_mut(), p->value.size(),
                               "checkpoint values");
        detail::read_f64_array(is, p->first_moment, p->value.size(),
                               "checkpoint first moment");
        detail::read_f64_array(is, p->second_moment, p->value.size(),
                               "checkpoint second moment");
    }
    return out;
}

}  // namespace wlab
