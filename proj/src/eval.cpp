#include "wlab/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wlab/errors.hpp"
#include "wlab/image_io.hpp"

namespace wlab {

using json = nlohmann::json;

namespace {

constexpr std::size_t kEvalBatch = 256;
constexpr double kMeanPixelMax = 36.0 / 1024.0;

std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

double test_recon_error(const WaeModel& model, const DatasetView& view) {
    NoGradGuard ng;
    double total = 0.0;
    for (std::size_t pos = 0; pos < view.size(); pos += kEvalBatch) {
        const std::size_t hi = std::min(pos + kEvalBatch, view.size());
        std::vector<std::size_t> chunk(hi - pos);
        std::iota(chunk.begin(), chunk.end(), pos);
        const Tensor x = view.gather(chunk);
        const Tensor x_hat = model.decode(model.encode(x).mean);
        total += recon_loss(x, x_hat).item() * static_cast<double>(hi - pos);
    }
    return total / static_cast<double>(view.size());
}

std::vector<double> encode_means(const WaeModel& model, const DatasetView& view) {
    NoGradGuard ng;
    const std::size_t d = model.spec().latent_dim;
    std::vector<double> out(view.size() * d);
    for (std::size_t pos = 0; pos < view.size(); pos += kEvalBatch) {
        const std::size_t hi = std::min(pos + kEvalBatch, view.size());
        std::vector<std::size_t> chunk(hi - pos);
        std::iota(chunk.begin(), chunk.end(), pos);
        const Tensor mu = model.encode(view.gather(chunk)).mean;
        std::copy(mu.values().begin(), mu.values().end(),
                  out.begin() + pos * d);
    }
    return out;
}

CdfDeviation cdf_deviation_from_values(std::vector<double> values,
                                       std::size_t grid_points) {
    if (values.empty()) throw ValueError("cdf deviation: no values");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());

    CdfDeviation out;
    out.grid.resize(grid_points);
    out.empirical.resize(grid_points);
    out.theoretical.resize(grid_points);
    out.deviation.resize(grid_points);
    for (std::size_t j = 0; j < grid_points; ++j) {
        const double t = (static_cast<double>(j) + 0.5) /
                         static_cast<double>(grid_points) * kMeanPixelMax;
        out.grid[j] = t;
        const auto it = std::upper_bound(values.begin(), values.end(), t);
        out.empirical[j] =
            static_cast<double>(std::distance(values.begin(), it)) / n;
        out.theoretical[j] = std::min(t / kMeanPixelMax, 1.0);
        out.deviation[j] = out.empirical[j] - out.theoretical[j];
        out.max_abs_deviation =
            std::max(out.max_abs_deviation, std::fabs(out.deviation[j]));
    }
    return out;
}

CdfDeviation mean_pixel_cdf_deviation(const WaeModel& model,
                                      std::size_t n_samples, RandomStream& rng,
                                      std::size_t grid_points) {
    if (n_samples == 0) throw ValueError("cdf deviation: n_samples must be > 0");
    NoGradGuard ng;
    const std::size_t d_x = model.spec().input_dim;
    std::vector<double> means;
    means.reserve(n_samples);
    for (std::size_t pos = 0; pos < n_samples; pos += kEvalBatch) {
        const std::size_t m = std::min(kEvalBatch, n_samples - pos);
        const Tensor z = sample_prior(model.spec().prior, m, rng);
        const Tensor imgs = model.decode(z);
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d_x; ++c)
                acc += imgs.values()[r * d_x + c];
            means.push_back(acc / static_cast<double>(d_x));
        }
    }
    return cdf_deviation_from_values(std::move(means), grid_points);
}

void write_cdf_csv(const CdfDeviation& d, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_cdf_csv: cannot open " + path);
    os << "mean_pixel,empirical_cdf,theoretical_cdf,deviation\n";
    os.precision(17);
    for (std::size_t j = 0; j < d.grid.size(); ++j)
        os << d.grid[j] << ',' << d.empirical[j] << ',' << d.theoretical[j]
           << ',' << d.deviation[j] << "\n";
}

std::size_t VarianceProfile::collapsed_count() const {
    return static_cast<std::size_t>(
        std::count(collapsed.begin(), collapsed.end(), true));
}

std::size_t VarianceProfile::noise_count() const {
    return static_cast<std::size_t>(std::count(noise.begin(), noise.end(), true));
}

std::size_t VarianceProfile::informative_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < collapsed.size(); ++i)
        if (!collapsed[i] && !noise[i]) ++n;
    return n;
}

void to_json(json& j, const VarianceProfile& p) {
    j = json{{"encoder_variance", p.encoder_variance},
             {"mean_variance", p.mean_variance},
             {"prior_variance", p.prior_variance},
             {"mean_log_variance", p.mean_log_variance},
             {"collapsed", p.collapsed},
             {"noise", p.noise},
             {"collapsed_count", p.collapsed_count()},
             {"noise_count", p.noise_count()},
             {"informative_count", p.informative_count()}};
}

VarianceProfile variance_profile(const WaeModel& model,
                                 const DatasetView& sample) {
    const ModelSpec& spec = model.spec();
    if (spec.encoder_kind == EncoderKind::deterministic)
        throw ValueError("variance_profile: deterministic encoder has no "
                         "variances");
    if (sample.size() == 0) throw ValueError("variance_profile: empty sample");

    NoGradGuard ng;
    const std::size_t d = spec.latent_dim;
    const double n = static_cast<double>(sample.size());
    std::vector<double> var_sum(d, 0.0), logvar_sum(d, 0.0);
    std::vector<double> mean_sum(d, 0.0), mean_sq_sum(d, 0.0);

    for (std::size_t pos = 0; pos < sample.size(); pos += kEvalBatch) {
        const std::size_t hi = std::min(pos + kEvalBatch, sample.size());
        std::vector<std::size_t> chunk(hi - pos);
        std::iota(chunk.begin(), chunk.end(), pos);
        const EncoderOutput enc = model.encode(sample.gather(chunk));
        const auto& mu = enc.mean.values();
        const auto& ls = enc.log_scale->values();
        for (std::size_t r = 0; r < hi - pos; ++r)
            for (std::size_t i = 0; i < d; ++i) {
                // true per-dimension variance of the encoding distribution
                double log_var;
                if (spec.encoder_kind == EncoderKind::gaussian) {
                    log_var = ls[r * d + i];
                } else {
                    // uniform on a box of side s: variance s^2 / 12
                    log_var = 2.0 * ls[r * d + i] - std::log(12.0);
                }
                var_sum[i] += std::exp(log_var);
                logvar_sum[i] += log_var;
                mean_sum[i] += mu[r * d + i];
                mean_sq_sum[i] += mu[r * d + i] * mu[r * d + i];
            }
    }

    VarianceProfile out;
    out.encoder_variance.resize(d);
    out.mean_variance.resize(d);
    out.prior_variance.assign(d, spec.prior.per_dim_variance());
    out.mean_log_variance.resize(d);
    out.collapsed.resize(d);
    out.noise.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        out.encoder_variance[i] = var_sum[i] / n;
        out.mean_log_variance[i] = logvar_sum[i] / n;
        const double m = mean_sum[i] / n;
        out.mean_variance[i] = std::max(mean_sq_sum[i] / n - m * m, 0.0);
        out.collapsed[i] = out.mean_log_variance[i] < -10.0;
        out.noise[i] = out.encoder_variance[i] >= 0.5 * out.prior_variance[i] &&
                       out.mean_variance[i] < 0.1 * out.prior_variance[i];
    }
    return out;
}

void to_json(json& j, const DisentanglementResult& r) {
    j = json{{"accuracy", r.accuracy},
             {"per_replicate", r.per_replicate},
             {"factor_set", r.factor_set},
             {"train_points", r.train_points}};
}

std::vector<std::size_t> factor_set_all(const LabeledImageDataset& ds) {
    return iota_vec(ds.grid().num_factors());
}

std::vector<std::size_t> factor_set_excluding_shape(
    const LabeledImageDataset& ds) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < ds.grid().num_factors(); ++f)
        if (ds.grid().names[f] != "shape") out.push_back(f);
    return out;
}

namespace {

// multiclass logistic regression, full-batch gradient descent on
// standardized features; returns held-out accuracy
double fit_and_score_classifier(const std::vector<double>& feats,
                                const std::vector<std::size_t>& labels,
                                std::size_t dim, std::size_t classes,
                                std::size_t n_train, std::size_t gd_steps,
                                double lr) {
    const std::size_t n_total = labels.size();
    const std::size_t n_test = n_total - n_train;
    if (n_train == 0 || n_test == 0)
        throw ValueError("disentanglement: split leaves an empty side");

    // standardize with training statistics
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (std::size_t r = 0; r < n_train; ++r)
        for (std::size_t c = 0; c < dim; ++c) mu[c] += feats[r * dim + c];
    for (double& v : mu) v /= static_cast<double>(n_train);
    for (std::size_t r = 0; r < n_train; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            const double dv = feats[r * dim + c] - mu[c];
            sd[c] += dv * dv;
        }
    for (double& v : sd) {
        v = std::sqrt(v / static_cast<double>(n_train));
        if (v < 1e-12) v = 1.0;
    }
    std::vector<double> x(feats.size());
    for (std::size_t r = 0; r < n_total; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            x[r * dim + c] = (feats[r * dim + c] - mu[c]) / sd[c];

    std::vector<double> w(dim * classes, 0.0), b(classes, 0.0);
    std::vector<double> logits(classes), probs(classes);
    std::vector<double> gw(dim * classes), gb(classes);

    for (std::size_t it = 0; it < gd_steps; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t r = 0; r < n_train; ++r) {
            double zmax = -1e300;
            for (std::size_t k = 0; k < classes; ++k) {
                double z = b[k];
                for (std::size_t c = 0; c < dim; ++c)
                    z += x[r * dim + c] * w[c * classes + k];
                logits[k] = z;
                zmax = std::max(zmax, z);
            }
            double zsum = 0.0;
            for (std::size_t k = 0; k < classes; ++k) {
                probs[k] = std::exp(logits[k] - zmax);
                zsum += probs[k];
            }
            for (std::size_t k = 0; k < classes; ++k) {
                const double delta =
                    probs[k] / zsum - (labels[r] == k ? 1.0 : 0.0);
                gb[k] += delta;
                for (std::size_t c = 0; c < dim; ++c)
                    gw[c * classes + k] += delta * x[r * dim + c];
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n_train);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i] * inv_n;
        for (std::size_t k = 0; k < classes; ++k) b[k] -= lr * gb[k] * inv_n;
    }

    std::size_t hits = 0;
    for (std::size_t r = n_train; r < n_total; ++r) {
        std::size_t best = 0;
        double best_z = -1e300;
        for (std::size_t k = 0; k < classes; ++k) {
            double z = b[k];
            for (std::size_t c = 0; c < dim; ++c)
                z += x[r * dim + c] * w[c * classes + k];
            if (z > best_z) {
                best_z = z;
                best = k;
            }
        }
        if (best == labels[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_test);
}

}  // namespace

DisentanglementResult disentanglement_score_codes(
    const std::vector<double>& codes, std::size_t code_dim,
    const LabeledImageDataset& ds, const DisentanglementConfig& cfg,
    RandomStream& rng) {
    if (cfg.factor_set.size() < 2)
        throw ValueError("disentanglement: factor set needs >= 2 factors");
    if (codes.size() != ds.num_images() * code_dim)
        throw ShapeError("disentanglement: code table size mismatch");
    if (cfg.n_train_points == 0 || cfg.pairs_per_point == 0)
        throw ValueError("disentanglement: need positive point and pair counts");

    const std::size_t classes = cfg.factor_set.size();
    DisentanglementResult result;
    result.factor_set = cfg.factor_set;
    result.train_points = cfg.n_train_points;

    for (std::size_t rep = 0; rep < std::max<std::size_t>(cfg.replicates, 1);
         ++rep) {
        std::vector<double> feats(cfg.n_train_points * code_dim, 0.0);
        std::vector<std::size_t> labels(cfg.n_train_points);
        for (std::size_t pnt = 0; pnt < cfg.n_train_points; ++pnt) {
            const std::size_t cls =
                static_cast<std::size_t>(rng.integer(classes));
            const std::size_t factor = cfg.factor_set[cls];
            labels[pnt] = cls;
            double* row = feats.data() + pnt * code_dim;
            for (std::size_t l = 0; l < cfg.pairs_per_point; ++l) {
                const auto [a, b] = sample_pair_with_shared_factor(ds, factor, rng);
                for (std::size_t c = 0; c < code_dim; ++c)
                    row[c] += std::fabs(codes[a * code_dim + c] -
                                        codes[b * code_dim + c]);
            }
            for (std::size_t c = 0; c < code_dim; ++c)
                row[c] /= static_cast<double>(cfg.pairs_per_point);
        }

        const std::size_t n_train = static_cast<std::size_t>(
            std::llround((1.0 - cfg.holdout_fraction) *
                         static_cast<double>(cfg.n_train_points)));
        result.per_replicate.push_back(fit_and_score_classifier(
            feats, labels, code_dim, classes, n_train, cfg.gd_steps, cfg.gd_lr));
    }

    result.accuracy =
        std::accumulate(result.per_replicate.begin(), result.per_replicate.end(),
                        0.0) /
        static_cast<double>(result.per_replicate.size());
    return result;
}

DisentanglementResult disentanglement_score(const WaeModel& model,
                                            const LabeledImageDataset& ds,
                                            const DisentanglementConfig& cfg,
                                            RandomStream& rng) {
    const std::vector<double> codes =
        encode_means(model, DatasetView::whole(ds));
    return disentanglement_score_codes(codes, model.spec().latent_dim, ds, cfg,
                                       rng);
}

ReplicateSummary replicate_protocol(
    std::vector<std::pair<double, double>> recon_score_pairs) {
    if (recon_score_pairs.empty())
        throw ValueError("replicate_protocol: empty input");
    // keep the top ceil(n/2) scores; sort on (score, recon) so the outcome is
    // independent of the input order
    std::sort(recon_score_pairs.begin(), recon_score_pairs.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second
                                              : a.first < b.first;
              });
    const std::size_t n = recon_score_pairs.size();
    const std::size_t keep = (n + 1) / 2;

    ReplicateSummary out;
    out.retained = keep;
    out.survivors.assign(recon_score_pairs.end() - static_cast<long>(keep),
                         recon_score_pairs.end());
    std::vector<double> scores, recons;
    for (const auto& [recon, score] : out.survivors) {
        recons.push_back(recon);
        scores.push_back(score);
    }
    out.mean_score = std::accumulate(scores.begin(), scores.end(), 0.0) /
                     static_cast<double>(keep);
    out.mean_recon = std::accumulate(recons.begin(), recons.end(), 0.0) /
                     static_cast<double>(keep);
    out.sd_score = sample_sd(scores, out.mean_score);
    out.sd_recon = sample_sd(recons, out.mean_recon);
    return out;
}

void latent_scatter_export(const WaeModel& model, const DatasetView& view,
                           std::size_t n, RandomStream& rng,
                           const std::string& prefix) {
    if (model.spec().latent_dim < 2)
        throw ValueError("latent_scatter_export: needs d_Z >= 2");
    NoGradGuard ng;
    const std::size_t d = model.spec().latent_dim;

    auto write_rows = [&](const std::string& path, const std::vector<double>& rows,
                          std::size_t count, const std::vector<std::string>& extra,
                          const std::vector<double>& extra_rows) {
        std::ofstream os(path);
        if (!os) throw IoError("latent_scatter_export: cannot open " + path);
        for (std::size_t c = 0; c < d; ++c) os << (c ? "," : "") << "z" << c;
        for (const std::string& e : extra) os << ',' << e;
        os << "\n";
        os.precision(17);
        const std::size_t ecols = extra.size();
        for (std::size_t r = 0; r < count; ++r) {
            for (std::size_t c = 0; c < d; ++c)
                os << (c ? "," : "") << rows[r * d + c];
            for (std::size_t c = 0; c < ecols; ++c)
                os << ',' << extra_rows[r * ecols + c];
            os << "\n";
        }
    };

    // aggregated posterior: encode random data points, one latent draw each
    std::vector<std::size_t> picks(n);
    for (std::size_t i = 0; i < n; ++i)
        picks[i] = static_cast<std::size_t>(rng.integer(view.size()));
    const EncoderOutput enc = model.encode(view.gather(picks));
    const Tensor z = sample_latent(enc, rng);
    write_rows(prefix + "posterior.csv", z.values(), n, {}, {});

    const Tensor zp = sample_prior(model.spec().prior, n, rng);
    write_rows(prefix + "prior.csv", zp.values(), n, {}, {});

    // encoder means for the whole view, with ground-truth factor indices
    const std::vector<double> means = encode_means(model, view);
    const LabeledImageDataset& ds = *view.dataset;
    std::vector<std::string> extra;
    for (const std::string& name : ds.grid().names) extra.push_back("f_" + name);
    std::vector<double> extra_rows(view.size() * extra.size());
    for (std::size_t r = 0; r < view.size(); ++r)
        for (std::size_t f = 0; f < extra.size(); ++f)
            extra_rows[r * extra.size() + f] =
                static_cast<double>(ds.factor_index(view.indices[r], f));
    write_rows(prefix + "means.csv", means, view.size(), extra, extra_rows);
}

void decoder_grid_export(const WaeModel& model, std::size_t image_width,
                         std::size_t image_height, std::size_t resolution,
                         const std::string& path) {
    const ModelSpec& spec = model.spec();
    if (spec.latent_dim != 2)
        throw ValueError("decoder_grid_export: needs d_Z == 2, model has " +
                         std::to_string(spec.latent_dim));
    if (image_width * image_height != spec.input_dim)
        throw ValueError("decoder_grid_export: image dims do not match the "
                         "decoder output size");
    if (resolution < 1) throw ValueError("decoder_grid_export: resolution < 1");

    NoGradGuard ng;
    const double extent =
        spec.prior.kind == PriorKind::uniform_box ? 1.0 : 3.0;
    std::vector<double> zs(resolution * resolution * 2);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            const double fx = resolution == 1
                                  ? 0.5
                                  : static_cast<double>(j) /
                                        static_cast<double>(resolution - 1);
            const double fy = resolution == 1
                                  ? 0.5
                                  : static_cast<double>(i) /
                                        static_cast<double>(resolution - 1);
            zs[(i * resolution + j) * 2] = -extent + 2.0 * extent * fx;
            // top row carries the largest latent coordinate
            zs[(i * resolution + j) * 2 + 1] = extent - 2.0 * extent * fy;
        }
    }
    const Tensor imgs = model.decode(
        Tensor::from_data({resolution * resolution, 2}, std::move(zs)));

    const std::size_t out_w = resolution * image_width;
    const std::size_t out_h = resolution * image_height;
    std::vector<unsigned char> canvas(out_w * out_h, 0);
    for (std::size_t i = 0; i < resolution; ++i)
        for (std::size_t j = 0; j < resolution; ++j) {
            const double* img =
                imgs.values().data() + (i * resolution + j) * spec.input_dim;
            for (std::size_t r = 0; r < image_height; ++r)
                for (std::size_t c = 0; c < image_width; ++c) {
                    const double v = img[r * image_width + c];
                    canvas[(i * image_height + r) * out_w + j * image_width + c] =
                        static_cast<unsigned char>(
                            std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
                }
        }
    write_gray_png(path, out_w, out_h, canvas);
}

}  // namespace wlab
