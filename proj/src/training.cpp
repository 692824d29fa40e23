#include "wlab/training.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wlab/errors.hpp"

namespace wlab {

using json = nlohmann::json;
namespace fs = std::filesystem;

ObjectiveKind objective_kind_from_name(const std::string& name) {
    if (name == "wae") return ObjectiveKind::wae;
    if (name == "bvae") return ObjectiveKind::bvae;
    throw ValueError("unknown objective: " + name);
}

const char* objective_kind_name(ObjectiveKind k) {
    return k == ObjectiveKind::wae ? "wae" : "bvae";
}

void TrainConfig::validate() const {
    if (batch_size < 2) throw ValueError("TrainConfig: batch_size must be >= 2");
    if (epochs == 0) throw ValueError("TrainConfig: epochs must be positive");
    if (!(learning_rate > 0.0))
        throw ValueError("TrainConfig: learning_rate must be > 0");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
        throw ValueError("TrainConfig: holdout_fraction must be in [0, 1)");
    if (objective == ObjectiveKind::bvae &&
        model.encoder_kind != EncoderKind::gaussian)
        throw ValueError("TrainConfig: the bvae objective requires a gaussian "
                         "encoder");
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"dataset", c.dataset_path},
             {"objective", objective_kind_name(c.objective)},
             {"model", c.model},
             {"batch_size", c.batch_size},
             {"learning_rate", c.learning_rate},
             {"epochs", c.epochs},
             {"seed", c.seed},
             {"log_interval", c.log_interval},
             {"checkpoint_interval", c.checkpoint_interval},
             {"holdout_fraction", c.holdout_fraction},
             {"out_dir", c.out_dir}};
}

void from_json(const json& j, TrainConfig& c) {
    c.dataset_path = j.at("dataset").get<std::string>();
    c.objective = objective_kind_from_name(j.value("objective", "wae"));
    c.model = j.at("model").get<ModelSpec>();
    c.batch_size = j.value("batch_size", std::size_t{100});
    c.learning_rate = j.value("learning_rate", 1e-3);
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.value("seed", std::uint64_t{1});
    c.log_interval = j.value("log_interval", std::size_t{50});
    c.checkpoint_interval = j.value("checkpoint_interval", std::size_t{0});
    c.holdout_fraction = j.value("holdout_fraction", 0.1);
    c.out_dir = j.value("out_dir", std::string{});
}

bool TrainLog::same_trajectory(const TrainLog& other) const {
    if (records.size() != other.records.size()) return false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrainRecord &a = records[i], &b = other.records[i];
        if (a.step != b.step || a.total != b.total || a.recon != b.recon ||
            a.div_term != b.div_term || a.penalty_term != b.penalty_term ||
            a.div_raw != b.div_raw)
            return false;
    }
    return true;
}

namespace {

json record_to_json(const TrainRecord& r) {
    return json{{"step", r.step},
                {"total", r.total},
                {"recon", r.recon},
                {"div_term", r.div_term},
                {"penalty_term", r.penalty_term},
                {"div_raw", r.div_raw},
                {"walltime_s", r.walltime_s}};
}

struct RunState {
    WaeModel model;
    std::int64_t step = 0;
    RandomStream noise;
};

TrainResult run_loop(const TrainConfig& config, const LabeledImageDataset& ds,
                     RunState state, const json& extra_snapshot_fields) {
    config.validate();
    if (config.model.input_dim != ds.image_size())
        throw SpecMismatchError("train: model input_dim " +
                                std::to_string(config.model.input_dim) +
                                " != dataset image size " +
                                std::to_string(ds.image_size()));

    auto [train_view, test_view] =
        split_holdout(ds, config.holdout_fraction, config.seed);
    (void)test_view;  // evaluation reconstructs the same split from the config

    const std::size_t steps_per_epoch = [&] {
        RandomStream probe = RandomStream::derive(config.seed, rng_tasks::shuffle, 0);
        return shuffled_batches(train_view.size(), config.batch_size, probe).size();
    }();
    const std::int64_t total_steps =
        static_cast<std::int64_t>(steps_per_epoch * config.epochs);
    if (state.step > total_steps)
        throw ValueError("train: checkpoint is already past the configured "
                         "epoch count");

    fs::path out_dir;
    std::ofstream log_file;
    if (!config.out_dir.empty()) {
        out_dir = config.out_dir;
        fs::create_directories(out_dir);
        json snapshot;
        to_json(snapshot, config);
        for (auto& [k, v] : extra_snapshot_fields.items()) snapshot[k] = v;
        std::ofstream cfg(out_dir / "config.json");
        cfg << snapshot.dump(2) << "\n";
        log_file.open(out_dir / "log.jsonl",
                      state.step > 0 ? std::ios::app : std::ios::out);
    }

    std::vector<Parameter*> params = state.model.parameters();
    TrainLog log;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    auto emit = [&](const ObjectiveBreakdown& obj) {
        TrainRecord r;
        r.step = state.step;
        r.total = obj.total.item();
        r.recon = obj.recon;
        r.div_term = obj.div_term;
        r.penalty_term = obj.penalty_term;
        r.div_raw = obj.div_raw;
        r.walltime_s = elapsed();
        log.records.push_back(r);
        if (log_file.is_open()) {
            log_file << record_to_json(r).dump() << "\n";
            log_file.flush();
        }
    };

    auto save_at = [&](const fs::path& p) {
        save_checkpoint(p.string(), state.model, state.step,
                        static_cast<std::int64_t>(state.step / steps_per_epoch),
                        state.noise.state());
    };

    std::size_t epoch = static_cast<std::size_t>(state.step / steps_per_epoch);
    std::size_t skip_in_epoch =
        static_cast<std::size_t>(state.step % steps_per_epoch);

    for (; epoch < config.epochs; ++epoch, skip_in_epoch = 0) {
        RandomStream shuffle_rng =
            RandomStream::derive(config.seed, rng_tasks::shuffle, epoch);
        const auto batches =
            shuffled_batches(train_view.size(), config.batch_size, shuffle_rng);
        for (std::size_t b = skip_in_epoch; b < batches.size(); ++b) {
            const Tensor x = train_view.gather(batches[b]);

            ObjectiveBreakdown obj = [&] {
                if (config.objective == ObjectiveKind::wae) {
                    const Tensor prior_sample = sample_prior(
                        state.model.spec().prior, config.batch_size, state.noise);
                    return wae_objective(state.model, x, prior_sample,
                                         state.noise);
                }
                return bvae_objective(state.model, x, state.noise);
            }();

            const double total = obj.total.item();
            if (!std::isfinite(total)) {
                std::ostringstream os;
                os << "non-finite objective at step " << state.step + 1
                   << ": total=" << total << " recon=" << obj.recon
                   << " div_term=" << obj.div_term
                   << " penalty_term=" << obj.penalty_term;
                throw NumericError(os.str());
            }

            backward(obj.total);
            adam_step(params, config.learning_rate);
            state.step += 1;

            const bool last = state.step == total_steps;
            if (last || (config.log_interval > 0 &&
                         state.step % static_cast<std::int64_t>(
                                          config.log_interval) ==
                             0))
                emit(obj);
            if (!out_dir.empty() && config.checkpoint_interval > 0 &&
                state.step %
                        static_cast<std::int64_t>(config.checkpoint_interval) ==
                    0 &&
                !last)
                save_at(out_dir / ("ckpt_" + std::to_string(state.step) + ".bin"));
        }
    }

    std::string final_path;
    if (!out_dir.empty()) {
        final_path = (out_dir / "final.ckpt").string();
        save_at(final_path);
    }
    return TrainResult{std::move(state.model), std::move(log),
                       std::move(final_path), state.step};
}

}  // namespace

TrainResult train_on(const TrainConfig& config, const LabeledImageDataset& ds) {
    TrainConfig cfg = config;
    if (cfg.model.input_dim == 0) cfg.model.input_dim = ds.image_size();
    cfg.model = cfg.model.resolved();
    cfg.validate();
    RunState state{WaeModel(cfg.model, cfg.seed), 0,
                   RandomStream::derive(cfg.seed, rng_tasks::noise)};
    return run_loop(cfg, ds, std::move(state), json::object());
}

TrainResult train(const TrainConfig& config) {
    const LabeledImageDataset ds = load_dataset(config.dataset_path);
    return train_on(config, ds);
}

TrainResult resume_on(const std::string& checkpoint_path,
                      const TrainConfig& config, const LabeledImageDataset& ds) {
    TrainConfig cfg = config;
    if (cfg.model.input_dim == 0) cfg.model.input_dim = ds.image_size();
    cfg.model = cfg.model.resolved();
    cfg.validate();

    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    const json want = json(cfg.model);
    const json have = json(ckpt.model.spec());
    if (want != have)
        throw SpecMismatchError(
            "resume: model spec differs from checkpoint: config " +
            want.dump() + " vs checkpoint " + have.dump());

    RunState state{std::move(ckpt.model), ckpt.step,
                   RandomStream::derive(cfg.seed, rng_tasks::noise)};
    state.noise.restore(ckpt.rng_state);
    const json extra = {{"resumed_from", checkpoint_path},
                        {"resumed_at_step", ckpt.step}};
    return run_loop(cfg, ds, std::move(state), extra);
}

TrainResult resume(const std::string& checkpoint_path, const TrainConfig& config) {
    const LabeledImageDataset ds = load_dataset(config.dataset_path);
    return resume_on(checkpoint_path, config, ds);
}

}  // namespace wlab
