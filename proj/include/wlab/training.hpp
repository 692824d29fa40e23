#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "wlab/datasets.hpp"
#include "wlab/models.hpp"

namespace wlab {

enum class ObjectiveKind { wae, bvae };

ObjectiveKind objective_kind_from_name(const std::string& name);
const char* objective_kind_name(ObjectiveKind k);

struct TrainConfig {
    std::string dataset_path;
    ObjectiveKind objective = ObjectiveKind::wae;
    ModelSpec model;
    std::size_t batch_size = 100;
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::uint64_t seed = 1;
    std::size_t log_interval = 50;        // steps between log records
    std::size_t checkpoint_interval = 0;  // steps; 0 keeps only the final one
    double holdout_fraction = 0.1;
    std::string out_dir;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainRecord {
    std::int64_t step = 0;
    double total = 0.0;
    double recon = 0.0;
    double div_term = 0.0;
    double penalty_term = 0.0;
    double div_raw = 0.0;
    double walltime_s = 0.0;  // informational; not part of the determinism contract
};

struct TrainLog {
    std::vector<TrainRecord> records;

    // equality over the seeded-deterministic fields (wall-clock excluded)
    bool same_trajectory(const TrainLog& other) const;
};

struct TrainResult {
    WaeModel model;
    TrainLog log;
    std::string final_checkpoint;
    std::int64_t steps = 0;
};

// Runs the configured training loop: seeded minibatch epochs of Adam over
// the WAE or beta-VAE objective, JSONL logging, periodic checkpoints, and a
// resolved-config snapshot in out_dir. Aborts with NumericError if the
// objective turns non-finite.
TrainResult train(const TrainConfig& config);

// Same, but reuses an already-loaded dataset (must match config.dataset_path
// semantics; no file is read).
TrainResult train_on(const TrainConfig& config, const LabeledImageDataset& ds);

// Continues a checkpointed run under the given config. The architecture must
// match the checkpoint; learning rate, epoch target, intervals and output
// directory may differ. An interrupted-and-resumed run reproduces the
// uninterrupted trajectory step for step.
TrainResult resume(const std::string& checkpoint_path, const TrainConfig& config);
TrainResult resume_on(const std::string& checkpoint_path,
                      const TrainConfig& config, const LabeledImageDataset& ds);

}  // namespace wlab
