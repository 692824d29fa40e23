#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlab/rng.hpp"
#include "wlab/tensor.hpp"

namespace wlab {

// Ground-truth generative factors of a synthetic dataset: names and the
// value grid per factor. The dataset holds one image per grid cell.
struct FactorGrid {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;

    std::size_t num_factors() const { return names.size(); }
    std::size_t count(std::size_t f) const { return values[f].size(); }
    std::size_t num_images() const;
    // number of factors that actually vary
    std::size_t intrinsic_dim() const;
    // strides for mapping a factor-index tuple to the image index
    std::vector<std::size_t> strides() const;
};

class LabeledImageDataset {
public:
    LabeledImageDataset(std::size_t width, std::size_t height,
                        std::vector<double> pixels,
                        std::vector<std::uint32_t> factor_indices,
                        FactorGrid grid);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t image_size() const { return width_ * height_; }
    std::size_t num_images() const { return num_images_; }
    const FactorGrid& grid() const { return grid_; }
    const std::vector<double>& pixels() const { return pixels_; }
    const std::vector<std::uint32_t>& factor_indices() const {
        return factor_indices_;
    }

    std::span<const double> image(std::size_t i) const;
    std::uint32_t factor_index(std::size_t image, std::size_t factor) const {
        return factor_indices_[image * grid_.num_factors() + factor];
    }

    // image holding the given factor-index tuple
    std::size_t index_of(std::span<const std::uint32_t> tuple) const;

    // rows of pixel data for the given images, as a (batch, w*h) constant
    Tensor gather(std::span<const std::size_t> indices) const;

private:
    std::size_t width_, height_, num_images_;
    std::vector<double> pixels_;
    std::vector<std::uint32_t> factor_indices_;
    FactorGrid grid_;
    std::vector<std::size_t> tuple_to_image_;
};

// Subset of a dataset identified by image indices (train/test splits).
struct DatasetView {
    const LabeledImageDataset* dataset = nullptr;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
    Tensor gather(std::span<const std::size_t> positions) const;
    Tensor all() const;

    static DatasetView whole(const LabeledImageDataset& ds);
};

// Deterministic (seeded) split into train and held-out index sets.
std::pair<DatasetView, DatasetView> split_holdout(const LabeledImageDataset& ds,
                                                  double holdout_fraction,
                                                  std::uint64_t seed);

// 32x32 images of a centred 6x6 square whose brightness runs over
// {0, step, 2*step, ..., 1}; single factor "colour".
LabeledImageDataset gen_fading_squares(double step);

// Configuration for the procedural sprites grid: 64x64 binary images over the
// Cartesian product of (shape, scale, rotation, x-position, y-position).
struct SpriteGridConfig {
    std::size_t shapes = 3;  // square, ellipse, heart (first n)
    std::size_t scales = 6;
    std::size_t rotations = 40;
    std::size_t xs = 32;
    std::size_t ys = 32;
};

FactorGrid sprite_factor_grid(const SpriteGridConfig& cfg);
LabeledImageDataset gen_dsprites(const SpriteGridConfig& cfg);

// Rasterizes one 64x64 sprite; shape is "square", "ellipse" or "heart".
std::vector<double> rasterize_sprite(const std::string& shape, double scale,
                                     double rotation, double x_pos, double y_pos);

// Two image indices sharing the value of factor k (drawn uniformly); all
// other factors drawn independently and uniformly.
std::pair<std::size_t, std::size_t> sample_pair_with_shared_factor(
    const LabeledImageDataset& ds, std::size_t k, RandomStream& rng);

void save_dataset(const LabeledImageDataset& ds, const std::string& path);
LabeledImageDataset load_dataset(const std::string& path);

// Uniformly shuffled epoch partitions; the trailing short batch is dropped.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n_items,
                                                       std::size_t batch_size,
                                                       RandomStream& rng);

// Endless stream of minibatch pixel tensors over shuffled epochs.
class MinibatchIter {
public:
    MinibatchIter(DatasetView view, std::size_t batch_size, std::uint64_t seed);

    Tensor next();
    const std::vector<std::size_t>& last_batch_indices() const { return last_; }

private:
    void refill();

    DatasetView view_;
    std::size_t batch_size_;
    RandomStream rng_;
    std::vector<std::vector<std::size_t>> pending_;
    std::size_t cursor_ = 0;
    std::vector<std::size_t> last_;
};

}  // namespace wlab
