#include "wlab/datasets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "wlab/detail/binary_io.hpp"
#include "wlab/errors.hpp"

namespace wlab {

using json = nlohmann::json;

std::size_t FactorGrid::num_images() const {
    std::size_t n = 1;
    for (const auto& v : values) n *= v.size();
    return n;
}

std::size_t FactorGrid::intrinsic_dim() const {
    std::size_t d = 0;
    for (const auto& v : values)
        if (v.size() > 1) ++d;
    return d;
}

std::vector<std::size_t> FactorGrid::strides() const {
    std::vector<std::size_t> s(values.size(), 1);
    for (std::size_t f = values.size(); f-- > 1;)
        s[f - 1] = s[f] * values[f].size();
    return s;
}

LabeledImageDataset::LabeledImageDataset(std::size_t width, std::size_t height,
                                         std::vector<double> pixels,
                                         std::vector<std::uint32_t> factor_indices,
                                         FactorGrid grid)
    : width_(width),
      height_(height),
      pixels_(std::move(pixels)),
      factor_indices_(std::move(factor_indices)),
      grid_(std::move(grid)) {
    const std::size_t img = width_ * height_;
    if (img == 0 || pixels_.size() % img != 0)
        throw ValueError("LabeledImageDataset: pixel payload not a whole number "
                         "of images");
    num_images_ = pixels_.size() / img;
    if (num_images_ != grid_.num_images())
        throw HeaderError("LabeledImageDataset: image count " +
                          std::to_string(num_images_) +
                          " != factor grid size " +
                          std::to_string(grid_.num_images()));
    if (factor_indices_.size() != num_images_ * grid_.num_factors())
        throw HeaderError("LabeledImageDataset: factor index payload size "
                          "mismatch");

    // tuple codes must be unique and cover the whole grid
    const auto strides = grid_.strides();
    tuple_to_image_.assign(num_images_, num_images_);
    for (std::size_t i = 0; i < num_images_; ++i) {
        std::size_t code = 0;
        for (std::size_t f = 0; f < grid_.num_factors(); ++f) {
            const std::uint32_t idx = factor_index(i, f);
            if (idx >= grid_.count(f))
                throw HeaderError("LabeledImageDataset: factor index out of "
                                  "range");
            code += idx * strides[f];
        }
        if (tuple_to_image_[code] != num_images_)
            throw HeaderError("LabeledImageDataset: duplicate factor tuple");
        tuple_to_image_[code] = i;
    }
}

std::span<const double> LabeledImageDataset::image(std::size_t i) const {
    return {pixels_.data() + i * image_size(), image_size()};
}

std::size_t LabeledImageDataset::index_of(
    std::span<const std::uint32_t> tuple) const {
    const auto strides = grid_.strides();
    std::size_t code = 0;
    for (std::size_t f = 0; f < grid_.num_factors(); ++f)
        code += tuple[f] * strides[f];
    return tuple_to_image_[code];
}

Tensor LabeledImageDataset::gather(std::span<const std::size_t> indices) const {
    std::vector<double> out(indices.size() * image_size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto img = image(indices[r]);
        std::copy(img.begin(), img.end(), out.begin() + r * image_size());
    }
    return Tensor::from_data({indices.size(), image_size()}, std::move(out));
}

Tensor DatasetView::gather(std::span<const std::size_t> positions) const {
    std::vector<std::size_t> image_ids(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
        image_ids[i] = indices[positions[i]];
    return dataset->gather(image_ids);
}

Tensor DatasetView::all() const { return dataset->gather(indices); }

DatasetView DatasetView::whole(const LabeledImageDataset& ds) {
    std::vector<std::size_t> idx(ds.num_images());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return {&ds, std::move(idx)};
}

std::pair<DatasetView, DatasetView> split_holdout(const LabeledImageDataset& ds,
                                                  double holdout_fraction,
                                                  std::uint64_t seed) {
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
        throw ValueError("split_holdout: fraction must be in [0, 1)");
    std::vector<std::size_t> idx(ds.num_images());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    RandomStream rng = RandomStream::derive(seed, rng_tasks::split);
    rng.shuffle(idx);
    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(holdout_fraction * idx.size()));
    DatasetView test{&ds, {idx.begin(), idx.begin() + n_test}};
    DatasetView train{&ds, {idx.begin() + n_test, idx.end()}};
    return {std::move(train), std::move(test)};
}

LabeledImageDataset gen_fading_squares(double step) {
    if (!(step > 0.0) || step > 1.0)
        throw ValueError("gen_fading_squares: step must be in (0, 1]");
    // colour grid {0, step, 2*step, ..., 1}, both endpoints included
    std::size_t last = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
    std::vector<double> colours(last + 1);
    for (std::size_t i = 0; i <= last; ++i) colours[i] = static_cast<double>(i) * step;
    if (std::fabs(colours[last] - 1.0) < 1e-9) colours[last] = 1.0;

    const std::size_t w = 32, h = 32, n = colours.size();
    std::vector<double> pixels(n * w * h, 0.0);
    std::vector<std::uint32_t> fidx(n);
    for (std::size_t i = 0; i < n; ++i) {
        // 6x6 block over rows/columns 13..18
        for (std::size_t r = 13; r <= 18; ++r)
            for (std::size_t c = 13; c <= 18; ++c)
                pixels[i * w * h + r * w + c] = colours[i];
        fidx[i] = static_cast<std::uint32_t>(i);
    }

    FactorGrid grid;
    grid.names = {"colour"};
    grid.values = {std::move(colours)};
    return LabeledImageDataset(w, h, std::move(pixels), std::move(fidx),
                               std::move(grid));
}

namespace {

constexpr std::size_t kSpriteSize = 64;
constexpr double kSpriteMargin = 0.16;   // keeps every shape inside the frame
constexpr double kSpriteHalfExtent = 0.15;  // bounding-box half-side at scale 1

const char* kShapeNames[3] = {"square", "ellipse", "heart"};

int shape_id(const std::string& name) {
    for (int s = 0; s < 3; ++s)
        if (name == kShapeNames[s]) return s;
    throw ValueError("unknown shape: " + name);
}

bool inside_shape(int shape, double qx, double qy) {
    switch (shape) {
        case 0:  // square filling the unit bounding box
            return std::fabs(qx) <= 1.0 && std::fabs(qy) <= 1.0;
        case 1:  // ellipse, semi-axes (1, 0.6)
            return qx * qx + (qy / 0.6) * (qy / 0.6) <= 1.0;
        default: {
            // implicit heart (X^2 + Y^2 - 1)^3 - X^2 Y^3 <= 0, whose natural
            // extent is X in [-1.14, 1.14], Y in [-1, 1.3]; map the unit
            // bounding box onto that extent
            const double X = 1.14 * qx;
            const double Y = 1.15 * qy + 0.15;
            const double a = X * X + Y * Y - 1.0;
            return a * a * a - X * X * Y * Y * Y <= 0.0;
        }
    }
}

std::vector<double> linspace(double lo, double hi, std::size_t n,
                             bool inclusive) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double d = (hi - lo) / static_cast<double>(inclusive ? n - 1 : n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + d * static_cast<double>(i);
    return v;
}

}  // namespace

FactorGrid sprite_factor_grid(const SpriteGridConfig& cfg) {
    if (cfg.shapes < 1 || cfg.shapes > 3)
        throw ValueError("sprite grid: shapes must be 1..3");
    if (cfg.scales < 1 || cfg.rotations < 1 || cfg.xs < 1 || cfg.ys < 1)
        throw ValueError("sprite grid: factor counts must be positive");
    FactorGrid grid;
    grid.names = {"shape", "scale", "rotation", "x", "y"};
    std::vector<double> shapes(cfg.shapes);
    for (std::size_t s = 0; s < cfg.shapes; ++s) shapes[s] = static_cast<double>(s);
    grid.values = {std::move(shapes),
                   linspace(0.5, 1.0, cfg.scales, /*inclusive=*/true),
                   linspace(0.0, 2.0 * std::numbers::pi, cfg.rotations,
                            /*inclusive=*/false),
                   linspace(0.0, 1.0, cfg.xs, /*inclusive=*/true),
                   linspace(0.0, 1.0, cfg.ys, /*inclusive=*/true)};
    return grid;
}

std::vector<double> rasterize_sprite(const std::string& shape, double scale,
                                     double rotation, double x_pos,
                                     double y_pos) {
    const int sid = shape_id(shape);
    const double cx = kSpriteMargin + x_pos * (1.0 - 2.0 * kSpriteMargin);
    const double cy = kSpriteMargin + y_pos * (1.0 - 2.0 * kSpriteMargin);
    const double half = kSpriteHalfExtent * scale;
    const double cosr = std::cos(rotation), sinr = std::sin(rotation);

    std::vector<double> img(kSpriteSize * kSpriteSize, 0.0);
    for (std::size_t r = 0; r < kSpriteSize; ++r) {
        // y axis points up in shape coordinates
        const double py = 1.0 - (static_cast<double>(r) + 0.5) / kSpriteSize;
        for (std::size_t c = 0; c < kSpriteSize; ++c) {
            const double px = (static_cast<double>(c) + 0.5) / kSpriteSize;
            const double dx = px - cx, dy = py - cy;
            // rotate by -rotation, then normalize by the half extent
            const double qx = (cosr * dx + sinr * dy) / half;
            const double qy = (-sinr * dx + cosr * dy) / half;
            if (inside_shape(sid, qx, qy)) img[r * kSpriteSize + c] = 1.0;
        }
    }
    return img;
}

LabeledImageDataset gen_dsprites(const SpriteGridConfig& cfg) {
    FactorGrid grid = sprite_factor_grid(cfg);
    const std::size_t n = grid.num_images();
    const std::size_t img_px = kSpriteSize * kSpriteSize;
    std::vector<double> pixels(n * img_px);
    std::vector<std::uint32_t> fidx(n * grid.num_factors());

    std::array<std::uint32_t, 5> t{0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> img = rasterize_sprite(
            kShapeNames[t[0]], grid.values[1][t[1]], grid.values[2][t[2]],
            grid.values[3][t[3]], grid.values[4][t[4]]);
        std::copy(img.begin(), img.end(), pixels.begin() + i * img_px);
        for (std::size_t f = 0; f < 5; ++f) fidx[i * 5 + f] = t[f];
        // advance the tuple, last factor fastest
        for (std::size_t f = 5; f-- > 0;) {
            if (++t[f] < grid.count(f)) break;
            t[f] = 0;
        }
    }
    return LabeledImageDataset(kSpriteSize, kSpriteSize, std::move(pixels),
                               std::move(fidx), std::move(grid));
}

std::pair<std::size_t, std::size_t> sample_pair_with_shared_factor(
    const LabeledImageDataset& ds, std::size_t k, RandomStream& rng) {
    const FactorGrid& grid = ds.grid();
    const std::size_t nf = grid.num_factors();
    if (k >= nf) throw ValueError("sample_pair: factor index out of range");
    for (std::size_t f = 0; f < nf; ++f)
        if (f != k && grid.count(f) < 2)
            throw ValueError("sample_pair: factor '" + grid.names[f] +
                             "' has a single value; grid is degenerate");

    std::vector<std::uint32_t> tuple(nf);
    const std::uint32_t shared =
        static_cast<std::uint32_t>(rng.integer(grid.count(k)));
    auto draw = [&]() {
        for (std::size_t f = 0; f < nf; ++f)
            tuple[f] = f == k ? shared
                              : static_cast<std::uint32_t>(
                                    rng.integer(grid.count(f)));
        return ds.index_of(tuple);
    };
    const std::size_t first = draw();
    const std::size_t second = draw();
    return {first, second};
}

void save_dataset(const LabeledImageDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_dataset: cannot open " + path);

    json factors = json::array();
    for (std::size_t f = 0; f < ds.grid().num_factors(); ++f)
        factors.push_back(
            {{"name", ds.grid().names[f]}, {"values", ds.grid().values[f]}});
    const json header = {{"width", ds.width()},
                         {"height", ds.height()},
                         {"num_images", ds.num_images()},
                         {"factors", factors}};
    const std::string hs = header.dump();

    detail::write_magic(os, "WLAB1");
    detail::write_u64_le(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    detail::write_f64_array(os, ds.pixels());
    detail::write_u32_array(os, ds.factor_indices());
    if (!os) throw IoError("save_dataset: write failed on " + path);
}

LabeledImageDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_dataset: cannot open " + path);
    detail::expect_magic(is, "WLAB1", "load_dataset");
    const std::string hs = detail::read_header_json(is);

    json header;
    try {
        header = json::parse(hs);
    } catch (const json::parse_error& e) {
        throw HeaderError(std::string("load_dataset: header is not JSON: ") +
                          e.what());
    }

    std::size_t w, h, n;
    FactorGrid grid;
    try {
        w = header.at("width").get<std::size_t>();
        h = header.at("height").get<std::size_t>();
        n = header.at("num_images").get<std::size_t>();
        for (const json& f : header.at("factors")) {
            grid.names.push_back(f.at("name").get<std::string>());
            grid.values.push_back(f.at("values").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw HeaderError(std::string("load_dataset: bad header fields: ") +
                          e.what());
    }
    if (n != grid.num_images())
        throw HeaderError("load_dataset: header image count " +
                          std::to_string(n) + " != factor grid size " +
                          std::to_string(grid.num_images()));

    std::vector<double> pixels;
    detail::read_f64_array(is, pixels, n * w * h, "load_dataset pixels");
    std::vector<std::uint32_t> fidx;
    detail::read_u32_array(is, fidx, n * grid.num_factors(),
                           "load_dataset factor indices");
    return LabeledImageDataset(w, h, std::move(pixels), std::move(fidx),
                               std::move(grid));
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n_items,
                                                       std::size_t batch_size,
                                                       RandomStream& rng) {
    if (batch_size < 2) throw ValueError("minibatch: batch_size must be >= 2");
    if (batch_size > n_items)
        throw ValueError("minibatch: batch_size " + std::to_string(batch_size) +
                         " exceeds dataset size " + std::to_string(n_items));
    std::vector<std::size_t> order(n_items);
    for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t pos = 0; pos + batch_size <= n_items; pos += batch_size)
        batches.emplace_back(order.begin() + pos, order.begin() + pos + batch_size);
    return batches;
}

MinibatchIter::MinibatchIter(DatasetView view, std::size_t batch_size,
                             std::uint64_t seed)
    : view_(std::move(view)), batch_size_(batch_size), rng_(seed) {
    refill();  // validates batch size eagerly
}

void MinibatchIter::refill() {
    pending_ = shuffled_batches(view_.size(), batch_size_, rng_);
    cursor_ = 0;
}

Tensor MinibatchIter::next() {
    if (cursor_ >= pending_.size()) refill();
    last_ = pending_[cursor_++];
    return view_.gather(last_);
}

}  // namespace wlab
