// Python surface over the core: datasets, divergences, models, training and
// the evaluation metrics, with numpy arrays at the boundary.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include <memory>

#include "wlab/datasets.hpp"
#include "wlab/divergences.hpp"
#include "wlab/errors.hpp"
#include "wlab/eval.hpp"
#include "wlab/models.hpp"
#include "wlab/training.hpp"

namespace py = pybind11;
using json = nlohmann::json;
using namespace wlab;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style |
                                                       py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i)
        shape[i] = static_cast<std::size_t>(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor::from_data(std::move(shape), std::move(data));
}

py::array_t<double> array_from_values(const std::vector<double>& v,
                                      std::vector<std::size_t> shape) {
    py::array_t<double> out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::object json_to_py(const json& j) {
    const py::object loads = py::module_::import("json").attr("loads");
    return loads(j.dump());
}

json py_to_json(const py::object& obj) {
    const py::object dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(obj).cast<std::string>());
}

KernelSpec make_kernel(const std::string& kind, double scale,
                       bool median_heuristic) {
    KernelSpec k;
    k.kind = kernel_kind_from_name(kind);
    k.scale = scale;
    k.median_heuristic = median_heuristic;
    return k;
}

struct PyModel {
    std::unique_ptr<WaeModel> model;

    const WaeModel& ref() const { return *model; }
};

DisentanglementConfig make_dconfig(const LabeledImageDataset& ds,
                                   const py::object& factors,
                                   std::size_t n_train_points,
                                   std::size_t pairs_per_point,
                                   std::size_t replicates) {
    DisentanglementConfig cfg;
    if (py::isinstance<py::int_>(factors)) {
        const int f = factors.cast<int>();
        if (f == 5)
            cfg.factor_set = factor_set_all(ds);
        else if (f == 4)
            cfg.factor_set = factor_set_excluding_shape(ds);
        else
            throw ValueError("factors: pass 4, 5 or an explicit index list");
    } else {
        cfg.factor_set = factors.cast<std::vector<std::size_t>>();
    }
    cfg.n_train_points = n_train_points;
    cfg.pairs_per_point = pairs_per_point;
    cfg.replicates = replicates;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "auto-encoder laboratory core";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ValueError>(m, "WlabValueError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::class_<LabeledImageDataset>(m, "Dataset")
        .def_property_readonly("width", &LabeledImageDataset::width)
        .def_property_readonly("height", &LabeledImageDataset::height)
        .def_property_readonly("num_images", &LabeledImageDataset::num_images)
        .def_property_readonly("intrinsic_dim",
                               [](const LabeledImageDataset& ds) {
                                   return ds.grid().intrinsic_dim();
                               })
        .def_property_readonly("factor_names",
                               [](const LabeledImageDataset& ds) {
                                   return ds.grid().names;
                               })
        .def_property_readonly("factor_values",
                               [](const LabeledImageDataset& ds) {
                                   return ds.grid().values;
                               })
        .def("pixels",
             [](const LabeledImageDataset& ds) {
                 return array_from_values(ds.pixels(),
                                          {ds.num_images(), ds.image_size()});
             })
        .def("factor_indices",
             [](const LabeledImageDataset& ds) {
                 py::array_t<std::uint32_t> out(
                     {ds.num_images(), ds.grid().num_factors()});
                 std::copy(ds.factor_indices().begin(),
                           ds.factor_indices().end(), out.mutable_data());
                 return out;
             })
        .def("save", &save_dataset, py::arg("path"))
        .def_static("load", &load_dataset, py::arg("path"));

    m.def("generate_fading_squares", &gen_fading_squares, py::arg("step") = 1e-3);
    m.def(
        "generate_dsprites",
        [](std::size_t shapes, std::size_t scales, std::size_t rotations,
           std::size_t xs, std::size_t ys) {
            return gen_dsprites({shapes, scales, rotations, xs, ys});
        },
        py::arg("shapes") = 3, py::arg("scales") = 4, py::arg("rotations") = 10,
        py::arg("xs") = 8, py::arg("ys") = 8);

    m.def(
        "sample_pairs",
        [](const LabeledImageDataset& ds, std::size_t factor, std::size_t n,
           std::uint64_t seed) {
            RandomStream rng(seed);
            py::array_t<std::size_t> out({n, std::size_t{2}});
            auto* p = out.mutable_data();
            for (std::size_t i = 0; i < n; ++i) {
                const auto [a, b] = sample_pair_with_shared_factor(ds, factor, rng);
                p[2 * i] = a;
                p[2 * i + 1] = b;
            }
            return out;
        },
        py::arg("dataset"), py::arg("factor"), py::arg("n"), py::arg("seed") = 0,
        "n image-index pairs sharing the given factor");

    m.def(
        "sample_prior",
        [](const std::string& kind, std::size_t dim, std::size_t n,
           std::uint64_t seed) {
            RandomStream rng(seed);
            const Tensor t =
                sample_prior(PriorSpec{prior_kind_from_name(kind), dim}, n, rng);
            return array_from_values(t.values(), {n, dim});
        },
        py::arg("kind"), py::arg("dim"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "kernel_eval",
        [](const std::string& kind, double scale,
           const py::array_t<double>& x, const py::array_t<double>& y) {
            const auto xb = x.cast<std::vector<double>>();
            const auto yb = y.cast<std::vector<double>>();
            return kernel_eval(make_kernel(kind, scale, false), xb, yb);
        },
        py::arg("kind"), py::arg("scale"), py::arg("x"), py::arg("y"));

    m.def(
        "mmd_sq_unbiased",
        [](const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& y,
           const std::string& kind, double scale, bool median_heuristic) {
            NoGradGuard ng;
            return mmd_sq_unbiased(tensor_from_array(x), tensor_from_array(y),
                                   make_kernel(kind, scale, median_heuristic))
                .item();
        },
        py::arg("x"), py::arg("y"), py::arg("kind") = "imq",
        py::arg("scale") = 4.0, py::arg("median_heuristic") = false);

    m.def(
        "gaussian_kl",
        [](const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& mu,
           const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& log_var) {
            NoGradGuard ng;
            return gaussian_kl_diag(tensor_from_array(mu),
                                    tensor_from_array(log_var))
                .item();
        },
        py::arg("mu"), py::arg("log_var"));

    m.def(
        "bernoulli_recon_loss",
        [](const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& x_hat) {
            NoGradGuard ng;
            return recon_loss(tensor_from_array(x), tensor_from_array(x_hat))
                .item();
        },
        py::arg("x"), py::arg("x_hat"));

    py::class_<PyModel>(m, "Model")
        .def_static("load",
                    [](const std::string& path) {
                        LoadedCheckpoint ckpt = load_checkpoint(path);
                        return PyModel{std::make_unique<WaeModel>(
                            std::move(ckpt.model))};
                    },
                    py::arg("path"))
        .def_static(
            "create",
            [](const py::object& spec, std::uint64_t seed) {
                const ModelSpec ms = py_to_json(spec).get<ModelSpec>();
                return PyModel{std::make_unique<WaeModel>(ms, seed)};
            },
            py::arg("spec"), py::arg("seed") = 0)
        .def_property_readonly(
            "spec", [](const PyModel& pm) { return json_to_py(json(pm.ref().spec())); })
        .def("encode_mean",
             [](const PyModel& pm,
                const py::array_t<double, py::array::c_style |
                                              py::array::forcecast>& x) {
                 NoGradGuard ng;
                 const Tensor mu = pm.ref().encode(tensor_from_array(x)).mean;
                 return array_from_values(mu.values(), mu.shape());
             })
        .def("encode_log_scale",
             [](const PyModel& pm,
                const py::array_t<double, py::array::c_style |
                                              py::array::forcecast>& x) {
                 NoGradGuard ng;
                 const EncoderOutput enc = pm.ref().encode(tensor_from_array(x));
                 if (!enc.log_scale)
                     throw ValueError("deterministic encoder has no log scale");
                 return array_from_values(enc.log_scale->values(),
                                          enc.log_scale->shape());
             })
        .def("decode",
             [](const PyModel& pm,
                const py::array_t<double, py::array::c_style |
                                              py::array::forcecast>& z) {
                 NoGradGuard ng;
                 const Tensor x = pm.ref().decode(tensor_from_array(z));
                 return array_from_values(x.values(), x.shape());
             });

    m.def(
        "train",
        [](const py::object& config) {
            const TrainConfig cfg = py_to_json(config).get<TrainConfig>();
            TrainResult res = train(cfg);
            json out = {{"steps", res.steps},
                        {"final_checkpoint", res.final_checkpoint}};
            if (!res.log.records.empty()) {
                const TrainRecord& r = res.log.records.back();
                out["final"] = {{"step", r.step},
                                {"total", r.total},
                                {"recon", r.recon},
                                {"div_term", r.div_term},
                                {"penalty_term", r.penalty_term},
                                {"div_raw", r.div_raw}};
            }
            return json_to_py(out);
        },
        py::arg("config"),
        "run a training configuration (same schema as the CLI config file)");

    m.def(
        "test_recon_error",
        [](const PyModel& pm, const LabeledImageDataset& ds, double holdout,
           std::uint64_t seed) {
            auto [train_view, test_view] = split_holdout(ds, holdout, seed);
            (void)train_view;
            return test_recon_error(pm.ref(),
                                    holdout > 0.0 ? test_view
                                                  : DatasetView::whole(ds));
        },
        py::arg("model"), py::arg("dataset"), py::arg("holdout") = 0.1,
        py::arg("seed") = 1);

    m.def(
        "cdf_max_deviation",
        [](const PyModel& pm, std::size_t n_samples, std::uint64_t seed) {
            RandomStream rng(seed);
            const CdfDeviation d =
                mean_pixel_cdf_deviation(pm.ref(), n_samples, rng);
            py::dict out;
            out["max_abs_deviation"] = d.max_abs_deviation;
            out["grid"] = array_from_values(d.grid, {d.grid.size()});
            out["deviation"] =
                array_from_values(d.deviation, {d.deviation.size()});
            return out;
        },
        py::arg("model"), py::arg("n_samples") = 100000, py::arg("seed") = 0);

    m.def(
        "variance_profile",
        [](const PyModel& pm, const LabeledImageDataset& ds) {
            const VarianceProfile p =
                variance_profile(pm.ref(), DatasetView::whole(ds));
            return json_to_py(json(p));
        },
        py::arg("model"), py::arg("dataset"));

    m.def(
        "disentanglement_score",
        [](const PyModel& pm, const LabeledImageDataset& ds,
           const py::object& factors, std::size_t n_train_points,
           std::size_t pairs_per_point, std::size_t replicates,
           std::uint64_t seed) {
            RandomStream rng(seed);
            const DisentanglementConfig cfg = make_dconfig(
                ds, factors, n_train_points, pairs_per_point, replicates);
            return json_to_py(json(disentanglement_score(pm.ref(), ds, cfg, rng)));
        },
        py::arg("model"), py::arg("dataset"), py::arg("factors") = 5,
        py::arg("n_train_points") = 5000, py::arg("pairs_per_point") = 64,
        py::arg("replicates") = 1, py::arg("seed") = 0);

    m.def(
        "disentanglement_score_codes",
        [](const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& codes,
           const LabeledImageDataset& ds, const py::object& factors,
           std::size_t n_train_points, std::size_t pairs_per_point,
           std::size_t replicates, std::uint64_t seed) {
            if (codes.ndim() != 2)
                throw ValueError("codes must be a (num_images, dim) array");
            RandomStream rng(seed);
            const DisentanglementConfig cfg = make_dconfig(
                ds, factors, n_train_points, pairs_per_point, replicates);
            const std::vector<double> table(codes.data(),
                                            codes.data() + codes.size());
            return json_to_py(json(disentanglement_score_codes(
                table, static_cast<std::size_t>(codes.shape(1)), ds, cfg, rng)));
        },
        py::arg("codes"), py::arg("dataset"), py::arg("factors") = 5,
        py::arg("n_train_points") = 5000, py::arg("pairs_per_point") = 64,
        py::arg("replicates") = 1, py::arg("seed") = 0,
        "score an arbitrary per-image code table");
}
