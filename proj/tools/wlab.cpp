// Command-line front end: dataset generation, training runs, hyper-parameter
// sweeps, and model evaluation.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "wlab/errors.hpp"
#include "wlab/eval.hpp"
#include "wlab/presets.hpp"
#include "wlab/sweep.hpp"
#include "wlab/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int error_category(const std::exception& e) {
    if (dynamic_cast<const wlab::SpecMismatchError*>(&e)) return 5;
    if (dynamic_cast<const wlab::NumericError*>(&e)) return 6;
    if (dynamic_cast<const wlab::HeaderError*>(&e)) return 4;
    if (dynamic_cast<const wlab::TruncatedError*>(&e)) return 4;
    if (dynamic_cast<const wlab::IoError*>(&e)) return 3;
    if (dynamic_cast<const wlab::ShapeError*>(&e)) return 2;
    if (dynamic_cast<const wlab::ValueError*>(&e)) return 2;
    return 1;
}

std::vector<std::size_t> parse_counts(const std::string& csv) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (tok.empty()) throw wlab::ValueError("bad counts list: " + csv);
        out.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (tok.empty()) throw wlab::ValueError("bad grid list: " + csv);
        out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// "/model/lambda=5" -> JSON pointer assignment on the config document
void apply_overrides(json& doc, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw wlab::ValueError("--set expects /path=value, got: " + kv);
        const std::string path = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = value;  // plain string
        }
        doc[json::json_pointer(path)] = parsed;
    }
}

struct TrainCli {
    std::string preset, config_file, dataset, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs, batch_size;
    std::optional<double> lr;
    std::vector<std::string> sets;
};

wlab::TrainConfig resolve_train_config(const TrainCli& cli) {
    wlab::TrainConfig cfg;
    if (!cli.config_file.empty()) {
        std::ifstream is(cli.config_file);
        if (!is) throw wlab::IoError("cannot open config " + cli.config_file);
        json doc = json::parse(is);
        apply_overrides(doc, cli.sets);
        cfg = doc.get<wlab::TrainConfig>();
    } else {
        wlab::Recipe recipe = wlab::make_recipe(cli.preset);
        if (recipe.analysis != wlab::SweepAnalysis::single_run)
            throw wlab::ValueError("preset '" + cli.preset +
                                   "' is a sweep recipe; run it with: wlab "
                                   "sweep --preset " +
                                   cli.preset);
        cfg = recipe.base;
        json doc = json(cfg);
        apply_overrides(doc, cli.sets);
        cfg = doc.get<wlab::TrainConfig>();
    }
    if (!cli.dataset.empty()) cfg.dataset_path = cli.dataset;
    if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.epochs) cfg.epochs = *cli.epochs;
    if (cli.batch_size) cfg.batch_size = *cli.batch_size;
    if (cli.lr) cfg.learning_rate = *cli.lr;
    if (cfg.dataset_path.empty())
        throw wlab::ValueError("no dataset given (--dataset or config file)");
    if (cfg.out_dir.empty())
        throw wlab::ValueError("no output directory given (--out)");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wlab: a compact laboratory for auto-encoders with latent "
                 "divergence penalties"};
    app.require_subcommand(1);

    // --- generate ---
    auto* gen = app.add_subcommand("generate", "generate a dataset file");
    std::string gen_kind, gen_out, gen_counts = "3,6,40,32,32";
    double gen_step = 1e-3;
    gen->add_option("kind", gen_kind, "fading-squares or dsprites")->required();
    gen->add_option("--out", gen_out, "output dataset path")->required();
    gen->add_option("--step", gen_step, "colour step (fading-squares)");
    gen->add_option("--counts", gen_counts,
                    "factor counts shape,scale,rotation,x,y (dsprites)");

    // --- train ---
    auto* tr = app.add_subcommand("train", "run one training configuration");
    TrainCli tcli;
    tr->add_option("--preset", tcli.preset, "named experiment preset");
    tr->add_option("--config", tcli.config_file, "TrainConfig JSON file");
    tr->add_option("--dataset", tcli.dataset, "dataset file");
    tr->add_option("--out", tcli.out_dir, "run directory");
    tr->add_option("--seed", tcli.seed, "seed override");
    tr->add_option("--epochs", tcli.epochs, "epoch override");
    tr->add_option("--batch-size", tcli.batch_size, "batch size override");
    tr->add_option("--lr", tcli.lr, "learning rate override");
    tr->add_option("--set", tcli.sets,
                   "config override as /json/pointer=value (repeatable)");
    std::string tr_resume;
    tr->add_option("--resume", tr_resume, "checkpoint to continue from");

    // --- sweep ---
    auto* sw = app.add_subcommand("sweep", "replicated hyper-parameter sweep");
    std::string sw_preset, sw_dataset, sw_out, sw_grid;
    std::size_t sw_jobs = 1;
    std::optional<std::size_t> sw_replicates, sw_evals, sw_epochs;
    std::optional<std::uint64_t> sw_seed;
    sw->add_option("--preset", sw_preset, "sweep recipe")->required();
    sw->add_option("--dataset", sw_dataset, "dataset file")->required();
    sw->add_option("--out", sw_out, "sweep output directory")->required();
    sw->add_option("--grid", sw_grid, "override grid values, comma separated");
    sw->add_option("--replicates", sw_replicates, "models per grid value");
    sw->add_option("--evals", sw_evals, "metric evaluations per model");
    sw->add_option("--epochs", sw_epochs, "epoch override");
    sw->add_option("--seed", sw_seed, "base seed override");
    sw->add_option("--jobs", sw_jobs, "concurrent runs");

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_ckpt, ev_dataset, ev_out;
    bool ev_recon = false, ev_cdf = false, ev_variance = false;
    std::size_t ev_samples = 100000, ev_scatter = 0, ev_grid = 0;
    int ev_disentangle = 0;
    std::optional<double> ev_holdout;
    std::optional<std::uint64_t> ev_seed;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--dataset", ev_dataset,
                   "dataset file (defaults to the run config's)");
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_flag("--recon", ev_recon, "held-out reconstruction error");
    ev->add_flag("--cdf", ev_cdf, "mean-pixel CDF deviation of samples");
    ev->add_option("--samples", ev_samples, "sample count for --cdf");
    ev->add_flag("--variance", ev_variance, "encoder variance profile");
    ev->add_option("--disentangle", ev_disentangle,
                   "disentanglement score on 4 or 5 factors");
    ev->add_option("--scatter", ev_scatter, "latent scatter CSVs with n points");
    ev->add_option("--grid", ev_grid, "decoder grid PNG with given resolution");
    ev->add_option("--holdout", ev_holdout, "holdout fraction override");
    ev->add_option("--seed", ev_seed, "evaluation seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            wlab::LabeledImageDataset ds = [&] {
                if (gen_kind == "fading-squares")
                    return wlab::gen_fading_squares(gen_step);
                if (gen_kind == "dsprites") {
                    const auto c = parse_counts(gen_counts);
                    if (c.size() != 5)
                        throw wlab::ValueError(
                            "--counts wants 5 values: shape,scale,rotation,x,y");
                    return wlab::gen_dsprites({c[0], c[1], c[2], c[3], c[4]});
                }
                throw wlab::ValueError("unknown dataset kind '" + gen_kind +
                                       "' (fading-squares, dsprites)");
            }();
            wlab::save_dataset(ds, gen_out);
            std::cout << "wrote " << ds.num_images() << " images ("
                      << ds.width() << "x" << ds.height() << ", intrinsic dim "
                      << ds.grid().intrinsic_dim() << ") to " << gen_out
                      << "\n";
            return 0;
        }

        if (*tr) {
            const wlab::TrainConfig cfg = resolve_train_config(tcli);
            const wlab::TrainResult res =
                tr_resume.empty() ? wlab::train(cfg)
                                  : wlab::resume(tr_resume, cfg);
            std::cout << "trained " << res.steps << " steps; final objective ";
            if (!res.log.records.empty())
                std::cout << res.log.records.back().total;
            else
                std::cout << "n/a";
            std::cout << "; checkpoint " << res.final_checkpoint << "\n";
            return 0;
        }

        if (*sw) {
            wlab::SweepOptions opt;
            opt.recipe = wlab::make_recipe(sw_preset);
            if (opt.recipe.analysis == wlab::SweepAnalysis::single_run)
                throw wlab::ValueError("preset '" + sw_preset +
                                       "' is a single run; use: wlab train");
            if (!sw_grid.empty()) opt.recipe.grid = parse_grid(sw_grid);
            if (sw_replicates) opt.recipe.replicates = *sw_replicates;
            if (sw_evals) opt.recipe.metric_evals = *sw_evals;
            if (sw_epochs) opt.recipe.base.epochs = *sw_epochs;
            if (sw_seed) opt.recipe.base.seed = *sw_seed;
            opt.dataset_path = sw_dataset;
            opt.out_dir = sw_out;
            opt.jobs = sw_jobs;
            const wlab::SweepReport report = wlab::run_sweep(opt, &std::cerr);
            std::cout << "sweep finished: " << report.rows.size()
                      << " runs; results under " << sw_out << "\n";
            return 0;
        }

        if (*ev) {
            wlab::LoadedCheckpoint ckpt = wlab::load_checkpoint(ev_ckpt);
            fs::create_directories(ev_out);

            // run settings from the sibling config snapshot, when present
            double holdout = 0.1;
            std::uint64_t run_seed = 1;
            std::string dataset_path = ev_dataset;
            const fs::path cfg_path = fs::path(ev_ckpt).parent_path() / "config.json";
            if (fs::exists(cfg_path)) {
                std::ifstream is(cfg_path);
                const json doc = json::parse(is);
                holdout = doc.value("holdout_fraction", 0.1);
                run_seed = doc.value("seed", std::uint64_t{1});
                if (dataset_path.empty())
                    dataset_path = doc.value("dataset", std::string{});
            }
            if (ev_holdout) holdout = *ev_holdout;
            const std::uint64_t eval_seed = ev_seed ? *ev_seed : run_seed;

            std::optional<wlab::LabeledImageDataset> ds;
            auto need_dataset = [&]() -> const wlab::LabeledImageDataset& {
                if (!ds) {
                    if (dataset_path.empty())
                        throw wlab::ValueError(
                            "this metric needs --dataset (no config snapshot "
                            "found)");
                    ds.emplace(wlab::load_dataset(dataset_path));
                }
                return *ds;
            };

            json summary;
            int failures = 0;
            auto attempt = [&](const char* name, auto&& fn) {
                try {
                    fn();
                    std::cout << "[eval] " << name << ": ok\n";
                } catch (const std::exception& e) {
                    ++failures;
                    summary["errors"][name] = e.what();
                    std::cout << "[eval] " << name << ": error: " << e.what()
                              << "\n";
                }
            };

            if (ev_recon)
                attempt("recon", [&] {
                    auto [train_view, test_view] =
                        wlab::split_holdout(need_dataset(), holdout, run_seed);
                    (void)train_view;
                    summary["test_recon_error"] =
                        wlab::test_recon_error(ckpt.model, test_view);
                });
            if (ev_cdf)
                attempt("cdf", [&] {
                    wlab::RandomStream rng = wlab::RandomStream::derive(
                        eval_seed, wlab::rng_tasks::eval, 10);
                    const wlab::CdfDeviation dev = wlab::mean_pixel_cdf_deviation(
                        ckpt.model, ev_samples, rng);
                    wlab::write_cdf_csv(dev, (fs::path(ev_out) / "cdf.csv").string());
                    summary["cdf_max_deviation"] = dev.max_abs_deviation;
                    summary["cdf_samples"] = ev_samples;
                });
            if (ev_variance)
                attempt("variance", [&] {
                    const wlab::VarianceProfile prof = wlab::variance_profile(
                        ckpt.model, wlab::DatasetView::whole(need_dataset()));
                    summary["variance_profile"] = prof;
                });
            if (ev_disentangle != 0)
                attempt("disentangle", [&] {
                    if (ev_disentangle != 4 && ev_disentangle != 5)
                        throw wlab::ValueError("--disentangle wants 4 or 5");
                    const auto& data = need_dataset();
                    wlab::DisentanglementConfig dcfg;
                    dcfg.factor_set = ev_disentangle == 5
                                          ? wlab::factor_set_all(data)
                                          : wlab::factor_set_excluding_shape(data);
                    dcfg.replicates = 3;
                    wlab::RandomStream rng = wlab::RandomStream::derive(
                        eval_seed, wlab::rng_tasks::eval, 20);
                    const wlab::DisentanglementResult r =
                        wlab::disentanglement_score(ckpt.model, data, dcfg, rng);
                    summary["disentanglement"] = r;
                });
            if (ev_scatter > 0)
                attempt("scatter", [&] {
                    wlab::RandomStream rng = wlab::RandomStream::derive(
                        eval_seed, wlab::rng_tasks::eval, 30);
                    wlab::latent_scatter_export(
                        ckpt.model, wlab::DatasetView::whole(need_dataset()),
                        ev_scatter, rng, (fs::path(ev_out) / "scatter_").string());
                    summary["scatter_points"] = ev_scatter;
                });
            if (ev_grid > 0)
                attempt("grid", [&] {
                    const auto& data = need_dataset();
                    wlab::decoder_grid_export(
                        ckpt.model, data.width(), data.height(), ev_grid,
                        (fs::path(ev_out) / "decoder_grid.png").string());
                    summary["grid_resolution"] = ev_grid;
                });

            std::ofstream os(fs::path(ev_out) / "eval.json");
            os << summary.dump(2) << "\n";
            std::cout << summary.dump(2) << "\n";
            return failures == 0 ? 0 : 7;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return error_category(e);
    }
    return 0;
}
