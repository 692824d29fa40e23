#include "wlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "wlab/errors.hpp"

namespace wlab {

namespace fs = std::filesystem;

namespace {

std::string compact_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct PlannedRun {
    std::string label;
    double grid_value = 0.0;
    std::size_t value_index = 0;
    std::size_t replicate = 0;
    TrainConfig config;
};

std::vector<PlannedRun> plan_runs(const SweepOptions& opt) {
    const Recipe& recipe = opt.recipe;
    std::vector<PlannedRun> runs;

    auto push = [&](const std::string& label, double value, std::size_t vi,
                    std::size_t rep, TrainConfig cfg) {
        cfg.dataset_path = opt.dataset_path;
        cfg.seed = recipe.base.seed + 1000 * vi + rep;
        cfg.out_dir = (fs::path(opt.out_dir) / "runs" /
                       (label + "_rep" + std::to_string(rep)))
                          .string();
        runs.push_back({label, value, vi, rep, std::move(cfg)});
    };

    if (recipe.analysis == SweepAnalysis::cdf) {
        for (std::size_t vi = 0; vi < recipe.kind_grid.size(); ++vi)
            for (std::size_t rep = 0; rep < recipe.replicates; ++rep) {
                TrainConfig cfg = recipe.base;
                cfg.model.encoder_kind =
                    encoder_kind_from_name(recipe.kind_grid[vi]);
                push(recipe.kind_grid[vi], 0.0, vi, rep, std::move(cfg));
            }
        return runs;
    }

    if (recipe.grid.empty()) throw ValueError("sweep: empty grid");
    for (std::size_t vi = 0; vi < recipe.grid.size(); ++vi)
        for (std::size_t rep = 0; rep < recipe.replicates; ++rep) {
            TrainConfig cfg = recipe.base;
            const double v = recipe.grid[vi];
            if (recipe.sweep_parameter == "lambda_p")
                cfg.model.lambda_p = v;
            else if (recipe.sweep_parameter == "beta")
                cfg.model.beta = v;
            else if (recipe.sweep_parameter == "lambda")
                cfg.model.lambda = v;
            else
                throw ValueError("sweep: unknown sweep parameter '" +
                                 recipe.sweep_parameter + "'");
            push(recipe.sweep_parameter + "=" + compact_number(v), v, vi, rep,
                 std::move(cfg));
        }
    return runs;
}

}  // namespace

SweepReport run_sweep(const SweepOptions& opt, std::ostream* progress) {
    const Recipe& recipe = opt.recipe;
    const std::vector<PlannedRun> plan = plan_runs(opt);
    fs::create_directories(fs::path(opt.out_dir) / "runs");

    const LabeledImageDataset ds = load_dataset(opt.dataset_path);

    std::ofstream raw(fs::path(opt.out_dir) / "raw_runs.csv");
    if (!raw) throw IoError("sweep: cannot open raw_runs.csv");
    const bool cdf = recipe.analysis == SweepAnalysis::cdf;
    raw << (cdf ? "label,replicate,test_recon,cdf_max_deviation\n"
                : "label,replicate,test_recon,eval,score_all,score_no_shape\n");

    std::mutex mu;
    SweepReport report;
    report.rows.resize(plan.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= plan.size() || failed.load()) return;
            const PlannedRun& run = plan[i];
            try {
                TrainResult res = train_on(run.config, ds);
                auto [train_view, test_view] = split_holdout(
                    ds, run.config.holdout_fraction, run.config.seed);
                (void)train_view;

                SweepRunRow row;
                row.label = run.label;
                row.grid_value = run.grid_value;
                row.replicate = run.replicate;
                row.run_dir = run.config.out_dir;
                row.test_recon = test_recon_error(res.model, test_view);

                if (cdf) {
                    RandomStream rng = RandomStream::derive(
                        run.config.seed, rng_tasks::eval, 0);
                    row.cdf_max_deviation =
                        mean_pixel_cdf_deviation(res.model, recipe.cdf_samples,
                                                 rng)
                            .max_abs_deviation;
                } else {
                    const std::vector<double> codes =
                        encode_means(res.model, DatasetView::whole(ds));
                    DisentanglementConfig dcfg;
                    for (std::size_t e = 0; e < recipe.metric_evals; ++e) {
                        RandomStream rng = RandomStream::derive(
                            run.config.seed, rng_tasks::eval, e);
                        dcfg.factor_set = factor_set_all(ds);
                        row.scores_all.push_back(
                            disentanglement_score_codes(
                                codes, res.model.spec().latent_dim, ds, dcfg, rng)
                                .accuracy);
                        dcfg.factor_set = factor_set_excluding_shape(ds);
                        row.scores_no_shape.push_back(
                            disentanglement_score_codes(
                                codes, res.model.spec().latent_dim, ds, dcfg, rng)
                                .accuracy);
                    }
                }

                std::lock_guard<std::mutex> lock(mu);
                report.rows[i] = row;
                raw.precision(17);
                if (cdf) {
                    raw << row.label << ',' << row.replicate << ','
                        << row.test_recon << ',' << row.cdf_max_deviation
                        << "\n";
                } else {
                    for (std::size_t e = 0; e < row.scores_all.size(); ++e)
                        raw << row.label << ',' << row.replicate << ','
                            << row.test_recon << ',' << e << ','
                            << row.scores_all[e] << ','
                            << row.scores_no_shape[e] << "\n";
                }
                raw.flush();
                if (progress)
                    (*progress) << "[sweep] " << row.label << " rep "
                                << row.replicate << " done (" << i + 1 << "/"
                                << plan.size() << ")\n"
                                << std::flush;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failed.store(true);
                failure = std::string("sweep run '") + run.label +
                          "' failed: " + e.what();
                return;
            }
        }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(opt.jobs, plan.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failed.load()) throw Error(failure);

    // aggregation
    if (cdf) {
        std::ofstream agg(fs::path(opt.out_dir) / "cdf_summary.csv");
        agg << "encoder_kind,n,median_max_deviation\n";
        agg.precision(17);
        for (const std::string& kind : recipe.kind_grid) {
            std::vector<double> devs;
            for (const SweepRunRow& r : report.rows)
                if (r.label == kind) devs.push_back(r.cdf_max_deviation);
            std::sort(devs.begin(), devs.end());
            const double median =
                devs.size() % 2 == 1
                    ? devs[devs.size() / 2]
                    : 0.5 * (devs[devs.size() / 2 - 1] + devs[devs.size() / 2]);
            report.cdf_medians.emplace_back(kind, median);
            agg << kind << ',' << devs.size() << ',' << median << "\n";
        }
        return report;
    }

    std::ofstream agg(fs::path(opt.out_dir) / "sweep_summary.csv");
    agg << "value,retained,mean_recon,sd_recon,mean_score_all,sd_score_all,"
           "mean_recon_ns,sd_recon_ns,mean_score_no_shape,sd_score_no_shape\n";
    agg.precision(17);
    for (std::size_t vi = 0; vi < recipe.grid.size(); ++vi) {
        std::vector<std::pair<double, double>> all_pairs, ns_pairs;
        for (const SweepRunRow& r : report.rows) {
            if (r.grid_value != recipe.grid[vi] || r.scores_all.empty())
                continue;
            for (double s : r.scores_all) all_pairs.emplace_back(r.test_recon, s);
            for (double s : r.scores_no_shape)
                ns_pairs.emplace_back(r.test_recon, s);
        }
        SweepAggregate a;
        a.grid_value = recipe.grid[vi];
        a.all_factors = replicate_protocol(all_pairs);
        a.no_shape = replicate_protocol(ns_pairs);
        report.aggregates.push_back(a);
        agg << a.grid_value << ',' << a.all_factors.retained << ','
            << a.all_factors.mean_recon << ',' << a.all_factors.sd_recon << ','
            << a.all_factors.mean_score << ',' << a.all_factors.sd_score << ','
            << a.no_shape.mean_recon << ',' << a.no_shape.sd_recon << ','
            << a.no_shape.mean_score << ',' << a.no_shape.sd_score << "\n";
    }
    return report;
}

}  // namespace wlab
