// Command-line driver: dataset generation, training, evaluation, the two
// extrapolation sweeps, the conditional-expectation study, and a self test.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "bpde/dataset.hpp"
#include "bpde/experiments.hpp"
#include "bpde/fno.hpp"
#include "bpde/io.hpp"
#include "bpde/metrics.hpp"
#include "json.hpp"

namespace {

using namespace bpde;

struct CommonOpts {
    std::string config_path;
    std::string dist;
    int64_t seed = -1;
    int iters = -1;
};

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? default_run_config()
                                             : load_run_config(opts.config_path);
    if (!opts.dist.empty()) cfg.boundary = boundary_preset(opts.dist);
    if (opts.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(opts.seed);
        cfg.train.seed = cfg.seed;
    }
    if (opts.iters > 0) cfg.train_iterations = opts.iters;
    cfg.validate();
    return cfg;
}

ExperimentPlan resolve_plan(const CommonOpts& opts) {
    if (!opts.config_path.empty()) {
        ExperimentPlan plan = plan_from_json(read_text_file(opts.config_path));
        CommonOpts rest = opts;
        rest.config_path.clear();
        RunConfig base = plan.config;
        if (!rest.dist.empty()) base.boundary = boundary_preset(rest.dist);
        if (rest.seed >= 0) {
            base.seed = static_cast<uint64_t>(rest.seed);
            base.train.seed = base.seed;
        }
        if (rest.iters > 0) base.train_iterations = rest.iters;
        base.validate();
        plan.config = base;
        return plan;
    }
    CommonOpts rest = opts;
    return plan_from_config(resolve_config(rest));
}

void write_checkpoint_bundle(const std::string& path, const TrainedModel& trained,
                             const RunConfig& cfg) {
    write_checkpoint(path, trained.model);
    write_train_log_csv(path + ".log.csv", trained.log);
    nlohmann::json sidecar;
    sidecar["config"] = nlohmann::json::parse(run_config_to_json(cfg));
    sidecar["encoding"] = encoding_name(trained.encoding);
    sidecar["dist_label"] = trained.dist_label;
    sidecar["config_hash"] = run_config_hash(cfg);
    sidecar["commit"] = build_commit();
    write_text_file(path + ".json", sidecar.dump(2) + "\n");
}

int cmd_datagen(const CommonOpts& opts, const std::string& out, int count,
                const std::string& from_sidecar, int64_t stream_base) {
    DatasetProvenance prov;
    if (!from_sidecar.empty()) {
        prov = read_dataset_sidecar(from_sidecar);
    } else {
        const RunConfig cfg = resolve_config(opts);
        prov.grid_n = cfg.grid_n;
        prov.master_seed = cfg.seed;
        prov.stream_base = stream_base >= 0 ? static_cast<uint64_t>(stream_base) : 0;
        prov.count = static_cast<uint32_t>(count);
        prov.iterations = static_cast<uint32_t>(opts.iters > 0 ? opts.iters
                                                               : cfg.train_iterations);
        prov.boundary = cfg.boundary;
        prov.forcing = cfg.forcing;
    }
    const Dataset ds = generate_dataset(prov);
    write_dataset(out, ds, prov);
    std::printf("wrote %s (%d samples, n=%d, %u iterations)\n", out.c_str(), ds.count(),
                ds.grid.n, ds.iterations);
    return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& encoding, const std::string& out,
              const std::string& data_path) {
    const ExperimentPlan plan = resolve_plan(opts);
    const RunConfig& cfg = plan.config;
    const InputEncoding enc = encoding_from_name(encoding);

    TrainedModel trained;
    if (data_path.empty()) {
        trained = train_one(plan, cfg.boundary, enc);
    } else {
        const Dataset train_ds = read_dataset(data_path);
        DatasetProvenance hprov;
        hprov.grid_n = train_ds.grid.n;
        hprov.master_seed = cfg.seed;
        hprov.stream_base = streams::kHoldoutBase;
        hprov.count = static_cast<uint32_t>(cfg.holdout_samples);
        hprov.iterations = static_cast<uint32_t>(cfg.eval_iterations);
        hprov.boundary = cfg.boundary;
        hprov.forcing = cfg.forcing;
        const Dataset holdout = generate_dataset(hprov);
        trained.encoding = enc;
        trained.dist_label = cfg.boundary.label;
        trained.model = fno_train<float>(train_ds, holdout, enc, cfg.fno, cfg.train,
                                         &trained.log);
    }
    write_checkpoint_bundle(out, trained, cfg);
    const double final_holdout =
        trained.log.empty() ? std::nan("") : trained.log.back().holdout_rel_l2;
    std::printf("wrote %s (encoding=%s dist=%s final_holdout_rel_l2=%s)\n", out.c_str(),
                encoding_name(trained.encoding).c_str(), trained.dist_label.c_str(),
                format_double(final_holdout).c_str());
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::vector<std::string>& checkpoints,
             const std::vector<std::string>& dists, const std::string& out) {
    const ExperimentPlan plan = resolve_plan(opts);
    ExperimentReport report;
    report.protocol = "eval";
    report.provenance_json = plan_provenance_json(plan, report.protocol);
    for (const std::string& ckpt : checkpoints) {
        const FnoModel<float> model = read_checkpoint(ckpt);
        const InputEncoding enc = encoding_for_channels(model.config.in_channels);
        for (const std::string& dname : dists) {
            const BoundaryDistribution dist = boundary_preset(dname);
            const int condition =
                dname == "b1" ? conditions::kEvalDistB : conditions::kEvalDistA;
            const Dataset ds = make_eval_dataset(plan, dist, condition);
            const ErrorStat stat =
                score_model(model, enc, ds, plan.config.eval.batch_size);
            std::string label = ckpt;
            const size_t slash = label.find_last_of('/');
            if (slash != std::string::npos) label = label.substr(slash + 1);
            report.rows.push_back({label + "_on_" + dname, stat});
            std::printf("%s on %s: %.4f +- %.4f (%d batches)\n", ckpt.c_str(), dname.c_str(),
                        stat.mean, stat.std, stat.count);
        }
    }
    if (!out.empty()) write_report(out, report);
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& checkpoint, const std::string& out,
              bool shift) {
    const ExperimentPlan plan = resolve_plan(opts);
    const FnoModel<float> model = read_checkpoint(checkpoint);
    if (model.config.in_channels != 6)
        throw std::runtime_error("sweeps need a boundary-aware checkpoint");
    const ExperimentReport report =
        shift ? run_shift_sweep(plan, model) : run_freq_sweep(plan, model);
    for (const ReportRow& row : report.rows)
        std::printf("%s: %.4f +- %.4f\n", row.label.c_str(), row.stat.mean, row.stat.std);
    write_report(out, report);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_condexp(const CommonOpts& opts, const std::string& checkpoint, const std::string& out,
                const std::string& fields_out) {
    const ExperimentPlan plan = resolve_plan(opts);
    const FnoModel<float> model = read_checkpoint(checkpoint);
    const CondexpResult result = run_condexp(plan, model);
    for (const ReportRow& row : result.report.rows)
        std::printf("%s: %.4f +- %.4f\n", row.label.c_str(), row.stat.mean, row.stat.std);
    write_report(out, result.report);
    if (!fields_out.empty()) {
        write_fields(fields_out, {{"model_output", result.model_output},
                                  {"mc_mean", result.mc_mean},
                                  {"abs_diff", result.abs_diff}});
        std::printf("wrote %s\n", fields_out.c_str());
    }
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

bool check(bool ok, const char* name, const std::string& detail) {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ",
                detail.c_str());
    return ok;
}

int cmd_selftest() {
    bool all = true;
    {
        // manufactured solution sin(pi x) sin(pi y)
        const Grid grid(64);
        const auto [xs, ys] = coordinate_channels(grid);
        Field2D f(grid), ustar(grid);
        BoundarySpec bc;
        for (auto* e : {&bc.g_left, &bc.g_bottom, &bc.h_right, &bc.h_top})
            *e = EdgeFunction(grid);
        const double pi = 3.14159265358979323846;
        for (int i = 0; i < grid.n; ++i) {
            for (int j = 0; j < grid.n; ++j) {
                const double sx = std::sin(pi * xs.at(i, j)), sy = std::sin(pi * ys.at(i, j));
                ustar.at(i, j) = sx * sy;
                f.at(i, j) = 2.0 * pi * pi * sx * sy;
            }
        }
        for (int k = 0; k < grid.n; ++k) {
            bc.h_right.values[k] = -pi * std::sin(pi * k * grid.spacing());
            bc.h_top.values[k] = -pi * std::sin(pi * k * grid.spacing());
        }
        const Field2D u = jacobi_solve(f, bc, SolverConfig{20000});
        const double err = relative_l2(u, ustar);
        all &= check(err < 5e-3, "manufactured_solution", "rel_l2=" + format_double(err));
    }
    {
        // superposition over random pairs
        const Grid grid(64);
        const SolverConfig cfg{220};
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            SampleRng r1(11, 1000 + trial), r2(13, 2000 + trial);
            const BoundarySpec b1 = sample_boundary(b0_preset(), r1, grid);
            const Field2D f1 = sample_forcing(forcing_preset(), r1, grid);
            const BoundarySpec b2 = sample_boundary(b1_preset(), r2, grid);
            const Field2D f2 = sample_forcing(forcing_preset(), r2, grid);
            const double a = 0.7, b = -1.3;
            BoundarySpec bsum;
            bsum.g_left = EdgeFunction(grid);
            bsum.g_bottom = EdgeFunction(grid);
            bsum.h_right = EdgeFunction(grid);
            bsum.h_top = EdgeFunction(grid);
            for (int k = 0; k < grid.n; ++k) {
                bsum.g_left.values[k] = a * b1.g_left.values[k] + b * b2.g_left.values[k];
                bsum.g_bottom.values[k] = a * b1.g_bottom.values[k] + b * b2.g_bottom.values[k];
                bsum.h_right.values[k] = a * b1.h_right.values[k] + b * b2.h_right.values[k];
                bsum.h_top.values[k] = a * b1.h_top.values[k] + b * b2.h_top.values[k];
            }
            const Field2D fsum = field_linear_combine(a, f1, b, f2);
            const Field2D u12 = jacobi_solve(fsum, bsum, cfg);
            const Field2D u1 = jacobi_solve(f1, b1, cfg);
            const Field2D u2 = jacobi_solve(f2, b2, cfg);
            const Field2D usum = field_linear_combine(a, u1, b, u2);
            double num = 0.0, den = 0.0;
            for (size_t k = 0; k < u12.values.size(); ++k) {
                num += (u12.values[k] - usum.values[k]) * (u12.values[k] - usum.values[k]);
                den += usum.values[k] * usum.values[k];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
        all &= check(worst < 1e-5, "superposition", "worst_rel=" + format_double(worst));
    }
    {
        // finite-difference gradient check on the tiny double instance
        const Grid grid(16);
        FnoConfig cfg;
        cfg.in_channels = 6;
        cfg.width = 4;
        cfg.n_layers = 2;
        cfg.modes = 3;
        cfg.projection_hidden = 8;
        FnoModel<double> model = fno_init<double>(cfg, 3);
        BatchTensor<double> input(grid, 2, 6), target(grid, 2, 1);
        SampleRng rng(5, 77);
        for (auto& v : input.values) v = rng.next_normal() * 0.5;
        for (auto& v : target.values) v = rng.next_normal() * 0.5;
        FnoParams<double> grads = FnoParams<double>::shaped(cfg);
        fno_loss_and_gradients(model, input, target, grads);
        double worst = 0.0;
        visit_params(model.params, [&](const std::string& name, std::vector<double>& vec) {
            std::vector<double>* gvec = nullptr;
            visit_params(grads, [&](const std::string& n2, std::vector<double>& g2) {
                if (n2 == name) gvec = &g2;
            });
            const size_t stride = std::max<size_t>(1, vec.size() / 5);
            for (size_t k = 0; k < vec.size(); k += stride) {
                const double orig = vec[k];
                const double h = std::max(1e-5 * std::abs(orig), 1e-5);
                vec[k] = orig + h;
                FnoParams<double> dummy = FnoParams<double>::shaped(cfg);
                const double lp = fno_loss_and_gradients(model, input, target, dummy);
                vec[k] = orig - h;
                const double lm = fno_loss_and_gradients(model, input, target, dummy);
                vec[k] = orig;
                const double fd = (lp - lm) / (2.0 * h);
                const double scale = std::max({std::abs(fd), std::abs((*gvec)[k]), 1e-6});
                worst = std::max(worst, std::abs(fd - (*gvec)[k]) / scale);
            }
        });
        all &= check(worst < 1e-3, "gradient_check", "max_rel=" + format_double(worst));
    }
    std::printf("selftest %s\n", all ? "passed" : "FAILED");
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-conditioned Poisson operator-learning lab"};
    app.require_subcommand(1);

    CommonOpts opts;
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");

    auto add_common = [&opts](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "run configuration JSON");
        sub->add_option("--dist", opts.dist, "boundary distribution preset (b0|b1)");
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--iters", opts.iters, "training-data Jacobi iterations override");
    };

    // datagen
    auto* datagen = app.add_subcommand("datagen", "generate a dataset file");
    add_common(datagen);
    std::string out = "out.bpde";
    int count = 16;
    std::string from_sidecar;
    int64_t stream_base = -1;
    datagen->add_option("--out", out, "output path")->required();
    datagen->add_option("--count", count, "sample count");
    datagen->add_option("--stream-base", stream_base, "first stream index");
    datagen->add_option("--from-sidecar", from_sidecar, "regenerate from a dataset sidecar");

    // train
    auto* train = app.add_subcommand("train", "train a model, write a checkpoint");
    add_common(train);
    std::string encoding = "aware", ckpt_out = "model.bfno", data_path;
    train->add_option("--encoding", encoding, "aware|ablated");
    train->add_option("--out", ckpt_out, "checkpoint output path")->required();
    train->add_option("--data", data_path, "train from an existing dataset file");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate checkpoints on distributions");
    eval->add_option("--config", opts.config_path, "run configuration JSON");
    eval->add_option("--seed", opts.seed, "master seed override");
    std::vector<std::string> checkpoints, dists;
    std::string eval_out;
    eval->add_option("--checkpoint", checkpoints, "checkpoint path (repeatable)")->required();
    eval->add_option("--dist", dists, "evaluation distribution preset (repeatable; default b0 b1)");
    eval->add_option("--out", eval_out, "report CSV path");

    // sweeps
    auto* sshift = app.add_subcommand("sweep-shift", "Dirichlet mean-shift sweep");
    add_common(sshift);
    std::string sweep_ckpt, sweep_out = "shift.csv";
    sshift->add_option("--checkpoint", sweep_ckpt)->required();
    sshift->add_option("--out", sweep_out);

    auto* sfreq = app.add_subcommand("sweep-freq", "Dirichlet bandwidth sweep");
    add_common(sfreq);
    std::string freq_ckpt, freq_out = "freq.csv";
    sfreq->add_option("--checkpoint", freq_ckpt)->required();
    sfreq->add_option("--out", freq_out);

    // condexp
    auto* cexp = app.add_subcommand("condexp", "conditional-expectation study");
    add_common(cexp);
    std::string cexp_ckpt, cexp_out = "condexp.csv", cexp_fields = "condexp_fields.bfld";
    cexp->add_option("--checkpoint", cexp_ckpt)->required();
    cexp->add_option("--out", cexp_out);
    cexp->add_option("--fields", cexp_fields, "field-file output path");

    // selftest
    auto* self = app.add_subcommand("selftest", "solver, superposition and gradient checks");
    (void)self;

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        if (datagen->parsed()) return cmd_datagen(opts, out, count, from_sidecar, stream_base);
        if (train->parsed()) return cmd_train(opts, encoding, ckpt_out, data_path);
        if (eval->parsed()) {
            if (dists.empty()) dists = {"b0", "b1"};
            return cmd_eval(opts, checkpoints, dists, eval_out);
        }
        if (sshift->parsed()) return cmd_sweep(opts, sweep_ckpt, sweep_out, true);
        if (sfreq->parsed()) return cmd_sweep(opts, freq_ckpt, freq_out, false);
        if (cexp->parsed()) return cmd_condexp(opts, cexp_ckpt, cexp_out, cexp_fields);
        if (self->parsed()) return cmd_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
