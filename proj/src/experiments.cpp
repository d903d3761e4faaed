#include "bpde/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bpde/metrics.hpp"
#include "json.hpp"

namespace bpde {

using nlohmann::json;

namespace {

json boundary_json(const BoundaryDistribution& d) {
    return json{{"label", d.label},
                {"dirichlet",
                 {{"bandwidth", d.dirichlet.bandwidth},
                  {"amplitude", d.dirichlet.amplitude},
                  {"mean_shift", d.dirichlet.mean_shift}}},
                {"neumann",
                 {{"bandwidth", d.neumann.bandwidth},
                  {"amplitude", d.neumann.amplitude},
                  {"mean_shift", d.neumann.mean_shift}}}};
}

}  // namespace

ExperimentPlan plan_from_config(const RunConfig& cfg) {
    ExperimentPlan plan;
    plan.config = cfg;
    plan.second_dist = cfg.boundary == b1_preset() ? b0_preset() : b1_preset();
    return plan;
}

std::string plan_provenance_json(const ExperimentPlan& plan, const std::string& protocol) {
    json j;
    j["protocol"] = protocol;
    j["config"] = json::parse(run_config_to_json(plan.config));
    j["second_boundary"] = boundary_json(plan.second_dist);
    j["config_hash"] = run_config_hash(plan.config);
    j["commit"] = build_commit();
    return j.dump(2) + "\n";
}

ExperimentPlan plan_from_json(const std::string& text) {
    ExperimentPlan plan;
    plan.config = parse_run_config_json(text);
    plan.second_dist = plan.config.boundary == b1_preset() ? b0_preset() : b1_preset();
    const json j = json::parse(text);
    if (j.contains("second_boundary")) {
        json b = j["second_boundary"];
        BoundaryDistribution d;
        d.label = b.value("label", std::string("custom"));
        d.dirichlet.bandwidth = b.at("dirichlet").at("bandwidth").get<int>();
        d.dirichlet.amplitude = b.at("dirichlet").at("amplitude").get<double>();
        d.dirichlet.mean_shift = b.at("dirichlet").at("mean_shift").get<double>();
        d.neumann.bandwidth = b.at("neumann").at("bandwidth").get<int>();
        d.neumann.amplitude = b.at("neumann").at("amplitude").get<double>();
        d.neumann.mean_shift = b.at("neumann").at("mean_shift").get<double>();
        d.validate();
        plan.second_dist = d;
    }
    return plan;
}

void write_report(const std::string& path, const ExperimentReport& report) {
    write_report_csv(path, report.rows);
    write_text_file(path + ".json", report.provenance_json);
}

Dataset make_eval_dataset(const ExperimentPlan& plan, const BoundaryDistribution& dist,
                          int condition_id, double delta) {
    if (condition_id < 0 || static_cast<uint64_t>(condition_id) >= (streams::kCondexpBase -
                                                                    streams::kEvalBase) /
                                                                       streams::kConditionStride)
        throw std::invalid_argument("make_eval_dataset: condition id out of range");
    const RunConfig& cfg = plan.config;
    const Grid grid(cfg.grid_n);
    const int count = cfg.eval.batches * cfg.eval.batch_size;
    const uint64_t base = streams::kEvalBase +
                          static_cast<uint64_t>(condition_id) * streams::kConditionStride;

    std::vector<Field2D> fs(count);
    std::vector<BoundarySpec> bcs(count);
    for (int s = 0; s < count; ++s) {
        SampleRng rng(cfg.seed, base + static_cast<uint64_t>(s));
        BoundarySpec bc = sample_boundary(dist, rng, grid);
        fs[s] = sample_forcing(cfg.forcing, rng, grid);
        bcs[s] = (delta != 0.0) ? shift_dirichlet(bc, delta) : std::move(bc);
    }
    const SolverConfig scfg{cfg.eval_iterations};
    const std::vector<Field2D> us = solve_batch(fs, bcs, scfg);

    Dataset ds;
    ds.grid = grid;
    ds.iterations = static_cast<uint32_t>(cfg.eval_iterations);
    ds.samples.resize(count);
    for (int s = 0; s < count; ++s) {
        DatasetSample& smp = ds.samples[s];
        auto narrow = [](const std::vector<double>& v) {
            std::vector<float> o(v.size());
            for (size_t k = 0; k < v.size(); ++k) o[k] = static_cast<float>(v[k]);
            return o;
        };
        smp.f = narrow(fs[s].values);
        smp.u = narrow(us[s].values);
        smp.g_left = narrow(bcs[s].g_left.values);
        smp.g_bottom = narrow(bcs[s].g_bottom.values);
        smp.h_right = narrow(bcs[s].h_right.values);
        smp.h_top = narrow(bcs[s].h_top.values);
    }
    return ds;
}

ErrorStat score_model(const FnoModel<float>& model, InputEncoding enc, const Dataset& eval_ds,
                      int batch_size) {
    if (eval_ds.count() % batch_size != 0)
        throw std::invalid_argument("score_model: dataset not divisible into batches");
    const int batches = eval_ds.count() / batch_size;
    const size_t plane = static_cast<size_t>(eval_ds.grid.node_count());
    std::vector<double> batch_means(batches);
    FnoWorkspace<float> ws;
    BatchTensor<float> input(eval_ds.grid, batch_size, encoding_channels(enc));
    int skipped = 0;
    for (int b = 0; b < batches; ++b) {
        for (int k = 0; k < batch_size; ++k) {
            const int idx = b * batch_size + k;
            const Field2D f = eval_ds.forcing_field(idx);
            if (enc == InputEncoding::kBoundaryAware) {
                const BoundarySpec bc = eval_ds.boundary(idx);
                encode_input_into(f, &bc, enc, input.at(k, 0));
            } else {
                encode_input_into(f, static_cast<const BoundarySpec*>(nullptr), enc,
                                  input.at(k, 0));
            }
        }
        const BatchTensor<float> pred = fno_forward(model, input, &ws);
        double sum = 0.0;
        int used = 0;
        for (int k = 0; k < batch_size; ++k) {
            const int idx = b * batch_size + k;
            const double e =
                relative_l2(std::span<const float>(pred.at(k, 0), plane),
                            std::span<const float>(eval_ds.samples[idx].u.data(), plane));
            if (std::isnan(e)) {
                ++skipped;
                continue;
            }
            sum += e;
            ++used;
        }
        if (used == 0) throw std::runtime_error("score_model: batch with no valid samples");
        batch_means[b] = sum / used;
    }
    if (skipped > 0)
        std::fprintf(stderr, "warning: score_model skipped %d zero-norm samples\n", skipped);
    return aggregate(batch_means);
}

TrainedModel train_one(const ExperimentPlan& plan, const BoundaryDistribution& dist,
                       InputEncoding enc) {
    const RunConfig& cfg = plan.config;
    DatasetProvenance prov;
    prov.grid_n = cfg.grid_n;
    prov.master_seed = cfg.seed;
    prov.stream_base = 0;
    prov.count = static_cast<uint32_t>(cfg.train_samples);
    prov.iterations = static_cast<uint32_t>(cfg.train_iterations);
    prov.boundary = dist;
    prov.forcing = cfg.forcing;
    const Dataset train_ds = generate_dataset(prov);

    DatasetProvenance hprov = prov;
    hprov.stream_base = streams::kHoldoutBase;
    hprov.count = static_cast<uint32_t>(cfg.holdout_samples);
    hprov.iterations = static_cast<uint32_t>(cfg.eval_iterations);
    const Dataset holdout = generate_dataset(hprov);

    TrainedModel out;
    out.encoding = enc;
    out.dist_label = dist.label;
    out.model = fno_train<float>(train_ds, holdout, enc, cfg.fno, cfg.train, &out.log);
    return out;
}

TrainAllResult train_all(const ExperimentPlan& plan) {
    TrainAllResult result;
    result.aware_a = train_one(plan, plan.config.boundary, InputEncoding::kBoundaryAware);
    result.aware_b = train_one(plan, plan.second_dist, InputEncoding::kBoundaryAware);
    result.ablated_a = train_one(plan, plan.config.boundary, InputEncoding::kAblated);
    return result;
}

ExperimentReport run_cross_distribution(const ExperimentPlan& plan,
                                        const FnoModel<float>& aware_a,
                                        const FnoModel<float>& aware_b,
                                        const FnoModel<float>& ablated_a) {
    const std::string la = plan.config.boundary.label;
    const std::string lb = plan.second_dist.label;
    const Dataset eval_a = make_eval_dataset(plan, plan.config.boundary, conditions::kEvalDistA);
    const Dataset eval_b = make_eval_dataset(plan, plan.second_dist, conditions::kEvalDistB);
    const int bs = plan.config.eval.batch_size;

    ExperimentReport report;
    report.protocol = "cross_dist";
    report.provenance_json = plan_provenance_json(plan, report.protocol);
    const auto aware = InputEncoding::kBoundaryAware;
    const auto ablated = InputEncoding::kAblated;
    report.rows = {
        {"aware_" + la + "_on_" + la, score_model(aware_a, aware, eval_a, bs)},
        {"aware_" + la + "_on_" + lb, score_model(aware_a, aware, eval_b, bs)},
        {"aware_" + lb + "_on_" + la, score_model(aware_b, aware, eval_a, bs)},
        {"aware_" + lb + "_on_" + lb, score_model(aware_b, aware, eval_b, bs)},
        {"ablated_" + la + "_on_" + la, score_model(ablated_a, ablated, eval_a, bs)},
        {"ablated_" + la + "_on_" + lb, score_model(ablated_a, ablated, eval_b, bs)},
    };
    return report;
}

ExperimentReport run_shift_sweep(const ExperimentPlan& plan, const FnoModel<float>& aware_a) {
    ExperimentReport report;
    report.protocol = "shift_sweep";
    report.provenance_json = plan_provenance_json(plan, report.protocol);
    for (double delta : plan.config.shift_deltas) {
        // One fixed sample set per sweep: only the shift varies.
        const Dataset ds =
            make_eval_dataset(plan, plan.config.boundary, conditions::kShiftSweep, delta);
        report.rows.push_back({"delta=" + format_double(delta),
                               score_model(aware_a, InputEncoding::kBoundaryAware, ds,
                                           plan.config.eval.batch_size)});
    }
    return report;
}

ExperimentReport run_freq_sweep(const ExperimentPlan& plan, const FnoModel<float>& aware_a) {
    ExperimentReport report;
    report.protocol = "freq_sweep";
    report.provenance_json = plan_provenance_json(plan, report.protocol);
    for (int k : plan.config.freq_bandwidths) {
        const BoundaryDistribution dist = with_dirichlet_bandwidth(plan.config.boundary, k);
        const Dataset ds = make_eval_dataset(plan, dist, conditions::kFreqSweepBase + k);
        report.rows.push_back({"k=" + std::to_string(k),
                               score_model(aware_a, InputEncoding::kBoundaryAware, ds,
                                           plan.config.eval.batch_size)});
    }
    return report;
}

CondexpResult run_condexp(const ExperimentPlan& plan, const FnoModel<float>& ablated) {
    if (ablated.config.in_channels != encoding_channels(InputEncoding::kAblated))
        throw std::invalid_argument("run_condexp: model is not boundary-ablated");
    const RunConfig& cfg = plan.config;
    const Grid grid(cfg.grid_n);
    const int M = cfg.mc_samples;

    SampleRng frng(cfg.seed, streams::kCondexpBase);
    const Field2D fstar = sample_forcing(cfg.forcing, frng, grid);

    std::vector<Field2D> fs(M, fstar);
    std::vector<BoundarySpec> bcs(M);
    for (int m = 0; m < M; ++m) {
        SampleRng rng(cfg.seed, streams::kCondexpBase + 1 + static_cast<uint64_t>(m));
        bcs[m] = sample_boundary(cfg.boundary, rng, grid);
    }
    const SolverConfig scfg{cfg.eval_iterations};
    const std::vector<Field2D> us = solve_batch(fs, bcs, scfg);

    Field2D mean(grid);
    for (int m = 0; m < M; ++m)
        for (size_t p = 0; p < mean.values.size(); ++p) mean.values[p] += us[m].values[p];
    for (double& v : mean.values) v /= M;

    // The model sees the float32 forcing it would see from a dataset.
    Field2D f32(grid);
    for (size_t p = 0; p < f32.values.size(); ++p)
        f32.values[p] = static_cast<double>(static_cast<float>(fstar.values[p]));
    const Field2D uhat =
        fno_forward_field(ablated, f32, nullptr, InputEncoding::kAblated);

    CondexpResult result;
    result.model_output = uhat;
    result.mc_mean = mean;
    result.abs_diff = Field2D(grid);
    for (size_t p = 0; p < mean.values.size(); ++p)
        result.abs_diff.values[p] = std::abs(uhat.values[p] - mean.values[p]);
    result.distance_to_mean = relative_l2(uhat, mean);
    result.individual_distances.resize(M);
    int closer = 0;
    for (int m = 0; m < M; ++m) {
        result.individual_distances[m] = relative_l2(uhat, us[m]);
        if (result.distance_to_mean < result.individual_distances[m]) ++closer;
    }
    result.frac_closer = static_cast<double>(closer) / M;

    result.report.protocol = "condexp";
    result.report.provenance_json = plan_provenance_json(plan, result.report.protocol);
    ErrorStat mean_stat{result.distance_to_mean, 0.0, 1};
    result.report.rows.push_back({"model_vs_mc_mean", mean_stat});
    result.report.rows.push_back(
        {"model_vs_individual", aggregate(result.individual_distances)});
    ErrorStat frac_stat{result.frac_closer, 0.0, M};
    result.report.rows.push_back({"frac_closer_to_mean", frac_stat});
    return result;
}

}  // namespace bpde
