#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bpde/experiments.hpp"

using namespace bpde;

namespace {

// Desk-scale plan: tiny grid, tiny model, short training.
ExperimentPlan tiny_plan() {
    RunConfig cfg = default_run_config();
    cfg.grid_n = 16;
    cfg.train_iterations = 40;
    cfg.eval_iterations = 60;
    cfg.fno.width = 8;
    cfg.fno.n_layers = 2;
    cfg.fno.modes = 3;
    cfg.fno.projection_hidden = 8;
    cfg.train.steps = 30;
    cfg.train.batch_size = 4;
    cfg.train.log_every = 10;
    cfg.train_samples = 16;
    cfg.holdout_samples = 4;
    cfg.eval.batches = 4;
    cfg.eval.batch_size = 4;
    cfg.shift_deltas = {-0.5, 0.0, 0.5};
    cfg.freq_bandwidths = {6, 8};
    cfg.mc_samples = 8;
    cfg.validate();
    return plan_from_config(cfg);
}

}  // namespace

TEST_CASE("stream blocks are ordered and disjoint by construction") {
    CHECK(streams::kEvalBase == (1ull << 32));
    CHECK(streams::kCondexpBase == (1ull << 33));
    CHECK(streams::kEvalBase + 4096ull * streams::kConditionStride <= streams::kCondexpBase);
    CHECK(streams::kModelInit > streams::kCondexpBase);
    CHECK(streams::kHoldoutBase > streams::kModelInit);
    const ExperimentPlan plan = tiny_plan();
    CHECK_THROWS(make_eval_dataset(plan, plan.config.boundary, 1 << 13));
}

TEST_CASE("eval datasets are deterministic and condition-dependent") {
    const ExperimentPlan plan = tiny_plan();
    const Dataset a = make_eval_dataset(plan, plan.config.boundary, 3);
    const Dataset b = make_eval_dataset(plan, plan.config.boundary, 3);
    CHECK(a.samples[0].u == b.samples[0].u);
    CHECK(a.iterations == 60);
    const Dataset c = make_eval_dataset(plan, plan.config.boundary, 4);
    CHECK(a.samples[0].f != c.samples[0].f);

    // shifting moves the Dirichlet edges and the re-solved truth
    const Dataset s = make_eval_dataset(plan, plan.config.boundary, 3, 0.5);
    CHECK(s.samples[0].f == a.samples[0].f);
    for (int k = 0; k < plan.config.grid_n; ++k)
        CHECK(s.samples[0].g_left[k] ==
              doctest::Approx(a.samples[0].g_left[k] + 0.5).epsilon(1e-6));
    CHECK(s.samples[0].u != a.samples[0].u);
    CHECK(s.samples[0].h_right == a.samples[0].h_right);
}

TEST_CASE("zero model scores relative error one") {
    const ExperimentPlan plan = tiny_plan();
    FnoConfig cfg = plan.config.fno;
    cfg.in_channels = 6;
    const FnoModel<float> zero{cfg, FnoParams<float>::shaped(cfg)};
    const Dataset ds = make_eval_dataset(plan, plan.config.boundary, 0);
    const ErrorStat stat =
        score_model(zero, InputEncoding::kBoundaryAware, ds, plan.config.eval.batch_size);
    CHECK(stat.count == plan.config.eval.batches);
    CHECK(stat.mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cross-distribution grid with identical ensembles is symmetric") {
    ExperimentPlan plan = tiny_plan();
    plan.second_dist = plan.config.boundary;  // distributions coincide
    FnoConfig cfg = plan.config.fno;
    cfg.in_channels = 6;
    const FnoModel<float> model = fno_init<float>(cfg, 7);
    FnoConfig acfg = plan.config.fno;
    acfg.in_channels = 3;
    const FnoModel<float> ablated = fno_init<float>(acfg, 7);

    const ExperimentReport rep = run_cross_distribution(plan, model, model, ablated);
    REQUIRE(rep.rows.size() == 6);
    // same model, same distribution, different eval streams: the two cells
    // must agree within resampling noise
    const ErrorStat on_a = rep.rows[0].stat;
    const ErrorStat on_b = rep.rows[1].stat;
    const double pooled = std::sqrt(on_a.std * on_a.std + on_b.std * on_b.std) + 1e-12;
    CHECK(std::abs(on_a.mean - on_b.mean) < 2.0 * pooled);
}

TEST_CASE("reports reproduce bitwise and embed provenance") {
    const ExperimentPlan plan = tiny_plan();
    FnoConfig cfg = plan.config.fno;
    cfg.in_channels = 6;
    const FnoModel<float> model = fno_init<float>(cfg, 3);

    const ExperimentReport r1 = run_shift_sweep(plan, model);
    const ExperimentReport r2 = run_shift_sweep(plan, model);
    REQUIRE(r1.rows.size() == plan.config.shift_deltas.size());
    for (size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].label == r2.rows[i].label);
        CHECK(r1.rows[i].stat.mean == r2.rows[i].stat.mean);
        CHECK(r1.rows[i].stat.std == r2.rows[i].stat.std);
    }
    CHECK(r1.provenance_json == r2.provenance_json);
    const ExperimentPlan back = plan_from_json(r1.provenance_json);
    CHECK(run_config_hash(back.config) == run_config_hash(plan.config));

#ifdef _OPENMP
    // thread count cannot change a report
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const ExperimentReport serial = run_shift_sweep(plan, model);
    omp_set_num_threads(saved > 1 ? saved : 2);
    const ExperimentReport parallel = run_shift_sweep(plan, model);
    omp_set_num_threads(saved);
    for (size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].stat.mean == parallel.rows[i].stat.mean);
        CHECK(serial.rows[i].stat.std == parallel.rows[i].stat.std);
    }
#endif
}

TEST_CASE("freq sweep uses the requested bandwidths") {
    const ExperimentPlan plan = tiny_plan();
    FnoConfig cfg = plan.config.fno;
    cfg.in_channels = 6;
    const FnoModel<float> model = fno_init<float>(cfg, 5);
    const ExperimentReport rep = run_freq_sweep(plan, model);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].label == "k=6");
    CHECK(rep.rows[1].label == "k=8");
}

TEST_CASE("condexp degenerate M=1 is well-formed") {
    ExperimentPlan plan = tiny_plan();
    plan.config.mc_samples = 1;
    FnoConfig cfg = plan.config.fno;
    cfg.in_channels = 3;
    const FnoModel<float> ablated = fno_init<float>(cfg, 9);
    const CondexpResult res = run_condexp(plan, ablated);
    REQUIRE(res.report.rows.size() == 3);
    REQUIRE(res.individual_distances.size() == 1);
    // with one sample the MC mean IS that sample
    CHECK(res.distance_to_mean ==
          doctest::Approx(res.individual_distances[0]).epsilon(1e-12));
    CHECK(res.report.rows[0].label == "model_vs_mc_mean");
    CHECK(res.report.rows[2].label == "frac_closer_to_mean");
    // boundary-aware model is rejected
    FnoConfig wrong = plan.config.fno;
    wrong.in_channels = 6;
    CHECK_THROWS(run_condexp(plan, fno_init<float>(wrong, 1)));
}

TEST_CASE("train_one smoke: loss decreases and models differ by encoding") {
    ExperimentPlan plan = tiny_plan();
    plan.config.train.steps = 120;
    plan.config.train.learning_rate = 3e-3;
    const TrainedModel aware =
        train_one(plan, plan.config.boundary, InputEncoding::kBoundaryAware);
    REQUIRE(aware.log.size() == 120);
    // per-batch losses are noisy; compare a head window against a tail window
    double head = 0.0, tail = 0.0;
    for (int k = 0; k < 10; ++k) {
        head += aware.log[k].train_mse;
        tail += aware.log[aware.log.size() - 1 - k].train_mse;
    }
    CHECK(tail < head);
    CHECK(aware.model.config.in_channels == 6);
    const TrainedModel ablated = train_one(plan, plan.config.boundary, InputEncoding::kAblated);
    CHECK(ablated.model.config.in_channels == 3);
}
