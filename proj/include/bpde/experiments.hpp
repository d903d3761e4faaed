// The four evaluation protocols: cross-distribution table, Dirichlet
// mean-shift sweep, Dirichlet bandwidth sweep, and the conditional-
// expectation ablation, plus the three-model training driver.
//
// Stream discipline: training data uses streams [0, train_samples) and
// holdout data kHoldoutBase+i; every evaluation condition owns the block
// kEvalBase + condition_id * kConditionStride; the conditional-expectation
// study draws its forcing at kCondexpBase and its Monte Carlo boundaries
// right after it. Reports are therefore reproducible bitwise from
// (seed, config) alone, on any thread count.
#pragma once

#include <string>
#include <vector>

#include "bpde/dataset.hpp"
#include "bpde/fno.hpp"
#include "bpde/io.hpp"

namespace bpde {

namespace conditions {
constexpr int kEvalDistA = 0;
constexpr int kEvalDistB = 1;
constexpr int kShiftSweep = 100;   // one sample set, shifted per delta
constexpr int kFreqSweepBase = 200;  // + bandwidth
}  // namespace conditions

struct ExperimentPlan {
    RunConfig config;                 // config.boundary is distribution A
    BoundaryDistribution second_dist;  // distribution B (cross-table only)
};

ExperimentPlan plan_from_config(const RunConfig& cfg);  // second_dist = b1 preset
std::string plan_provenance_json(const ExperimentPlan& plan, const std::string& protocol);
ExperimentPlan plan_from_json(const std::string& text);

struct ExperimentReport {
    std::string protocol;
    std::vector<ReportRow> rows;
    std::string provenance_json;
};

// Writes rows to <path> and provenance to <path>.json.
void write_report(const std::string& path, const ExperimentReport& report);

struct TrainedModel {
    FnoModel<float> model;
    InputEncoding encoding = InputEncoding::kBoundaryAware;
    std::string dist_label;
    std::vector<TrainLogEntry> log;
};

struct TrainAllResult {
    TrainedModel aware_a;   // boundary-aware, trained on distribution A
    TrainedModel aware_b;   // boundary-aware, trained on distribution B
    TrainedModel ablated_a; // no boundary channels, trained on distribution A
};

// Trains the three models of the protocol from freshly generated data.
TrainAllResult train_all(const ExperimentPlan& plan);

// Trains one model (encoding x distribution) the same way train_all would.
TrainedModel train_one(const ExperimentPlan& plan, const BoundaryDistribution& dist,
                       InputEncoding enc);

// Evaluation dataset for one condition: eval.batches * eval.batch_size
// samples from `dist`, Dirichlet edges shifted by `delta` before the
// ground-truth solve at eval_iterations.
Dataset make_eval_dataset(const ExperimentPlan& plan, const BoundaryDistribution& dist,
                          int condition_id, double delta = 0.0);

// Per-batch mean of per-sample relative L2, aggregated over batches.
ErrorStat score_model(const FnoModel<float>& model, InputEncoding enc, const Dataset& eval_ds,
                      int batch_size);

ExperimentReport run_cross_distribution(const ExperimentPlan& plan,
                                        const FnoModel<float>& aware_a,
                                        const FnoModel<float>& aware_b,
                                        const FnoModel<float>& ablated_a);

ExperimentReport run_shift_sweep(const ExperimentPlan& plan, const FnoModel<float>& aware_a);

ExperimentReport run_freq_sweep(const ExperimentPlan& plan, const FnoModel<float>& aware_a);

struct CondexpResult {
    ExperimentReport report;
    Field2D model_output;  // ablated prediction for the fixed forcing
    Field2D mc_mean;       // Monte Carlo mean over boundary samples
    Field2D abs_diff;
    std::vector<double> individual_distances;  // rel L2 to each sampled solution
    double distance_to_mean = 0.0;
    double frac_closer = 0.0;  // fraction of samples farther than the mean
};

CondexpResult run_condexp(const ExperimentPlan& plan, const FnoModel<float>& ablated);

}  // namespace bpde
