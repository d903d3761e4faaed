// File formats and run configuration. All binary formats are little-endian
// with fixed layouts regardless of host; every output file gets a JSON
// sidecar that is sufficient to regenerate it bitwise.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bpde/dataset.hpp"
#include "bpde/fno.hpp"
#include "bpde/metrics.hpp"

namespace bpde {

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);

// --------------------------------------------------------------------------
// dataset files: magic "BPDE", version 1, header of six u32-sized fields,
// then per sample f, u (n^2 float32 each) and the four edges (n float32
// each), row-major little-endian.

void write_dataset(const std::string& path, const Dataset& ds, const DatasetProvenance& prov);
Dataset read_dataset(const std::string& path);
DatasetProvenance read_dataset_sidecar(const std::string& sidecar_path);

// --------------------------------------------------------------------------
// checkpoints: magic "BFNO", version 1, serialized FnoConfig, named float32
// parameter records, and a trailing FNV-1a hash of all preceding bytes.

void write_checkpoint(const std::string& path, const FnoModel<float>& model);
FnoModel<float> read_checkpoint(const std::string& path);

// --------------------------------------------------------------------------
// field files (condexp panels): magic "BFLD", version 1, grid n, field
// count, then per field a name record and n^2 float32 values.

void write_fields(const std::string& path,
                  const std::vector<std::pair<std::string, Field2D>>& fields);
std::vector<std::pair<std::string, Field2D>> read_fields(const std::string& path);

// --------------------------------------------------------------------------
// run configuration (strict JSON: unknown keys are rejected, values are
// validated against the type invariants)

struct EvalSettings {
    int batches = 16;
    int batch_size = 12;
};

struct RunConfig {
    int grid_n = 64;
    uint64_t seed = 7;
    BoundaryDistribution boundary;  // default b0
    ForcingDistribution forcing;
    int train_iterations = 220;
    int eval_iterations = 320;
    FnoConfig fno;
    TrainConfig train;
    // Large enough that 2500 steps x batch 12 cannot memorize the training
    // set: the ablated model must settle at the conditional mean, not at a
    // lookup table (generation is cheap; see the experiments module).
    int train_samples = 16384;
    int holdout_samples = 12;
    EvalSettings eval;
    std::vector<double> shift_deltas = {-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0};
    std::vector<int> freq_bandwidths = {6, 8, 10, 12};
    int mc_samples = 256;

    void validate() const;
};

RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);  // canonical, sorted keys
uint64_t run_config_hash(const RunConfig& cfg);

// Commit id baked in at configure time ("unknown" outside a git checkout).
std::string build_commit();

// --------------------------------------------------------------------------
// small text helpers

std::string format_double(double v);  // fixed %.12g, "" for NaN

struct ReportRow {
    std::string label;
    ErrorStat stat;
};

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
void write_train_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace bpde
