#include "bpde/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#ifndef BPDE_COMMIT_ID
#define BPDE_COMMIT_ID "unknown"
#endif

namespace bpde {

using nlohmann::json;

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string build_commit() { return BPDE_COMMIT_ID; }

// --------------------------------------------------------------------------
// little-endian byte stream helpers

namespace {

class ByteWriter {
public:
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void f32_span(const std::vector<float>& vs) {
        for (float v : vs) f32(v);
    }
    void raw(const void* p, size_t len) {
        const char* c = static_cast<const char*>(p);
        bytes_.insert(bytes_.end(), c, c + len);
    }
    const std::string& str() const { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string data) : data_(std::move(data)) {}
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    void f32_into(std::vector<float>& out, size_t count) {
        out.resize(count);
        for (size_t i = 0; i < count; ++i) out[i] = f32();
    }
    std::string raw(size_t len) {
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    const std::string& data() const { return data_; }

private:
    void need(size_t len) const {
        if (pos_ + len > data_.size()) throw std::runtime_error("file truncated");
    }
    std::string data_;
    size_t pos_ = 0;
};

void write_binary_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

json edge_dist_json(const EdgeDistribution& d) {
    return json{{"bandwidth", d.bandwidth}, {"amplitude", d.amplitude},
                {"mean_shift", d.mean_shift}};
}

void reject_unknown(const json& obj, const char* where, std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : keys)
            if (key == k) known = true;
        if (!known)
            throw std::runtime_error(std::string("unknown key '") + key + "' in " + where);
    }
}

EdgeDistribution edge_dist_from_json(const json& j, const char* where) {
    reject_unknown(j, where, {"bandwidth", "amplitude", "mean_shift"});
    EdgeDistribution d;
    d.bandwidth = j.value("bandwidth", d.bandwidth);
    d.amplitude = j.value("amplitude", d.amplitude);
    d.mean_shift = j.value("mean_shift", d.mean_shift);
    d.validate();
    return d;
}

json boundary_dist_json(const BoundaryDistribution& d) {
    return json{{"label", d.label},
                {"dirichlet", edge_dist_json(d.dirichlet)},
                {"neumann", edge_dist_json(d.neumann)}};
}

BoundaryDistribution boundary_dist_from_json(const json& j) {
    if (j.contains("preset")) {
        reject_unknown(j, "boundary", {"preset"});
        return boundary_preset(j["preset"].get<std::string>());
    }
    reject_unknown(j, "boundary", {"label", "dirichlet", "neumann"});
    BoundaryDistribution d = b0_preset();
    if (j.contains("label")) d.label = j["label"].get<std::string>();
    if (j.contains("dirichlet")) d.dirichlet = edge_dist_from_json(j["dirichlet"], "boundary.dirichlet");
    if (j.contains("neumann")) d.neumann = edge_dist_from_json(j["neumann"], "boundary.neumann");
    d.validate();
    return d;
}

}  // namespace

// --------------------------------------------------------------------------
// dataset files

namespace {
constexpr uint32_t kDatasetMagic = 0x45445042u;  // "BPDE" LE
constexpr uint32_t kCheckpointMagic = 0x4f4e4642u;  // "BFNO" LE
constexpr uint32_t kFieldMagic = 0x444c4642u;  // "BFLD" LE
}  // namespace

void write_dataset(const std::string& path, const Dataset& ds, const DatasetProvenance& prov) {
    ByteWriter w;
    w.u32(kDatasetMagic);
    w.u32(1);
    w.u32(static_cast<uint32_t>(ds.grid.n));
    w.u32(static_cast<uint32_t>(ds.samples.size()));
    w.u32(ds.iterations);
    w.u32(0);  // reserved
    for (const DatasetSample& s : ds.samples) {
        w.f32_span(s.f);
        w.f32_span(s.u);
        w.f32_span(s.g_left);
        w.f32_span(s.g_bottom);
        w.f32_span(s.h_right);
        w.f32_span(s.h_top);
    }
    write_binary_file(path, w.str());

    json sidecar{{"format", "bpde-dataset"},
                 {"version", 1},
                 {"grid_n", prov.grid_n},
                 {"master_seed", prov.master_seed},
                 {"stream_base", prov.stream_base},
                 {"count", prov.count},
                 {"iterations", prov.iterations},
                 {"boundary", boundary_dist_json(prov.boundary)},
                 {"forcing", json{{"bandwidth", prov.forcing.bandwidth},
                                  {"amplitude", prov.forcing.amplitude}}}};
    write_text_file(path + ".json", sidecar.dump(2) + "\n");
}

Dataset read_dataset(const std::string& path) {
    ByteReader r(read_binary_file(path));
    if (r.u32() != kDatasetMagic) throw std::runtime_error("not a dataset file: " + path);
    if (r.u32() != 1) throw std::runtime_error("unsupported dataset version: " + path);
    const uint32_t n = r.u32();
    const uint32_t count = r.u32();
    const uint32_t iterations = r.u32();
    r.u32();  // reserved
    if (n < 3) throw std::runtime_error("dataset grid too small: " + path);
    const size_t expect = 24 + static_cast<size_t>(count) *
                                   (2ull * n * n + 4ull * n) * 4ull;
    if (r.data().size() != expect)
        throw std::runtime_error("dataset length mismatch: " + path);

    Dataset ds;
    ds.grid = Grid(static_cast<int>(n));
    ds.iterations = iterations;
    ds.samples.resize(count);
    const size_t plane = static_cast<size_t>(n) * n;
    for (DatasetSample& s : ds.samples) {
        r.f32_into(s.f, plane);
        r.f32_into(s.u, plane);
        r.f32_into(s.g_left, n);
        r.f32_into(s.g_bottom, n);
        r.f32_into(s.h_right, n);
        r.f32_into(s.h_top, n);
    }
    return ds;
}

DatasetProvenance read_dataset_sidecar(const std::string& sidecar_path) {
    const json j = json::parse(read_text_file(sidecar_path));
    reject_unknown(j, "dataset sidecar",
                   {"format", "version", "grid_n", "master_seed", "stream_base", "count",
                    "iterations", "boundary", "forcing"});
    DatasetProvenance p;
    p.grid_n = j.at("grid_n").get<int>();
    p.master_seed = j.at("master_seed").get<uint64_t>();
    p.stream_base = j.at("stream_base").get<uint64_t>();
    p.count = j.at("count").get<uint32_t>();
    p.iterations = j.at("iterations").get<uint32_t>();
    p.boundary = boundary_dist_from_json(j.at("boundary"));
    const json& f = j.at("forcing");
    reject_unknown(f, "forcing", {"bandwidth", "amplitude"});
    p.forcing.bandwidth = f.at("bandwidth").get<int>();
    p.forcing.amplitude = f.at("amplitude").get<double>();
    p.forcing.validate();
    return p;
}

// --------------------------------------------------------------------------
// checkpoints

void write_checkpoint(const std::string& path, const FnoModel<float>& model) {
    model.config.validate();
    ByteWriter w;
    w.u32(kCheckpointMagic);
    w.u32(1);
    w.u32(static_cast<uint32_t>(model.config.in_channels));
    w.u32(static_cast<uint32_t>(model.config.width));
    w.u32(static_cast<uint32_t>(model.config.n_layers));
    w.u32(static_cast<uint32_t>(model.config.modes));
    w.u32(static_cast<uint32_t>(model.config.projection_hidden));
    uint32_t records = 0;
    visit_params(model.params, [&records](const std::string&, const std::vector<float>&) {
        ++records;
    });
    w.u32(records);
    visit_params(model.params, [&w](const std::string& name, const std::vector<float>& vec) {
        w.u32(static_cast<uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        w.u32(0);  // dtype tag: float32
        w.u32(1);  // rank (flat)
        w.u32(static_cast<uint32_t>(vec.size()));
        w.f32_span(vec);
    });
    const uint64_t hash = fnv1a64(w.str().data(), w.str().size());
    w.u64(hash);
    write_binary_file(path, w.str());
}

FnoModel<float> read_checkpoint(const std::string& path) {
    const std::string bytes = read_binary_file(path);
    if (bytes.size() < 8 + 8) throw std::runtime_error("checkpoint too short: " + path);
    const uint64_t stored = [&] {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[bytes.size() - 8 + i]))
                 << (8 * i);
        return v;
    }();
    if (fnv1a64(bytes.data(), bytes.size() - 8) != stored)
        throw std::runtime_error("checkpoint hash mismatch: " + path);

    ByteReader r(bytes);
    if (r.u32() != kCheckpointMagic) throw std::runtime_error("not a checkpoint file: " + path);
    if (r.u32() != 1) throw std::runtime_error("unsupported checkpoint version: " + path);
    FnoConfig cfg;
    cfg.in_channels = static_cast<int>(r.u32());
    cfg.width = static_cast<int>(r.u32());
    cfg.n_layers = static_cast<int>(r.u32());
    cfg.modes = static_cast<int>(r.u32());
    cfg.projection_hidden = static_cast<int>(r.u32());
    cfg.validate();
    const uint32_t records = r.u32();

    FnoModel<float> model{cfg, FnoParams<float>::shaped(cfg)};
    uint32_t seen = 0;
    std::vector<std::pair<std::string, std::vector<float>*>> slots;
    visit_params(model.params, [&slots](const std::string& name, std::vector<float>& vec) {
        slots.emplace_back(name, &vec);
    });
    for (uint32_t rec = 0; rec < records; ++rec) {
        const uint32_t name_len = r.u32();
        const std::string name = r.raw(name_len);
        if (r.u32() != 0) throw std::runtime_error("unsupported dtype in checkpoint: " + path);
        if (r.u32() != 1) throw std::runtime_error("unsupported rank in checkpoint: " + path);
        const uint32_t len = r.u32();
        std::vector<float>* slot = nullptr;
        for (auto& [n2, vec] : slots)
            if (n2 == name) slot = vec;
        if (!slot) throw std::runtime_error("unexpected parameter '" + name + "' in " + path);
        if (slot->size() != len)
            throw std::runtime_error("parameter '" + name + "' has wrong size in " + path);
        r.f32_into(*slot, len);
        ++seen;
    }
    if (seen != slots.size()) throw std::runtime_error("missing parameters in " + path);
    for (auto& [name, vec] : slots)
        for (float v : *vec)
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite parameter '" + name + "' in " + path);
    return model;
}

// --------------------------------------------------------------------------
// field files

void write_fields(const std::string& path,
                  const std::vector<std::pair<std::string, Field2D>>& fields) {
    if (fields.empty()) throw std::invalid_argument("write_fields: no fields");
    const Grid grid = fields.front().second.grid;
    ByteWriter w;
    w.u32(kFieldMagic);
    w.u32(1);
    w.u32(static_cast<uint32_t>(grid.n));
    w.u32(static_cast<uint32_t>(fields.size()));
    for (const auto& [name, field] : fields) {
        if (!(field.grid == grid)) throw std::invalid_argument("write_fields: grid mismatch");
        w.u32(static_cast<uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        for (double v : field.values) w.f32(static_cast<float>(v));
    }
    write_binary_file(path, w.str());
}

std::vector<std::pair<std::string, Field2D>> read_fields(const std::string& path) {
    ByteReader r(read_binary_file(path));
    if (r.u32() != kFieldMagic) throw std::runtime_error("not a field file: " + path);
    if (r.u32() != 1) throw std::runtime_error("unsupported field file version: " + path);
    const Grid grid(static_cast<int>(r.u32()));
    const uint32_t count = r.u32();
    std::vector<std::pair<std::string, Field2D>> out;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32();
        std::string name = r.raw(name_len);
        Field2D f(grid);
        for (double& v : f.values) v = static_cast<double>(r.f32());
        out.emplace_back(std::move(name), std::move(f));
    }
    return out;
}

// --------------------------------------------------------------------------
// run configuration

void RunConfig::validate() const {
    if (grid_n < 3) throw std::runtime_error("RunConfig: grid n must be >= 3");
    boundary.validate();
    forcing.validate();
    if (train_iterations < 1 || eval_iterations < 1)
        throw std::runtime_error("RunConfig: iteration counts must be >= 1");
    fno.validate();
    train.validate();
    if (train_samples < 1) throw std::runtime_error("RunConfig: train_samples < 1");
    if (holdout_samples < 0) throw std::runtime_error("RunConfig: holdout_samples < 0");
    if (eval.batches < 1 || eval.batch_size < 1)
        throw std::runtime_error("RunConfig: eval batches/batch_size must be >= 1");
    if (shift_deltas.empty()) throw std::runtime_error("RunConfig: empty shift_deltas");
    if (freq_bandwidths.empty()) throw std::runtime_error("RunConfig: empty freq_bandwidths");
    for (int k : freq_bandwidths)
        if (k < 1) throw std::runtime_error("RunConfig: bandwidth < 1");
    if (mc_samples < 1) throw std::runtime_error("RunConfig: mc_samples < 1");
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.boundary = b0_preset();
    cfg.forcing = forcing_preset();
    return cfg;
}

RunConfig parse_run_config_json(const std::string& text) {
    json j = json::parse(text);
    // Accept a provenance wrapper: the embedded config is authoritative.
    if (j.contains("config")) {
        reject_unknown(j, "provenance", {"config", "protocol", "config_hash", "commit",
                                         "encoding", "dist_label", "second_boundary"});
        j = j["config"];
    }
    reject_unknown(j, "run config",
                   {"grid", "seed", "boundary", "forcing", "solver", "fno", "train", "eval",
                    "shift_sweep", "freq_sweep", "condexp"});
    RunConfig cfg = default_run_config();
    if (j.contains("grid")) {
        reject_unknown(j["grid"], "grid", {"n"});
        cfg.grid_n = j["grid"].value("n", cfg.grid_n);
    }
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("boundary")) cfg.boundary = boundary_dist_from_json(j["boundary"]);
    if (j.contains("forcing")) {
        reject_unknown(j["forcing"], "forcing", {"bandwidth", "amplitude"});
        cfg.forcing.bandwidth = j["forcing"].value("bandwidth", cfg.forcing.bandwidth);
        cfg.forcing.amplitude = j["forcing"].value("amplitude", cfg.forcing.amplitude);
    }
    if (j.contains("solver")) {
        reject_unknown(j["solver"], "solver", {"train_iterations", "eval_iterations"});
        cfg.train_iterations = j["solver"].value("train_iterations", cfg.train_iterations);
        cfg.eval_iterations = j["solver"].value("eval_iterations", cfg.eval_iterations);
    }
    if (j.contains("fno")) {
        reject_unknown(j["fno"], "fno", {"width", "n_layers", "modes", "projection_hidden"});
        cfg.fno.width = j["fno"].value("width", cfg.fno.width);
        cfg.fno.n_layers = j["fno"].value("n_layers", cfg.fno.n_layers);
        cfg.fno.modes = j["fno"].value("modes", cfg.fno.modes);
        cfg.fno.projection_hidden = j["fno"].value("projection_hidden", cfg.fno.projection_hidden);
    }
    if (j.contains("train")) {
        reject_unknown(j["train"], "train",
                       {"learning_rate", "steps", "batch_size", "adam_beta1", "adam_beta2",
                        "adam_eps", "log_every", "train_samples", "holdout_samples"});
        const json& t = j["train"];
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.steps = t.value("steps", cfg.train.steps);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
        cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
        cfg.train.adam_eps = t.value("adam_eps", cfg.train.adam_eps);
        cfg.train.log_every = t.value("log_every", cfg.train.log_every);
        cfg.train_samples = t.value("train_samples", cfg.train_samples);
        cfg.holdout_samples = t.value("holdout_samples", cfg.holdout_samples);
    }
    if (j.contains("eval")) {
        reject_unknown(j["eval"], "eval", {"batches", "batch_size"});
        cfg.eval.batches = j["eval"].value("batches", cfg.eval.batches);
        cfg.eval.batch_size = j["eval"].value("batch_size", cfg.eval.batch_size);
    }
    if (j.contains("shift_sweep")) {
        reject_unknown(j["shift_sweep"], "shift_sweep", {"deltas"});
        if (j["shift_sweep"].contains("deltas"))
            cfg.shift_deltas = j["shift_sweep"]["deltas"].get<std::vector<double>>();
    }
    if (j.contains("freq_sweep")) {
        reject_unknown(j["freq_sweep"], "freq_sweep", {"bandwidths"});
        if (j["freq_sweep"].contains("bandwidths"))
            cfg.freq_bandwidths = j["freq_sweep"]["bandwidths"].get<std::vector<int>>();
    }
    if (j.contains("condexp")) {
        reject_unknown(j["condexp"], "condexp", {"mc_samples"});
        cfg.mc_samples = j["condexp"].value("mc_samples", cfg.mc_samples);
    }
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config_json(read_text_file(path));
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j{{"grid", {{"n", cfg.grid_n}}},
           {"seed", cfg.seed},
           {"boundary", boundary_dist_json(cfg.boundary)},
           {"forcing", {{"bandwidth", cfg.forcing.bandwidth}, {"amplitude", cfg.forcing.amplitude}}},
           {"solver",
            {{"train_iterations", cfg.train_iterations}, {"eval_iterations", cfg.eval_iterations}}},
           {"fno",
            {{"width", cfg.fno.width},
             {"n_layers", cfg.fno.n_layers},
             {"modes", cfg.fno.modes},
             {"projection_hidden", cfg.fno.projection_hidden}}},
           {"train",
            {{"learning_rate", cfg.train.learning_rate},
             {"steps", cfg.train.steps},
             {"batch_size", cfg.train.batch_size},
             {"adam_beta1", cfg.train.adam_beta1},
             {"adam_beta2", cfg.train.adam_beta2},
             {"adam_eps", cfg.train.adam_eps},
             {"log_every", cfg.train.log_every},
             {"train_samples", cfg.train_samples},
             {"holdout_samples", cfg.holdout_samples}}},
           {"eval", {{"batches", cfg.eval.batches}, {"batch_size", cfg.eval.batch_size}}},
           {"shift_sweep", {{"deltas", cfg.shift_deltas}}},
           {"freq_sweep", {{"bandwidths", cfg.freq_bandwidths}}},
           {"condexp", {{"mc_samples", cfg.mc_samples}}}};
    return j.dump(2) + "\n";
}

uint64_t run_config_hash(const RunConfig& cfg) {
    const std::string text = run_config_to_json(cfg);
    return fnv1a64(text.data(), text.size());
}

// --------------------------------------------------------------------------
// text helpers

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    std::string text = "label,mean,std,count\n";
    for (const ReportRow& row : rows) {
        text += row.label;
        text += ',';
        text += format_double(row.stat.mean);
        text += ',';
        text += format_double(row.stat.std);
        text += ',';
        text += std::to_string(row.stat.count);
        text += '\n';
    }
    write_text_file(path, text);
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::string text = "step,train_mse,holdout_rel_l2\n";
    for (const TrainLogEntry& e : log) {
        text += std::to_string(e.step);
        text += ',';
        text += format_double(e.train_mse);
        text += ',';
        text += format_double(e.holdout_rel_l2);
        text += '\n';
    }
    write_text_file(path, text);
}

void write_text_file(const std::string& path, const std::string& text) {
    write_binary_file(path, text);
}

std::string read_text_file(const std::string& path) { return read_binary_file(path); }

}  // namespace bpde
