#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bpde/dataset.hpp"
#include "bpde/fno.hpp"
#include "bpde/metrics.hpp"
#include "bpde/sampling.hpp"

using namespace bpde;

namespace {

FnoConfig tiny_config(int width = 4, int in_channels = 6) {
    FnoConfig cfg;
    cfg.in_channels = in_channels;
    cfg.width = width;
    cfg.n_layers = 2;
    cfg.modes = 3;
    cfg.projection_hidden = 8;
    return cfg;
}

template <typename T>
BatchTensor<T> random_batch(const Grid& g, int batch, int channels, uint64_t stream,
                            double scale = 1.0) {
    BatchTensor<T> t(g, batch, channels);
    SampleRng rng(5, stream);
    for (auto& v : t.values) v = static_cast<T>(scale * rng.next_normal());
    return t;
}

FnoModel<double> to_double(const FnoModel<float>& m) {
    FnoModel<double> d{m.config, FnoParams<double>::shaped(m.config)};
    visit_params(d.params, [&](const std::string& name, std::vector<double>& dst) {
        visit_params(m.params, [&](const std::string& n2, const std::vector<float>& src) {
            if (n2 == name) dst.assign(src.begin(), src.end());
        });
    });
    return d;
}

}  // namespace

TEST_CASE("config validation") {
    FnoConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate_for_grid(Grid(16)));
    cfg.in_channels = 5;
    CHECK_THROWS(cfg.validate());
    cfg = tiny_config();
    cfg.modes = 9;
    CHECK_THROWS(cfg.validate_for_grid(Grid(16)));  // 2*modes > n
    CHECK(encoding_channels(InputEncoding::kBoundaryAware) == 6);
    CHECK(encoding_channels(InputEncoding::kAblated) == 3);
    CHECK(encoding_for_channels(6) == InputEncoding::kBoundaryAware);
    CHECK_THROWS(encoding_for_channels(4));
}

TEST_CASE("input encoding channels and corner rules") {
    const Grid g(4);
    Field2D f(g);
    for (int k = 0; k < g.node_count(); ++k) f.values[k] = 0.01 * k;
    SampleRng rng(7, 0);
    const BoundarySpec bc = sample_boundary(b0_preset(), rng, g);

    SUBCASE("ablated has exactly three channels and ignores bc") {
        const auto t1 = encode_input<double>(f, nullptr, InputEncoding::kAblated);
        const auto t2 = encode_input<double>(f, &bc, InputEncoding::kAblated);
        CHECK(t1.channels == 3);
        CHECK(t1.values == t2.values);
    }
    SUBCASE("boundary data required in aware mode") {
        CHECK_THROWS_AS(encode_input<double>(f, nullptr, InputEncoding::kBoundaryAware),
                        std::invalid_argument);
    }
    SUBCASE("mask counts: dirichlet 2n-1, neumann 2n-3") {
        const auto t = encode_input<double>(f, &bc, InputEncoding::kBoundaryAware);
        const size_t plane = t.plane();
        double dsum = 0.0, nsum = 0.0;
        for (size_t p = 0; p < plane; ++p) {
            dsum += t.values[4 * plane + p];
            nsum += t.values[5 * plane + p];
        }
        CHECK(dsum == 2 * g.n - 1);  // = 7 for n = 4
        CHECK(nsum == 2 * g.n - 3);
        // masks never overlap
        for (size_t p = 0; p < plane; ++p)
            CHECK(t.values[4 * plane + p] * t.values[5 * plane + p] == 0.0);
    }
    SUBCASE("value channel carries edge data with solver corner rules") {
        const auto t = encode_input<double>(f, &bc, InputEncoding::kBoundaryAware);
        const size_t plane = t.plane();
        const double* v = t.values.data() + 3 * plane;
        const int n = g.n;
        CHECK(v[0 * n + 2] == bc.g_left.values[2]);
        CHECK(v[2 * n + 0] == bc.g_bottom.values[2]);
        CHECK(v[(n - 1) * n + 2] == bc.h_right.values[2]);
        CHECK(v[2 * n + (n - 1)] == bc.h_top.values[2]);
        CHECK(v[0] == 0.5 * (bc.g_left.values[0] + bc.g_bottom.values[0]));
        CHECK(v[(n - 1) * n + 0] == bc.g_bottom.values[n - 1]);
        CHECK(v[0 * n + (n - 1)] == bc.g_left.values[n - 1]);
        CHECK(v[(n - 1) * n + (n - 1)] ==
              0.5 * (bc.h_right.values[n - 1] + bc.h_top.values[n - 1]));
        // interior stays zero
        CHECK(v[1 * n + 1] == 0.0);
        CHECK(v[2 * n + 2] == 0.0);
    }
    SUBCASE("zero boundary data zeroes the value channel but not the masks") {
        BoundarySpec zbc;
        for (auto* e : {&zbc.g_left, &zbc.g_bottom, &zbc.h_right, &zbc.h_top})
            *e = EdgeFunction(g);
        const auto t = encode_input<double>(f, &zbc, InputEncoding::kBoundaryAware);
        const size_t plane = t.plane();
        for (size_t p = 0; p < plane; ++p) CHECK(t.values[3 * plane + p] == 0.0);
        double dsum = 0.0;
        for (size_t p = 0; p < plane; ++p) dsum += t.values[4 * plane + p];
        CHECK(dsum == 2 * g.n - 1);
    }
}

TEST_CASE("zero model outputs the projection bias") {
    const Grid g(16);
    FnoConfig cfg = tiny_config();
    FnoModel<double> model{cfg, FnoParams<double>::shaped(cfg)};
    model.params.proj2_b[0] = 0.375;
    const auto out = fno_forward(model, random_batch<double>(g, 2, 6, 1));
    for (double v : out.values) CHECK(v == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("packed production forward equals the straight-line reference") {
    const Grid g(16);
    for (int width : {4, 5}) {  // odd width exercises the unpaired channel
        FnoConfig cfg = tiny_config(width);
        const FnoModel<double> model = to_double(fno_init<float>(cfg, 11));
        const auto input = random_batch<double>(g, 3, 6, 2);
        const auto out = fno_forward(model, input);
        for (int b = 0; b < 3; ++b) {
            double max_imag = 0.0;
            const Field2D ref = fno_forward_reference(model, input, b, &max_imag);
            CHECK(max_imag < 1e-6);  // reality of the symmetrized inverse transform
            const size_t plane = input.plane();
            for (size_t p = 0; p < plane; ++p)
                CHECK(out.at(b, 0)[p] == doctest::Approx(ref.values[p]).epsilon(1e-9));
        }
    }
}

TEST_CASE("spectral truncation: high-frequency input perturbations are invisible") {
    const Grid g(16);
    FnoConfig cfg = tiny_config();
    FnoModel<double> model = to_double(fno_init<float>(cfg, 13));
    for (auto& layer : model.params.layers) {
        std::fill(layer.byp_w.begin(), layer.byp_w.end(), 0.0);
        std::fill(layer.byp_b.begin(), layer.byp_b.end(), 0.0);
    }
    auto input = random_batch<double>(g, 1, 6, 3);
    const auto base = fno_forward(model, input);
    // inject a pure sinusoid strictly above the retained band (freq > modes)
    const int freq = cfg.modes + 1;
    for (int c = 0; c < 6; ++c) {
        double* chan = input.at(0, c);
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
                chan[static_cast<size_t>(i) * g.n + j] +=
                    0.7 * std::cos(2.0 * std::numbers::pi * freq * i / g.n) *
                    std::sin(2.0 * std::numbers::pi * freq * j / g.n);
    }
    const auto perturbed = fno_forward(model, input);
    for (size_t k = 0; k < base.values.size(); ++k)
        CHECK(perturbed.values[k] == doctest::Approx(base.values[k]).epsilon(1e-10));
}

TEST_CASE("loss is zero at the minimum and scales quadratically") {
    const Grid g(16);
    FnoConfig cfg = tiny_config();
    const FnoModel<double> model = to_double(fno_init<float>(cfg, 17));
    const auto input = random_batch<double>(g, 2, 6, 4);
    const auto out = fno_forward(model, input);
    FnoParams<double> grads = FnoParams<double>::shaped(cfg);

    BatchTensor<double> target = out;
    CHECK(fno_loss_and_gradients(model, input, target, grads) == 0.0);
    visit_params(grads, [](const std::string&, const std::vector<double>& v) {
        for (double x : v) CHECK(x == 0.0);
    });

    // zero model: loss quadruples when targets double (exact powers of two)
    FnoModel<double> zero{cfg, FnoParams<double>::shaped(cfg)};
    auto t1 = random_batch<double>(g, 2, 1, 5);
    auto t2 = t1;
    for (auto& v : t2.values) v *= 2.0;
    const double l1 = fno_loss_and_gradients(zero, input, t1, grads);
    const double l2 = fno_loss_and_gradients(zero, input, t2, grads);
    CHECK(l2 == 4.0 * l1);
}

TEST_CASE("analytic gradients match central finite differences") {
    const Grid g(16);
    FnoConfig cfg = tiny_config();
    FnoModel<double> model = to_double(fno_init<float>(cfg, 19));
    const auto input = random_batch<double>(g, 2, 6, 6, 0.5);
    const auto target = random_batch<double>(g, 2, 1, 7, 0.5);
    FnoParams<double> grads = FnoParams<double>::shaped(cfg);
    fno_loss_and_gradients(model, input, target, grads);

    double worst = 0.0;
    visit_params(model.params, [&](const std::string& name, std::vector<double>& vec) {
        const std::vector<double>* gvec = nullptr;
        visit_params(grads, [&](const std::string& n2, const std::vector<double>& g2) {
            if (n2 == name) gvec = &g2;
        });
        REQUIRE(gvec != nullptr);
        const size_t stride = std::max<size_t>(1, vec.size() / 7);
        FnoParams<double> scratch = FnoParams<double>::shaped(cfg);
        for (size_t k = 0; k < vec.size(); k += stride) {
            const double orig = vec[k];
            const double h = std::max(1e-5 * std::abs(orig), 1e-5);
            vec[k] = orig + h;
            const double lp = fno_loss_and_gradients(model, input, target, scratch);
            vec[k] = orig - h;
            const double lm = fno_loss_and_gradients(model, input, target, scratch);
            vec[k] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double scale = std::max({std::abs(fd), std::abs((*gvec)[k]), 1e-6});
            worst = std::max(worst, std::abs(fd - (*gvec)[k]) / scale);
        }
    });
    CHECK(worst < 1e-3);
}

TEST_CASE("adam closed forms") {
    FnoConfig cfg = tiny_config();
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.adam_eps = 1e-300;  // vanishing eps isolates the bias-corrected ratio

    SUBCASE("zero gradient leaves parameters unchanged") {
        FnoModel<double> model = to_double(fno_init<float>(cfg, 23));
        const FnoModel<double> before = model;
        AdamState<double> state = AdamState<double>::shaped(cfg);
        FnoParams<double> zero = FnoParams<double>::shaped(cfg);
        TrainConfig tc2;
        adam_step(model, zero, state, tc2);
        bool equal = true;
        visit_params(model.params, [&](const std::string& name, std::vector<double>& v) {
            visit_params(before.params, [&](const std::string& n2, const std::vector<double>& w) {
                if (n2 == name && v != w) equal = false;
            });
        });
        CHECK(equal);
    }
    SUBCASE("first step moves by exactly lr; two steps by 2 lr") {
        // Hand trace, g = 1 twice: both bias-corrected ratios are exactly 1.
        FnoModel<double> model{cfg, FnoParams<double>::shaped(cfg)};
        AdamState<double> state = AdamState<double>::shaped(cfg);
        FnoParams<double> ones = FnoParams<double>::shaped(cfg);
        visit_params(ones, [](const std::string&, std::vector<double>& v) {
            std::fill(v.begin(), v.end(), 1.0);
        });
        adam_step(model, ones, state, tc);
        CHECK(model.params.lift_w[0] == doctest::Approx(-0.1).epsilon(1e-12));
        adam_step(model, ones, state, tc);
        CHECK(model.params.lift_w[0] == doctest::Approx(-0.2).epsilon(1e-12));
        CHECK(state.t == 2);
    }
}

TEST_CASE("deterministic init, forward, and training") {
    const Grid g(16);
    FnoConfig cfg = tiny_config(4, 6);

    const FnoModel<float> m1 = fno_init<float>(cfg, 7);
    const FnoModel<float> m2 = fno_init<float>(cfg, 7);
    bool same = true;
    visit_params(m1.params, [&](const std::string& name, const std::vector<float>& v) {
        visit_params(m2.params, [&](const std::string& n2, const std::vector<float>& w) {
            if (n2 == name && v != w) same = false;
        });
    });
    CHECK(same);

    const auto input = random_batch<float>(g, 2, 6, 8);
    const auto o1 = fno_forward(m1, input);
    const auto o2 = fno_forward(m1, input);
    CHECK(o1.values == o2.values);

#ifdef _OPENMP
    // thread count must not change any bit of forward or gradients
    FnoParams<float> ga = FnoParams<float>::shaped(cfg), gb = FnoParams<float>::shaped(cfg);
    const auto target = random_batch<float>(g, 2, 1, 9);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto os = fno_forward(m1, input);
    const double la = fno_loss_and_gradients(m1, input, target, ga);
    omp_set_num_threads(saved > 1 ? saved : 2);
    const auto op = fno_forward(m1, input);
    const double lb = fno_loss_and_gradients(m1, input, target, gb);
    omp_set_num_threads(saved);
    CHECK(os.values == op.values);
    CHECK(la == lb);
    bool gsame = true;
    visit_params(ga, [&](const std::string& name, const std::vector<float>& v) {
        visit_params(gb, [&](const std::string& n2, const std::vector<float>& w) {
            if (n2 == name && v != w) gsame = false;
        });
    });
    CHECK(gsame);
#endif
}

TEST_CASE("training loop") {
    DatasetProvenance prov;
    prov.grid_n = 16;
    prov.master_seed = 7;
    prov.stream_base = 0;
    prov.count = 4;
    prov.iterations = 50;
    prov.boundary = b0_preset();
    prov.forcing = forcing_preset();
    const Dataset data = generate_dataset(prov);
    DatasetProvenance hp = prov;
    hp.stream_base = streams::kHoldoutBase;
    hp.count = 2;
    const Dataset holdout = generate_dataset(hp);

    FnoConfig cfg = tiny_config(8, 6);
    TrainConfig tc;
    tc.steps = 0;

    SUBCASE("zero steps returns the initialized model") {
        const FnoModel<float> trained =
            fno_train<float>(data, holdout, InputEncoding::kBoundaryAware, cfg, tc);
        const FnoModel<float> init = fno_init<float>(
            [&] { FnoConfig c = cfg; c.in_channels = 6; return c; }(), tc.seed);
        bool same = true;
        visit_params(trained.params, [&](const std::string& name, const std::vector<float>& v) {
            visit_params(init.params, [&](const std::string& n2, const std::vector<float>& w) {
                if (n2 == name && v != w) same = false;
            });
        });
        CHECK(same);
    }
    SUBCASE("fifty steps reduce the training loss") {
        TrainConfig tc2;
        tc2.steps = 50;
        tc2.batch_size = 2;
        tc2.log_every = 1;
        std::vector<TrainLogEntry> log;
        fno_train<float>(data, holdout, InputEncoding::kBoundaryAware, cfg, tc2, &log);
        REQUIRE(log.size() == 50);
        CHECK(log.back().train_mse < log.front().train_mse);
        CHECK(std::isfinite(log.back().holdout_rel_l2));
    }
    SUBCASE("same seed twice gives bitwise-identical parameters") {
        TrainConfig tc3;
        tc3.steps = 10;
        tc3.batch_size = 2;
        const FnoModel<float> a =
            fno_train<float>(data, holdout, InputEncoding::kAblated, cfg, tc3);
        const FnoModel<float> b =
            fno_train<float>(data, holdout, InputEncoding::kAblated, cfg, tc3);
        bool same = true;
        visit_params(a.params, [&](const std::string& name, const std::vector<float>& v) {
            visit_params(b.params, [&](const std::string& n2, const std::vector<float>& w) {
                if (n2 == name && v != w) same = false;
            });
        });
        CHECK(same);
    }
    SUBCASE("empty dataset is rejected") {
        Dataset empty;
        empty.grid = Grid(16);
        CHECK_THROWS_AS(
            fno_train<float>(empty, holdout, InputEncoding::kAblated, cfg, TrainConfig{}),
            std::invalid_argument);
    }
}
