#include <doctest.h>

#include "hsnn/error.hpp"
#include "hsnn/neuron.hpp"
#include "oracle/helpers.hpp"

using namespace hsnn;

TEST_SUITE("neuron") {

TEST_CASE("lif recurrence hand simulation") {
    LifLayerState state({1});
    LifParams p{1.0, 1.0};
    Tensor drive({1}, std::vector<double>{0.6});

    auto s1 = lif_step(state, drive, p);
    CHECK(state.u[0] == doctest::Approx(0.6));
    CHECK(s1.spikes[0] == 0.0);

    auto s2 = lif_step(state, drive, p);
    CHECK(state.u[0] == doctest::Approx(1.2));
    CHECK(s2.spikes[0] == 1.0);

    auto s3 = lif_step(state, drive, p);
    CHECK(state.u[0] == doctest::Approx(0.8));  // 1.2 + 0.6 - 1 (soft reset)
    CHECK(s3.spikes[0] == 0.0);
}

TEST_CASE("pure leak") {
    LifLayerState state({1});
    state.u[0] = 1.0;
    auto out = lif_step(state, Tensor({1}), LifParams{0.5, 1.0});
    CHECK(state.u[0] == doctest::Approx(0.5));
    CHECK(out.spikes[0] == 0.0);
}

TEST_CASE("threshold boundary is strict") {
    LifLayerState state({1});
    auto out = lif_step(state, Tensor({1}, std::vector<double>{1.0}), LifParams{1.0, 1.0});
    CHECK(out.z[0] == doctest::Approx(0.0));
    CHECK(out.spikes[0] == 0.0);
}

TEST_CASE("lif rejects non-positive thresholds") {
    LifLayerState state({1});
    CHECK_THROWS_AS(lif_step(state, Tensor({1}), LifParams{1.0, 0.0}), Error);
    CHECK_THROWS_AS(lif_step(state, Tensor({1}), LifParams{1.0, -2.0}), Error);
}

TEST_CASE("if step carries surplus through soft reset") {
    LifLayerState state({1});
    auto s1 = if_step(state, Tensor({1}, std::vector<double>{2.1}), 1.0);
    CHECK(state.u[0] == doctest::Approx(2.1));
    CHECK(s1.spikes[0] == 1.0);
    auto s2 = if_step(state, Tensor({1}), 1.0);
    CHECK(state.u[0] == doctest::Approx(1.1));
    CHECK(s2.spikes[0] == 1.0);
}

TEST_CASE("if equals lif with unit leak") {
    Rng rng(61);
    LifLayerState a({8}), b({8});
    for (int t = 0; t < 20; ++t) {
        Tensor drive = oracle::random_tensor({8}, rng);
        Tensor drive_copy = drive;
        auto ra = if_step(a, drive, 0.7);
        auto rb = lif_step(b, drive_copy, LifParams{1.0, 0.7});
        for (std::int64_t i = 0; i < 8; ++i) {
            CHECK(a.u[i] == b.u[i]);
            CHECK(ra.spikes[i] == rb.spikes[i]);
        }
    }
}

TEST_CASE("zero input leaves if state unchanged") {
    LifLayerState state({4});
    state.u[1] = 0.3;
    Tensor before = state.u;
    if_step(state, Tensor({4}), 1.0);
    for (std::int64_t i = 0; i < 4; ++i) CHECK(state.u[i] == before[i]);
}

TEST_CASE("output accumulation") {
    Tensor u({3});
    Tensor drive({3}, std::vector<double>{0.2, -0.1, 0.5});
    for (int t = 0; t < 5; ++t) output_accumulate(u, drive);
    CHECK(u[0] == doctest::Approx(1.0));
    CHECK(u[1] == doctest::Approx(-0.5));
    CHECK(u[2] == doctest::Approx(2.5));

    Tensor before = u;
    output_accumulate(u, Tensor({3}));
    for (std::int64_t i = 0; i < 3; ++i) CHECK(u[i] == before[i]);

    // exact summation oracle on random drives
    Rng rng(67);
    Tensor acc({6});
    Tensor expected({6});
    for (int t = 0; t < 9; ++t) {
        Tensor d = oracle::random_tensor({6}, rng);
        output_accumulate(acc, d);
        for (std::int64_t i = 0; i < 6; ++i) expected[i] += d[i];
    }
    for (std::int64_t i = 0; i < 6; ++i) CHECK(acc[i] == expected[i]);
}

TEST_CASE("direct encoding presents the same tensor each step") {
    Rng rng(71);
    Tensor patch = oracle::random_tensor({1, 8, 3, 3}, rng);
    Tensor enc = direct_encode(patch, 5);
    for (std::int64_t i = 0; i < patch.size(); ++i) CHECK(enc[i] == patch[i]);
    Tensor enc1 = direct_encode(patch, 1);
    for (std::int64_t i = 0; i < patch.size(); ++i) CHECK(enc1[i] == patch[i]);
    CHECK_THROWS_AS(direct_encode(patch, 0), Error);

    QuantParams p = calibrate_params(patch, 6, QuantScheme::affine);
    Tensor encq = direct_encode(patch, 5, &p);
    Tensor fq = fake_quantize(patch, p);
    for (std::int64_t i = 0; i < patch.size(); ++i) CHECK(encq[i] == fq[i]);
}

TEST_CASE("binary spikes") {
    Rng rng(73);
    LifLayerState state({32});
    for (int t = 0; t < 50; ++t) {
        auto out = lif_step(state, oracle::random_tensor({32}, rng, -1.0, 2.0),
                            LifParams{0.9, 0.8});
        for (std::int64_t i = 0; i < out.spikes.size(); ++i) {
            CHECK((out.spikes[i] == 0.0 || out.spikes[i] == 1.0));
        }
    }
}

TEST_CASE("soft reset conserves charge with unit leak and no input") {
    Rng rng(79);
    for (int trial = 0; trial < 10; ++trial) {
        const double v = rng.uniform(0.5, 1.5);
        LifLayerState state({16});
        for (std::int64_t i = 0; i < 16; ++i) state.u[i] = rng.uniform(0.0, 6.0);
        Tensor reset_applied({16});  // spikes whose reset the state has absorbed
        std::vector<double> initial(state.u.values());

        for (int t = 0; t < 12; ++t) {
            auto out = if_step(state, Tensor({16}), v);
            for (std::int64_t i = 0; i < 16; ++i) {
                CHECK(state.u[i] + v * reset_applied[i] ==
                      doctest::Approx(initial[static_cast<std::size_t>(i)]).epsilon(1e-12));
            }
            // a spike's reset lands on the next step
            for (std::int64_t i = 0; i < 16; ++i) reset_applied[i] += out.spikes[i];
        }
    }
}

TEST_CASE("joint scaling of threshold, state, and drive preserves spikes") {
    Rng rng(83);
    const double c = 3.7;
    LifLayerState a({8}), b({8});
    for (std::int64_t i = 0; i < 8; ++i) {
        a.u[i] = rng.uniform(0.0, 1.0);
        b.u[i] = c * a.u[i];
    }
    LifParams pa{0.85, 0.9};
    LifParams pb{0.85, c * 0.9};
    for (int t = 0; t < 30; ++t) {
        Tensor drive = oracle::random_tensor({8}, rng, -0.5, 1.0);
        Tensor scaled(drive.shape());
        for (std::int64_t i = 0; i < 8; ++i) scaled[i] = c * drive[i];
        auto ra = lif_step(a, drive, pa);
        auto rb = lif_step(b, scaled, pb);
        for (std::int64_t i = 0; i < 8; ++i) CHECK(ra.spikes[i] == rb.spikes[i]);
    }
}

TEST_CASE("membrane quantization keeps the update consistent") {
    LifLayerState state({4});
    Tensor drive({4}, std::vector<double>{0.31, 0.62, -0.47, 1.03});
    LifStepOptions opts;
    opts.potential_bits = 6;
    auto out = lif_step(state, drive, LifParams{1.0, 1.0}, opts);
    // potentials sit on the 6-bit scale grid afterwards
    QuantParams p = calibrate_params(state.u, 6, QuantScheme::scale);
    Tensor requant = fake_quantize(state.u, p);
    for (std::int64_t i = 0; i < 4; ++i) {
        CHECK(requant[i] == doctest::Approx(state.u[i]).epsilon(1e-12));
        CHECK(out.z[i] == doctest::Approx(state.u[i] / 1.0 - 1.0));
    }
}

}  // TEST_SUITE
