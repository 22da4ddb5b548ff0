#include <doctest.h>

#include "hsnn/error.hpp"
#include "hsnn/network.hpp"
#include "oracle/helpers.hpp"
#include "oracle/naive_snn.hpp"

using namespace hsnn;

using oracle::two_layer_spec;

TEST_SUITE("network") {

TEST_CASE("cnn3d shape propagation on Indian Pines bands") {
    NetworkSpec spec = build_cnn3d(220, 16);
    auto io = propagate_shapes(spec);
    CHECK(io[0].out_shape == std::vector<int>{20, 218, 3, 3});
    CHECK(io[1].out_shape == std::vector<int>{40, 109, 3, 3});
    CHECK(io[2].out_shape == std::vector<int>{84, 109, 1, 1});
    CHECK(io[3].out_shape == std::vector<int>{84, 55, 1, 1});
    CHECK(io[4].out_shape == std::vector<int>{84, 55, 1, 1});
    CHECK(io[5].out_shape == std::vector<int>{84, 28, 1, 1});
    CHECK(spec.layers.back().out_features == 16);
    CHECK(spec.layers.back().in_features == 84 * 28);

    // layer-1 weight count 20*1*3*3*3
    CHECK(shape_volume(layer_weight_shape(spec.layers[0])) == 540);
}

TEST_CASE("cnn3d builds for Pavia bands and rejects short spectra") {
    NetworkSpec spec = build_cnn3d(103, 9);
    CHECK(propagate_shapes(spec).size() == spec.layers.size());
    CHECK_THROWS_AS(build_cnn3d(8, 4), Error);
}

TEST_CASE("cnn32h spectral fold and adaptations") {
    NetworkSpec spec = build_cnn32h(220, 16);
    auto io = propagate_shapes(spec);
    CHECK(io[0].out_shape == std::vector<int>{90, 29, 1, 1});  // floor((220-18)/7)+1
    CHECK(io[1].folded);
    CHECK(io[1].in_shape == std::vector<int>{90 * 29, 1, 1});  // 2610 channels
    int dropout_layers = 0;
    for (const auto& layer : spec.layers) {
        if (layer.kind == LayerKind::dropout) {
            ++dropout_layers;
            CHECK(layer.dropout_rate == doctest::Approx(0.2));
        }
    }
    CHECK(dropout_layers == 1);
    CHECK(!spec.build_notes.empty());  // padding/pooling adaptations are logged
}

TEST_CASE("parameter shapes are deterministic across rebuilds") {
    NetworkSpec a = build_cnn3d(64, 5);
    NetworkSpec b = build_cnn3d(64, 5);
    REQUIRE(a.layers.size() == b.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(layer_weight_shape(a.layers[i]) == layer_weight_shape(b.layers[i]));
    }
    CHECK(parameter_count(a) == parameter_count(b));
}

TEST_CASE("spec JSON reload equality") {
    NetworkSpec spec = build_cnn32h(64, 7);
    spec.mode = NetworkMode::snn;
    spec.timesteps = 5;
    const std::string text = network_spec_to_json(spec);
    NetworkSpec back = network_spec_from_json(text);
    CHECK(network_spec_to_json(back) == text);
    CHECK_THROWS_AS(network_spec_from_json("{not json"), Error);
}

TEST_CASE("ann forward zero weights give zero logits") {
    NetworkSpec spec = build_cnn3d(16, 3);
    NetworkWeights w;
    w.tensors.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].has_weights()) w.tensors[i] = Tensor(layer_weight_shape(spec.layers[i]));
    }
    Rng rng(89);
    Tensor patch = oracle::random_tensor({1, 16, 5, 5}, rng);
    Tensor logits = ann_forward(spec, w, patch);
    for (std::int64_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == 0.0);

    std::vector<LifParams> lif(spiking_layer_indices(spec).size(), LifParams{1.0, 1.0});
    SnnOptions opts;
    opts.timesteps = 3;
    auto out = snn_forward(spec, w, lif, patch, opts);
    for (std::int64_t i = 0; i < out.potentials.size(); ++i) CHECK(out.potentials[i] == 0.0);
}

TEST_CASE("snn T=1 with low thresholds spikes every driven neuron") {
    NetworkSpec spec = two_layer_spec(2, 2, 2);
    NetworkWeights w;
    w.tensors.resize(2);
    w.tensors[0] = Tensor({2, 2}, std::vector<double>{1.0, 0.0, 0.0, 1.0});
    w.tensors[1] = Tensor({2, 2}, std::vector<double>{1.0, 0.0, 0.0, 1.0});
    std::vector<LifParams> lif{LifParams{1.0, 1e-3}};
    Tensor patch({1, 2, 1, 1}, std::vector<double>{0.5, 0.8});
    SnnOptions opts;
    opts.timesteps = 1;
    opts.record_spikes = true;
    auto out = snn_forward(spec, w, lif, patch, opts);
    CHECK(out.record.spikes[0][0][0] == 1.0);
    CHECK(out.record.spikes[0][0][1] == 1.0);
    CHECK(out.potentials[0] == doctest::Approx(1.0));
    CHECK(out.potentials[1] == doctest::Approx(1.0));
}

TEST_CASE("spike record covers every hidden layer and step") {
    NetworkSpec spec = build_cnn3d(16, 3);
    Rng rng(97);
    NetworkWeights w = init_weights(spec, rng);
    std::vector<LifParams> lif(spiking_layer_indices(spec).size(), LifParams{1.0, 0.5});
    Tensor patch = oracle::random_tensor({1, 16, 5, 5}, rng);
    SnnOptions opts;
    opts.timesteps = 4;
    opts.record_spikes = true;
    auto out = snn_forward(spec, w, lif, patch, opts);
    REQUIRE(out.record.spikes.size() == 6);
    auto io = propagate_shapes(spec);
    auto spiking = spiking_layer_indices(spec);
    for (std::size_t l = 0; l < out.record.spikes.size(); ++l) {
        REQUIRE(out.record.spikes[l].size() == 4);
        for (const Tensor& o : out.record.spikes[l]) {
            CHECK(o.shape() == io[static_cast<std::size_t>(spiking[l])].out_shape);
            for (std::int64_t i = 0; i < o.size(); ++i) {
                CHECK((o[i] == 0.0 || o[i] == 1.0));
            }
        }
    }
}

TEST_CASE("snn forward matches the naive simulator exactly") {
    Rng rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        const int n_in = 3 + static_cast<int>(rng.next_below(5));
        const int n_hidden = 4 + static_cast<int>(rng.next_below(8));
        const int n_out = 2 + static_cast<int>(rng.next_below(3));

        oracle::TwoLayerNet net;
        net.n_in = n_in;
        net.n_hidden = n_hidden;
        net.n_out = n_out;
        net.leak = rng.uniform(0.5, 1.0);
        net.threshold = rng.uniform(0.3, 1.2);
        for (int i = 0; i < n_hidden * n_in; ++i) net.w1.push_back(rng.uniform(-1.0, 1.0));
        for (int i = 0; i < n_out * n_hidden; ++i) net.w2.push_back(rng.uniform(-1.0, 1.0));
        std::vector<double> input;
        for (int i = 0; i < n_in; ++i) input.push_back(rng.uniform(0.0, 1.0));

        NetworkSpec spec = two_layer_spec(n_in, n_hidden, n_out);
        NetworkWeights w;
        w.tensors.resize(2);
        w.tensors[0] = Tensor({n_hidden, n_in}, net.w1);
        w.tensors[1] = Tensor({n_out, n_hidden}, net.w2);
        std::vector<LifParams> lif{LifParams{net.leak, net.threshold}};
        Tensor patch = Tensor({1, n_in, 1, 1}, input);

        SnnOptions opts;
        opts.timesteps = 100;
        opts.record_spikes = true;
        auto ours = snn_forward(spec, w, lif, patch, opts);
        auto reference = oracle::simulate(net, input, 100);

        for (int k = 0; k < n_out; ++k) {
            CHECK(ours.potentials[k] == reference.potentials[static_cast<std::size_t>(k)]);
        }
        for (int t = 0; t < 100; ++t) {
            for (int h = 0; h < n_hidden; ++h) {
                CHECK(ours.record.spikes[0][static_cast<std::size_t>(t)][h] ==
                      reference.hidden_spikes[static_cast<std::size_t>(t)]
                                             [static_cast<std::size_t>(h)]);
            }
        }
    }
}

TEST_CASE("snn forward is deterministic") {
    NetworkSpec spec = build_cnn32h(32, 4);
    spec.mode = NetworkMode::snn;
    Rng rng(103);
    NetworkWeights w = init_weights(spec, rng);
    std::vector<LifParams> lif(spiking_layer_indices(spec).size(), LifParams{0.9, 0.4});
    Tensor patch = oracle::random_tensor({1, 32, 3, 3}, rng);

    SnnOptions opts;
    opts.timesteps = 5;
    opts.training = true;
    opts.record_spikes = true;
    Rng d1(7), d2(7);
    opts.dropout_rng = &d1;
    auto a = snn_forward(spec, w, lif, patch, opts);
    opts.dropout_rng = &d2;
    auto b = snn_forward(spec, w, lif, patch, opts);
    for (std::int64_t i = 0; i < a.potentials.size(); ++i) {
        CHECK(a.potentials[i] == b.potentials[i]);
    }
}

TEST_CASE("lif parameter count must match the spiking layers") {
    NetworkSpec spec = two_layer_spec(4, 6, 3);
    NetworkWeights w;
    w.tensors.resize(2);
    w.tensors[0] = Tensor({6, 4});
    w.tensors[1] = Tensor({3, 6});
    SnnOptions opts;
    opts.timesteps = 2;
    CHECK_THROWS_AS(snn_forward(spec, w, {}, Tensor({1, 4, 1, 1}), opts), Error);
}

TEST_CASE("networks must end in a classifier of matching width") {
    NetworkSpec spec = two_layer_spec(4, 6, 3);
    spec.num_classes = 5;
    CHECK_THROWS_AS(propagate_shapes(spec), Error);
    spec.num_classes = 3;
    spec.layers.pop_back();
    CHECK_THROWS_AS(propagate_shapes(spec), Error);
}

}  // TEST_SUITE
