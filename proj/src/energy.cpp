#include "hsnn/energy.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"

namespace hsnn {

using nlohmann::json;

const char* op_kind_name(OpKind k) { return k == OpKind::mac ? "MAC" : "AC"; }

void EnergyConstants::validate() const {
    if (e_mac_32 <= 0 || e_ac_32 <= 0 || e_mac_6 <= 0 || e_ac_6 <= 0) {
        throw_config("energy constants must be positive");
    }
    const double ratio = e_mac_32 / e_ac_32;
    if (std::abs(ratio - 32.0) > 0.32) {
        throw_config("32-bit MAC/AC energy ratio must stay within 1% of 32, got " +
                     std::to_string(ratio));
    }
}

double op_energy(OpKind kind, int bits, const EnergyConstants& c) {
    c.validate();
    if (bits == 32) return kind == OpKind::mac ? c.e_mac_32 : c.e_ac_32;
    if (bits == 6) return kind == OpKind::mac ? c.e_mac_6 : c.e_ac_6;
    const double anchor = kind == OpKind::mac ? c.e_mac_32 : c.e_ac_32;
    const double exponent = kind == OpKind::mac ? c.mac_exponent : c.ac_exponent;
    return anchor * std::pow(static_cast<double>(bits) / 32.0, exponent);
}

double flops_layer(const LayerSpec& layer, const LayerIo& io) {
    switch (layer.kind) {
        case LayerKind::conv3d: {
            const auto& g = layer.conv3d;
            return static_cast<double>(g.kernel[0]) * g.kernel[1] * g.kernel[2] *
                   io.out_shape[1] * io.out_shape[2] * io.out_shape[3] * g.out_channels *
                   g.in_channels;
        }
        case LayerKind::conv2d: {
            const auto& g = layer.conv2d;
            return static_cast<double>(g.kernel[0]) * g.kernel[1] * io.out_shape[1] *
                   io.out_shape[2] * g.out_channels * g.in_channels;
        }
        case LayerKind::linear:
        case LayerKind::classifier:
            return static_cast<double>(layer.in_features) * layer.out_features;
        default:
            return 0.0;
    }
}

double flops_layer_snn(const LayerSpec& layer, const LayerIo& io, double zeta) {
    return flops_layer(layer, io) * zeta;
}

ActivityProfile measure_activity(const std::vector<SpikeRecord>& records) {
    if (records.empty()) throw_input("activity measurement needs at least one spike record");
    ActivityProfile p;
    p.layer_names = records[0].layer_names;
    p.timesteps = records[0].timesteps;
    p.samples = static_cast<int>(records.size());
    p.neurons.assign(p.layer_names.size(), 0);
    p.zeta.assign(p.layer_names.size(), 0.0);

    std::vector<double> spike_totals(p.layer_names.size(), 0.0);
    for (const SpikeRecord& rec : records) {
        if (rec.layer_names != p.layer_names || rec.timesteps != p.timesteps) {
            throw_input("spike records disagree on layers or timesteps");
        }
        for (std::size_t l = 0; l < rec.spikes.size(); ++l) {
            for (const Tensor& o : rec.spikes[l]) {
                p.neurons[l] = o.size();
                for (std::int64_t i = 0; i < o.size(); ++i) spike_totals[l] += o[i];
            }
        }
    }
    for (std::size_t l = 0; l < p.zeta.size(); ++l) {
        if (p.neurons[l] == 0) throw_input("spike record for layer " + p.layer_names[l] +
                                           " is empty");
        p.zeta[l] = spike_totals[l] /
                    (static_cast<double>(p.neurons[l]) * static_cast<double>(p.samples));
        if (p.zeta[l] < 0.0 || p.zeta[l] > static_cast<double>(p.timesteps)) {
            throw_internal("spiking activity outside [0, T] for layer " + p.layer_names[l]);
        }
    }
    return p;
}

std::string activity_profile_to_json(const ActivityProfile& p) {
    json j;
    j["timesteps"] = p.timesteps;
    j["samples"] = p.samples;
    j["layers"] = json::array();
    for (std::size_t l = 0; l < p.layer_names.size(); ++l) {
        j["layers"].push_back({{"name", p.layer_names[l]},
                               {"neurons", p.neurons[l]},
                               {"zeta", p.zeta[l]}});
    }
    return j.dump(2);
}

ActivityProfile activity_profile_from_json(const std::string& text) {
    try {
        json j = json::parse(text);
        ActivityProfile p;
        p.timesteps = j.at("timesteps").get<int>();
        p.samples = j.at("samples").get<int>();
        for (const json& lj : j.at("layers")) {
            p.layer_names.push_back(lj.at("name").get<std::string>());
            p.neurons.push_back(lj.at("neurons").get<std::int64_t>());
            p.zeta.push_back(lj.at("zeta").get<double>());
        }
        return p;
    } catch (const json::exception& e) {
        throw_input("invalid activity profile JSON: " + std::string(e.what()));
    }
}

EnergyReport energy_totals(const NetworkSpec& spec, const ActivityProfile& profile, int ann_bits,
                           int snn_bits, const EnergyConstants& c) {
    c.validate();
    const auto io = propagate_shapes(spec);

    EnergyReport r;
    r.ann_bits = ann_bits;
    r.snn_bits = snn_bits;
    const double e_mac_ann = op_energy(OpKind::mac, ann_bits, c);
    const double e_mac_32 = op_energy(OpKind::mac, 32, c);
    const double e_mac_q = op_energy(OpKind::mac, snn_bits, c);
    const double e_mac_snn = op_energy(OpKind::mac, snn_bits, c);
    const double e_ac_snn = op_energy(OpKind::ac, snn_bits, c);

    // zeta entering each parameterized layer: the most recent spiking layer's
    // activity from the profile.
    double last_zeta = 1.0;
    std::size_t profile_idx = 0;
    bool first_param = true;
    double f_ann_total = 0.0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (!layer.has_weights()) continue;
        EnergyLayerRow row;
        row.name = layer.name;
        row.f_ann = flops_layer(layer, io[i]);
        f_ann_total += row.f_ann;
        if (first_param) {
            row.zeta = 1.0;
            row.f_snn = row.f_ann;
            row.snn_op = OpKind::mac;  // analog input consumed at the first layer
            row.e_snn_pj = row.f_snn * e_mac_snn;
            first_param = false;
        } else {
            row.zeta = last_zeta;
            row.f_snn = row.f_ann * row.zeta;
            row.snn_op = OpKind::ac;
            row.e_snn_pj = row.f_snn * e_ac_snn;
        }
        row.e_ann_pj = row.f_ann * e_mac_ann;
        r.layers.push_back(row);

        if (layer.is_spiking()) {
            if (profile_idx >= profile.zeta.size() ||
                profile.layer_names[profile_idx] != layer.name) {
                throw_input("activity profile is missing layer " + layer.name);
            }
            last_zeta = profile.zeta[profile_idx];
            ++profile_idx;
        }
    }

    r.e_ann_pj = f_ann_total * e_mac_ann;
    r.e_ann_32_pj = f_ann_total * e_mac_32;
    r.e_ann_q_pj = f_ann_total * e_mac_q;
    for (const auto& row : r.layers) r.e_snn_pj += row.e_snn_pj;

    // Alternative accounting where the classifier is charged with MACs.
    r.e_snn_all_mac_first_last_pj = r.e_snn_pj;
    if (!r.layers.empty() && r.layers.back().snn_op == OpKind::ac) {
        r.e_snn_all_mac_first_last_pj +=
            r.layers.back().f_snn * (e_mac_snn - e_ac_snn);
    }

    r.ratio_ann32_over_snn = r.e_ann_32_pj / r.e_snn_pj;
    r.ratio_annq_over_snn = r.e_ann_q_pj / r.e_snn_pj;
    return r;
}

static std::string sig4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string energy_report_to_json(const EnergyReport& r) {
    json j;
    j["ann_bits"] = r.ann_bits;
    j["snn_bits"] = r.snn_bits;
    j["e_ann_pj"] = r.e_ann_pj;
    j["e_ann_32_pj"] = r.e_ann_32_pj;
    j["e_ann_quantized_pj"] = r.e_ann_q_pj;
    j["e_snn_pj"] = r.e_snn_pj;
    j["e_snn_classifier_mac_pj"] = r.e_snn_all_mac_first_last_pj;
    j["ratio_ann32_over_snn"] = r.ratio_ann32_over_snn;
    j["ratio_ann_quantized_over_snn"] = r.ratio_annq_over_snn;
    j["layers"] = json::array();
    for (const auto& row : r.layers) {
        j["layers"].push_back({{"name", row.name},
                               {"f_ann", row.f_ann},
                               {"f_snn", row.f_snn},
                               {"zeta", row.zeta},
                               {"op_kind", op_kind_name(row.snn_op)},
                               {"e_ann_pj", row.e_ann_pj},
                               {"e_snn_pj", row.e_snn_pj}});
    }
    return j.dump(2);
}

std::string energy_report_to_csv(const EnergyReport& r) {
    std::string out = "name,f_ann,f_snn,zeta,op_kind,e_pj\n";
    for (const auto& row : r.layers) {
        out += row.name + "," + sig4(row.f_ann) + "," + sig4(row.f_snn) + "," + sig4(row.zeta) +
               "," + op_kind_name(row.snn_op) + "," + sig4(row.e_snn_pj) + "\n";
    }
    return out;
}

}  // namespace hsnn
