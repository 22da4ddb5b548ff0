#pragma once

#include "hsnn/network.hpp"

namespace hsnn {

enum class OpKind { mac, ac };

const char* op_kind_name(OpKind k);

// Per-operation energies in picojoules, anchored at 32 and 6 bits; other bit
// widths scale from the 32-bit anchor with the configured exponents.
struct EnergyConstants {
    double e_mac_32 = 3.2;
    double e_ac_32 = 0.1;
    double e_mac_6 = 0.26;
    double e_ac_6 = 0.02;
    double mac_exponent = 1.25;
    double ac_exponent = 1.0;

    void validate() const;
};

double op_energy(OpKind kind, int bits, const EnergyConstants& c = {});

// Multiply-accumulate count of one layer; pooling and comparisons are not
// charged. zeta scales the count for the spiking variant.
double flops_layer(const LayerSpec& layer, const LayerIo& io);
double flops_layer_snn(const LayerSpec& layer, const LayerIo& io, double zeta);

struct ActivityProfile {
    std::vector<std::string> layer_names;  // spiking layers, network order
    std::vector<double> zeta;              // average spikes per neuron over T steps
    std::vector<std::int64_t> neurons;
    int timesteps = 0;
    int samples = 0;
};

// zeta_l = total spikes over all samples and steps / (neurons * samples).
ActivityProfile measure_activity(const std::vector<SpikeRecord>& per_sample_records);

std::string activity_profile_to_json(const ActivityProfile& p);
ActivityProfile activity_profile_from_json(const std::string& text);

struct EnergyLayerRow {
    std::string name;
    double f_ann = 0.0;
    double f_snn = 0.0;   // what the SNN charges: full count for layer 1, zeta-scaled after
    double zeta = 0.0;    // activity of the spike stream entering the layer (1 for layer 1)
    OpKind snn_op = OpKind::ac;
    double e_ann_pj = 0.0;
    double e_snn_pj = 0.0;
};

struct EnergyReport {
    std::vector<EnergyLayerRow> layers;
    int ann_bits = 32;
    int snn_bits = 6;
    double e_ann_pj = 0.0;      // at ann_bits
    double e_ann_32_pj = 0.0;   // full-precision reference
    double e_ann_q_pj = 0.0;    // at snn_bits
    double e_snn_pj = 0.0;      // first layer MAC, the rest AC
    double e_snn_all_mac_first_last_pj = 0.0;  // alternative: classifier charged as MAC
    double ratio_ann32_over_snn = 0.0;
    double ratio_annq_over_snn = 0.0;
};

// The SNN charges layer 1 at full count with MACs (direct coding consumes the
// analog input once) and every later parameterized layer at zeta-scaled
// counts with ACs. Each later layer is bound to the activity of the spiking
// layer feeding it.
EnergyReport energy_totals(const NetworkSpec& spec, const ActivityProfile& profile, int ann_bits,
                           int snn_bits, const EnergyConstants& c = {});

std::string energy_report_to_json(const EnergyReport& r);
std::string energy_report_to_csv(const EnergyReport& r);

}  // namespace hsnn
