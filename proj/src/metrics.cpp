#include "hsnn/metrics.hpp"

#include "hsnn/error.hpp"

namespace hsnn {

Metrics metrics_from_confusion(std::vector<std::int64_t> confusion, int num_classes) {
    if (num_classes < 1 ||
        confusion.size() != static_cast<std::size_t>(num_classes) * num_classes) {
        throw_input("confusion matrix size does not match class count");
    }
    Metrics m;
    m.num_classes = num_classes;
    m.confusion = std::move(confusion);

    std::int64_t total = 0, diag = 0;
    std::vector<std::int64_t> row(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::int64_t> col(static_cast<std::size_t>(num_classes), 0);
    for (int t = 0; t < num_classes; ++t) {
        for (int p = 0; p < num_classes; ++p) {
            const std::int64_t v = m.at(t, p);
            total += v;
            row[static_cast<std::size_t>(t)] += v;
            col[static_cast<std::size_t>(p)] += v;
            if (t == p) diag += v;
        }
    }
    if (total == 0) throw_input("confusion matrix is empty");

    m.oa = static_cast<double>(diag) / static_cast<double>(total);

    double recall_sum = 0.0;
    int supported = 0;
    for (int t = 0; t < num_classes; ++t) {
        if (row[static_cast<std::size_t>(t)] == 0) continue;
        recall_sum += static_cast<double>(m.at(t, t)) /
                      static_cast<double>(row[static_cast<std::size_t>(t)]);
        ++supported;
    }
    m.aa = supported ? recall_sum / supported : 0.0;

    double pe = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        pe += static_cast<double>(row[static_cast<std::size_t>(k)]) *
              static_cast<double>(col[static_cast<std::size_t>(k)]);
    }
    pe /= static_cast<double>(total) * static_cast<double>(total);
    m.kappa = pe < 1.0 ? (m.oa - pe) / (1.0 - pe) : 1.0;
    return m;
}

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                        int num_classes) {
    if (truth.size() != pred.size()) throw_input("truth and prediction lengths differ");
    if (truth.empty()) throw_input("cannot compute metrics on an empty set");
    std::vector<std::int64_t> confusion(static_cast<std::size_t>(num_classes) * num_classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes) {
            throw_input("class index out of range at sample " + std::to_string(i));
        }
        ++confusion[static_cast<std::size_t>(truth[i]) * num_classes + pred[i]];
    }
    return metrics_from_confusion(std::move(confusion), num_classes);
}

std::string confusion_to_csv(const Metrics& m) {
    std::string out = "true\\pred";
    for (int p = 0; p < m.num_classes; ++p) out += "," + std::to_string(p + 1);
    out += "\n";
    for (int t = 0; t < m.num_classes; ++t) {
        out += std::to_string(t + 1);
        for (int p = 0; p < m.num_classes; ++p) out += "," + std::to_string(m.at(t, p));
        out += "\n";
    }
    return out;
}

}  // namespace hsnn
