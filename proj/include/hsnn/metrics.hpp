#pragma once

#include <string>
#include <vector>

namespace hsnn {

// Confusion matrix with rows = true class, columns = predicted class
// (0-based class indices; background is excluded upstream).
struct Metrics {
    int num_classes = 0;
    std::vector<std::int64_t> confusion;  // num_classes x num_classes, row-major
    double oa = 0.0;
    double aa = 0.0;
    double kappa = 0.0;

    std::int64_t at(int truth, int pred) const {
        return confusion[static_cast<std::size_t>(truth) * num_classes + pred];
    }
};

Metrics metrics_from_confusion(std::vector<std::int64_t> confusion, int num_classes);

// truth/pred hold 0-based class indices.
Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                        int num_classes);

std::string confusion_to_csv(const Metrics& m);

}  // namespace hsnn
