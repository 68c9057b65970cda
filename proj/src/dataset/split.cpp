#include "herb/dataset/split.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "herb/common/rng.hpp"

namespace herb::dataset {

namespace {

std::size_t round_half_down(double x) {
    return static_cast<std::size_t>(std::ceil(x - 0.5));
}

}  // namespace

void check_split_spec(const SplitSpec& spec) {
    double sum = 0.0;
    for (double r : spec.ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("split ratios must be non-negative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios sum to " + std::to_string(sum) + ", expected 1");
    }
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
    SplitCounts counts;
    counts.validation = round_half_down(spec.ratios[1] * static_cast<double>(n));
    counts.test = round_half_down(spec.ratios[2] * static_cast<double>(n));
    counts.train = n - counts.validation - counts.test;
    return counts;
}

DatasetManifest stratified_split(const DatasetManifest& manifest, const SplitSpec& spec) {
    check_split_spec(spec);

    std::size_t minimum = 0;
    for (double r : spec.ratios) minimum += r > 0.0 ? 1 : 0;

    std::unordered_map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& label = manifest.records[i].class_label;
        if (!manifest.class_index(label)) {
            throw std::invalid_argument("record '" + manifest.records[i].id + "' has undeclared label '" + label + "'");
        }
        members[label].push_back(i);
    }

    DatasetManifest out = manifest;
    for (const auto& label : manifest.classes) {
        auto& idx = members[label];
        if (idx.size() < minimum) {
            throw std::invalid_argument("class '" + label + "' has " + std::to_string(idx.size()) +
                                        " records; at least " + std::to_string(minimum) + " required");
        }
        Rng rng(spec.seed, stream_id(label));
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.below(i)]);
        }
        const auto counts = split_counts(idx.size(), spec);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            Split s = Split::test;
            if (k < counts.train) {
                s = Split::train;
            } else if (k < counts.train + counts.validation) {
                s = Split::validation;
            }
            out.records[idx[k]].split = s;
        }
    }
    out.recount();
    return out;
}

SplitCounts tally(const DatasetManifest& manifest) {
    SplitCounts c;
    for (const auto& r : manifest.records) {
        switch (r.split) {
            case Split::train: ++c.train; break;
            case Split::validation: ++c.validation; break;
            case Split::test: ++c.test; break;
            case Split::unassigned: break;
        }
    }
    return c;
}

}  // namespace herb::dataset
