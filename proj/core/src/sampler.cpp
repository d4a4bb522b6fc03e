#include "hem/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace hem {

void SampleRequest::validate() const {
    if (split_points.empty()) {
        throw std::invalid_argument("sample request: empty batch");
    }
    for (std::size_t p : split_points) {
        if (p == 0 || p >= total_frames) {
            throw std::invalid_argument("sample request: split point " + std::to_string(p) +
                                        " is not strictly inside (0," +
                                        std::to_string(total_frames) + ")");
        }
    }
}

std::vector<std::size_t> uniform_sampling(std::size_t first, std::size_t last,
                                          std::size_t count) {
    if (first > last) {
        throw std::invalid_argument("uniform_sampling: empty range [" + std::to_string(first) +
                                    "," + std::to_string(last) + "]");
    }
    if (count == 0) {
        throw std::invalid_argument("uniform_sampling: sample count must be at least 1");
    }
    const std::uint64_t len = last - first + 1;
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        // floor((k + 0.5) * len / count) done in exact integer arithmetic
        const std::uint64_t offset = (2 * k + 1) * len / (2 * count);
        out.push_back(std::min(first + offset, last));
    }
    return out;
}

SamplePlan sample_scheme1(const SampleRequest& req) {
    req.validate();
    // shared lengths: the largest left segment (boundary frame inclusive) and
    // the largest right segment across the batch
    std::size_t s1 = 0;
    std::size_t s2 = 0;
    for (std::size_t p : req.split_points) {
        s1 = std::max(s1, p + 1);
        s2 = std::max(s2, req.total_frames - p);
    }
    SamplePlan plan;
    plan.items.reserve(req.split_points.size());
    for (std::size_t p : req.split_points) {
        SampleItem item;
        item.segment1 = uniform_sampling(0, p, s1);
        item.segment2 = uniform_sampling(p, req.total_frames - 1, s2);
        plan.items.push_back(std::move(item));
    }
    return plan;
}

SamplePlan sample_scheme2(const SampleRequest& req) {
    req.validate();
    double sum = 0.0;
    for (std::size_t p : req.split_points) {
        sum += static_cast<double>(p);
    }
    const auto avg = static_cast<std::size_t>(
        std::llround(sum / static_cast<double>(req.split_points.size())));
    if (avg == 0) {
        throw std::invalid_argument("sample_scheme2: average boundary rounds to zero");
    }
    SamplePlan plan;
    plan.items.reserve(req.split_points.size());
    for (std::size_t p : req.split_points) {
        SampleItem item;
        item.segment1 = uniform_sampling(0, p, avg);
        item.segment2 = uniform_sampling(p, req.total_frames - 1, avg);
        plan.items.push_back(std::move(item));
    }
    return plan;
}

SamplePlan sample(const SampleRequest& req, SamplingScheme scheme) {
    return scheme == SamplingScheme::scheme1 ? sample_scheme1(req) : sample_scheme2(req);
}

SamplingScheme parse_sampling_scheme(const std::string& name) {
    if (name == "1" || name == "scheme1") {
        return SamplingScheme::scheme1;
    }
    if (name == "2" || name == "scheme2") {
        return SamplingScheme::scheme2;
    }
    throw std::invalid_argument("unknown sampling scheme: " + name);
}

}  // namespace hem
