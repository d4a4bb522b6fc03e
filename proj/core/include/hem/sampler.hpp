#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hem {

/// Batched sampling request for the two-event case: every batch item shares
/// the frame count T but carries its own boundary in (0, T).
struct SampleRequest {
    std::size_t total_frames = 0;
    std::vector<std::size_t> split_points;  // one per batch item

    void validate() const;
};

struct SampleItem {
    std::vector<std::size_t> segment1;  // indices in [0, split]
    std::vector<std::size_t> segment2;  // indices in [split, T-1]
};

/// Per-item index lists with batch-uniform per-segment lengths.
struct SamplePlan {
    std::vector<SampleItem> items;
};

enum class SamplingScheme {
    scheme1 = 1,  // pad both segments to the batch-wide maximum segment size
    scheme2 = 2,  // sample round(mean boundary) frames from each segment
};

/// Midpoint sampling of `count` indices over the closed range [first, last]:
/// index_k = first + floor((k + 0.5) * L / count) with L = last - first + 1.
/// Non-decreasing; indices repeat when count exceeds the range length.
std::vector<std::size_t> uniform_sampling(std::size_t first, std::size_t last, std::size_t count);

SamplePlan sample_scheme1(const SampleRequest& req);
SamplePlan sample_scheme2(const SampleRequest& req);
SamplePlan sample(const SampleRequest& req, SamplingScheme scheme);

SamplingScheme parse_sampling_scheme(const std::string& name);

}  // namespace hem
