#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hem/matrix.hpp"

namespace hem {

/// One RGB frame stored as three channel planes of height x width values,
/// channel-major. Nominal value range is [0, 1].
struct Frame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;  // 3 * height * width

    Frame() = default;
    Frame(std::size_t h, std::size_t w) : height(h), width(w), values(3 * h * w, 0.0) {}

    double value(std::size_t channel, std::size_t y, std::size_t x) const {
        return values[(channel * height + y) * width + x];
    }
    double& value(std::size_t channel, std::size_t y, std::size_t x) {
        return values[(channel * height + y) * width + x];
    }
};

/// A clip of frames with uniform spatial dimensions.
struct FrameSequence {
    std::vector<Frame> frames;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

/// Which representation feeds the adjacent-frame cosine scores.
enum class SimilaritySource {
    raw_avgpool,      // per-channel spatial mean of the raw frame (default)
    feature_avgpool,  // mean over the token axis of each frame's d x p features
    feature_cls,      // first token column of each frame's features
};

/// One pooled vector per frame: length 3 for raw_avgpool, length d for the
/// feature sources.
struct PooledSequence {
    std::vector<std::vector<double>> vectors;

    std::size_t size() const { return vectors.size(); }
};

/// Adjacent-pair similarities: scores[i] = cosine(pooled[i], pooled[i+1]).
struct ScoreSequence {
    std::vector<double> scores;

    std::size_t size() const { return scores.size(); }
};

struct FrameRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open

    std::size_t size() const { return end - begin; }
    bool operator==(const FrameRange&) const = default;
};

/// K half-open, contiguous, covering ranges derived from K-1 split points.
struct EventPartition {
    std::vector<std::size_t> split_points;  // sorted, each in (0, T)
    std::vector<FrameRange> ranges;         // [0,b1), [b1,b2), ..., [b_{K-1},T)

    std::size_t event_count() const { return ranges.size(); }
};

/// Pools each frame down to one vector. The feature sources require one
/// d x p token matrix per frame and throw when none are provided.
PooledSequence pool_frames(const FrameSequence& video, SimilaritySource source,
                           const std::vector<Matrix>* features = nullptr);

/// scores[i] = cosine(vectors[i], vectors[i+1]). Requires at least two frames.
ScoreSequence adjacent_scores(const PooledSequence& pooled);

/// Positions of the k-1 lowest-similarity gaps, sorted ascending. A score at
/// index i cuts between frames i and i+1, so it maps to boundary i+1. Ties
/// break toward the smaller index.
std::vector<std::size_t> select_split_points(const ScoreSequence& scores, std::size_t k);

/// Splits [0, frame_count) at the given strictly increasing boundaries.
EventPartition partition(std::size_t frame_count, const std::vector<std::size_t>& boundaries);

/// Parses a config name: raw_avgpool/raw, feature_avgpool/feat_avg,
/// feature_cls/feat_cls.
SimilaritySource parse_similarity_source(const std::string& name);
const char* similarity_source_name(SimilaritySource source);

}  // namespace hem
