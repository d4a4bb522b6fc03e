#include "hem/segmentation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hem {

namespace {

std::vector<double> pool_raw(const Frame& frame) {
    const std::size_t plane = frame.height * frame.width;
    std::vector<double> out(3, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            sum += frame.values[c * plane + i];
        }
        out[c] = sum / static_cast<double>(plane);
    }
    return out;
}

std::vector<double> pool_feature_mean(const Matrix& tokens) {
    std::vector<double> out(tokens.rows(), 0.0);
    for (std::size_t r = 0; r < tokens.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < tokens.cols(); ++c) {
            sum += tokens.at(r, c);
        }
        out[r] = sum / static_cast<double>(tokens.cols());
    }
    return out;
}

std::vector<double> pool_feature_cls(const Matrix& tokens) {
    std::vector<double> out(tokens.rows(), 0.0);
    for (std::size_t r = 0; r < tokens.rows(); ++r) {
        out[r] = tokens.at(r, 0);
    }
    return out;
}

}  // namespace

PooledSequence pool_frames(const FrameSequence& video, SimilaritySource source,
                           const std::vector<Matrix>* features) {
    PooledSequence pooled;
    if (source == SimilaritySource::raw_avgpool) {
        if (video.empty()) {
            throw std::invalid_argument("pool_frames: empty frame sequence");
        }
        pooled.vectors.reserve(video.size());
        for (const Frame& frame : video.frames) {
            if (frame.height == 0 || frame.width == 0) {
                throw std::invalid_argument("pool_frames: frame has zero spatial extent");
            }
            pooled.vectors.push_back(pool_raw(frame));
        }
        return pooled;
    }

    if (features == nullptr || features->empty()) {
        throw std::invalid_argument(
            "pool_frames: feature similarity source requested but no features provided");
    }
    if (!video.empty() && video.size() != features->size()) {
        throw std::invalid_argument("pool_frames: frame count " + std::to_string(video.size()) +
                                    " does not match feature count " +
                                    std::to_string(features->size()));
    }
    pooled.vectors.reserve(features->size());
    for (const Matrix& tokens : *features) {
        if (tokens.empty()) {
            throw std::invalid_argument("pool_frames: empty feature matrix");
        }
        pooled.vectors.push_back(source == SimilaritySource::feature_avgpool
                                     ? pool_feature_mean(tokens)
                                     : pool_feature_cls(tokens));
    }
    return pooled;
}

ScoreSequence adjacent_scores(const PooledSequence& pooled) {
    if (pooled.size() < 2) {
        throw std::invalid_argument("adjacent_scores: need at least 2 frames, got " +
                                    std::to_string(pooled.size()));
    }
    ScoreSequence out;
    out.scores.reserve(pooled.size() - 1);
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
        out.scores.push_back(cosine(pooled.vectors[i], pooled.vectors[i + 1]));
    }
    return out;
}

std::vector<std::size_t> select_split_points(const ScoreSequence& scores, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("select_split_points: event count must be at least 1");
    }
    if (k - 1 > scores.size()) {
        throw std::invalid_argument("select_split_points: cannot place " + std::to_string(k - 1) +
                                    " boundaries in " + std::to_string(scores.size()) +
                                    " frame gaps");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    // stable partial selection; equal scores keep the smaller index first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores.scores[a] < scores.scores[b];
    });
    std::vector<std::size_t> boundaries(order.begin(),
                                        order.begin() + static_cast<std::ptrdiff_t>(k - 1));
    for (std::size_t& b : boundaries) {
        b += 1;  // score i compares frames i and i+1; the cut lies between them
    }
    std::sort(boundaries.begin(), boundaries.end());
    return boundaries;
}

EventPartition partition(std::size_t frame_count, const std::vector<std::size_t>& boundaries) {
    EventPartition out;
    std::size_t prev = 0;
    for (std::size_t b : boundaries) {
        if (b <= prev || b >= frame_count) {
            throw std::invalid_argument("partition: boundary " + std::to_string(b) +
                                        " is not strictly inside (" + std::to_string(prev) + "," +
                                        std::to_string(frame_count) + ")");
        }
        out.ranges.push_back({prev, b});
        prev = b;
    }
    if (frame_count == 0) {
        throw std::invalid_argument("partition: empty frame range");
    }
    out.ranges.push_back({prev, frame_count});
    out.split_points = boundaries;
    return out;
}

SimilaritySource parse_similarity_source(const std::string& name) {
    if (name == "raw_avgpool" || name == "raw") {
        return SimilaritySource::raw_avgpool;
    }
    if (name == "feature_avgpool" || name == "feat_avg") {
        return SimilaritySource::feature_avgpool;
    }
    if (name == "feature_cls" || name == "feat_cls") {
        return SimilaritySource::feature_cls;
    }
    throw std::invalid_argument("unknown similarity source: " + name);
}

const char* similarity_source_name(SimilaritySource source) {
    switch (source) {
        case SimilaritySource::raw_avgpool:
            return "raw_avgpool";
        case SimilaritySource::feature_avgpool:
            return "feature_avgpool";
        case SimilaritySource::feature_cls:
            return "feature_cls";
    }
    return "unknown";
}

}  // namespace hem
