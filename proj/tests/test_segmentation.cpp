#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "hem/segmentation.hpp"
#include "oracles.hpp"

using hem::EventPartition;
using hem::Frame;
using hem::FrameSequence;
using hem::Matrix;
using hem::PooledSequence;
using hem::ScoreSequence;
using hem::SimilaritySource;

namespace {

FrameSequence one_frame_video(const Frame& f) {
    FrameSequence v;
    v.frames.push_back(f);
    return v;
}

}  // namespace

TEST_CASE("pool_frames raw average over a hand-built frame") {
    Frame f(2, 2);
    // channel 0: [[1,3],[5,7]], channel 1: zeros, channel 2: all 2
    f.value(0, 0, 0) = 1.0;
    f.value(0, 0, 1) = 3.0;
    f.value(0, 1, 0) = 5.0;
    f.value(0, 1, 1) = 7.0;
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) {
            f.value(2, y, x) = 2.0;
        }
    }
    const PooledSequence pooled =
        hem::pool_frames(one_frame_video(f), SimilaritySource::raw_avgpool);
    REQUIRE(pooled.size() == 1);
    REQUIRE(pooled.vectors[0].size() == 3);
    CHECK(pooled.vectors[0][0] == doctest::Approx(4.0));
    CHECK(pooled.vectors[0][1] == doctest::Approx(0.0));
    CHECK(pooled.vectors[0][2] == doctest::Approx(2.0));
}

TEST_CASE("pool_frames constant video gives identical vectors") {
    const FrameSequence video = oracles::block_video({5}, 3, 3);
    const PooledSequence pooled = hem::pool_frames(video, SimilaritySource::raw_avgpool);
    REQUIRE(pooled.size() == 5);
    for (std::size_t t = 1; t < 5; ++t) {
        CHECK(pooled.vectors[t] == pooled.vectors[0]);
    }
}

TEST_CASE("pool_frames matches the flat-loop mean oracle") {
    std::mt19937_64 rng(11);
    const Frame f = oracles::random_frame(rng, 4, 4);
    const PooledSequence pooled =
        hem::pool_frames(one_frame_video(f), SimilaritySource::raw_avgpool);
    const std::vector<double> want = oracles::channel_means_ref(f);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(pooled.vectors[0][c] == doctest::Approx(want[c]).epsilon(1e-12));
    }
}

TEST_CASE("pool_frames feature sources") {
    std::mt19937_64 rng(12);
    const std::size_t d = 6, p = 4, t_count = 3;
    std::vector<Matrix> features;
    for (std::size_t t = 0; t < t_count; ++t) {
        features.push_back(oracles::random_matrix(rng, d, p));
    }
    FrameSequence video;  // empty: features carry the frame count

    const PooledSequence avg =
        hem::pool_frames(video, SimilaritySource::feature_avgpool, &features);
    REQUIRE(avg.size() == t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        REQUIRE(avg.vectors[t].size() == d);
        for (std::size_t r = 0; r < d; ++r) {
            double mean = 0.0;
            for (std::size_t c = 0; c < p; ++c) {
                mean += features[t].at(r, c);
            }
            mean /= static_cast<double>(p);
            CHECK(avg.vectors[t][r] == doctest::Approx(mean).epsilon(1e-12));
        }
    }

    const PooledSequence cls = hem::pool_frames(video, SimilaritySource::feature_cls, &features);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t r = 0; r < d; ++r) {
            CHECK(cls.vectors[t][r] == features[t].at(r, 0));
        }
    }
}

TEST_CASE("pool_frames feature source without features is an error") {
    const FrameSequence video = oracles::block_video({2}, 2, 2);
    try {
        hem::pool_frames(video, SimilaritySource::feature_avgpool);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("no features provided") != std::string::npos);
    }
}

TEST_CASE("adjacent_scores known patterns") {
    PooledSequence constant;
    constant.vectors = {{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
    const ScoreSequence ones = hem::adjacent_scores(constant);
    REQUIRE(ones.size() == 2);
    CHECK(ones.scores[0] == doctest::Approx(1.0));
    CHECK(ones.scores[1] == doctest::Approx(1.0));

    PooledSequence mixed;
    mixed.vectors = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};
    const ScoreSequence scores = hem::adjacent_scores(mixed);
    REQUIRE(scores.size() == 2);
    CHECK(scores.scores[0] == doctest::Approx(0.0));
    CHECK(scores.scores[1] == doctest::Approx(1.0));
}

TEST_CASE("adjacent_scores matches the per-pair cosine oracle") {
    std::mt19937_64 rng(13);
    PooledSequence pooled;
    for (int t = 0; t < 8; ++t) {
        pooled.vectors.push_back(
            {oracles::uniform(rng, 0.1, 1.0), oracles::uniform(rng, 0.1, 1.0),
             oracles::uniform(rng, 0.1, 1.0)});
    }
    const ScoreSequence scores = hem::adjacent_scores(pooled);
    REQUIRE(scores.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(scores.scores[i] ==
              doctest::Approx(oracles::cosine_ref(pooled.vectors[i], pooled.vectors[i + 1]))
                  .epsilon(1e-12));
        CHECK(scores.scores[i] >= -1.0);
        CHECK(scores.scores[i] <= 1.0);
    }
}

TEST_CASE("adjacent_scores needs at least two frames") {
    PooledSequence single;
    single.vectors = {{1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(hem::adjacent_scores(single), std::invalid_argument);
}

TEST_CASE("select_split_points picks the lowest-score boundaries") {
    ScoreSequence scores;
    scores.scores = {0.9, 0.1, 0.8, 0.2, 0.95};
    CHECK(hem::select_split_points(scores, 3) == std::vector<std::size_t>{2, 4});
    CHECK(hem::select_split_points(scores, 1).empty());

    ScoreSequence equal;
    equal.scores = {0.5, 0.5, 0.5, 0.5};
    CHECK(hem::select_split_points(equal, 3) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("select_split_points rejects more events than gaps") {
    ScoreSequence scores;
    scores.scores = {0.5, 0.5};
    CHECK_THROWS_AS(hem::select_split_points(scores, 4), std::invalid_argument);
}

TEST_CASE("partition conventions") {
    const EventPartition two = hem::partition(10, {3, 6});
    REQUIRE(two.event_count() == 3);
    CHECK(two.ranges[0] == hem::FrameRange{0, 3});
    CHECK(two.ranges[1] == hem::FrameRange{3, 6});
    CHECK(two.ranges[2] == hem::FrameRange{6, 10});

    const EventPartition whole = hem::partition(5, {});
    REQUIRE(whole.event_count() == 1);
    CHECK(whole.ranges[0] == hem::FrameRange{0, 5});

    const EventPartition singletons = hem::partition(4, {1, 2, 3});
    REQUIRE(singletons.event_count() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(singletons.ranges[i] == hem::FrameRange{i, i + 1});
    }
}

TEST_CASE("partition rejects bad boundaries") {
    CHECK_THROWS_AS(hem::partition(10, {0}), std::invalid_argument);
    CHECK_THROWS_AS(hem::partition(10, {10}), std::invalid_argument);
    CHECK_THROWS_AS(hem::partition(10, {3, 3}), std::invalid_argument);
    CHECK_THROWS_AS(hem::partition(10, {6, 3}), std::invalid_argument);
}

TEST_CASE("segmentation round trip covers the video") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t t_count = 2 + rng() % 11;  // 2..12
        FrameSequence video;
        for (std::size_t t = 0; t < t_count; ++t) {
            video.frames.push_back(oracles::random_frame(rng, 2, 3));
        }
        const std::size_t k = 1 + rng() % t_count;

        const ScoreSequence scores =
            hem::adjacent_scores(hem::pool_frames(video, SimilaritySource::raw_avgpool));
        const EventPartition part =
            hem::partition(t_count, hem::select_split_points(scores, k));

        REQUIRE(part.event_count() == k);
        std::size_t cursor = 0;
        for (const hem::FrameRange& r : part.ranges) {
            CHECK(r.begin == cursor);
            CHECK(r.end > r.begin);
            cursor = r.end;
        }
        CHECK(cursor == t_count);
    }
}

TEST_CASE("select_split_points equals the full-argsort oracle") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t_count = 2 + rng() % 11;
        ScoreSequence scores;
        for (std::size_t i = 0; i + 1 < t_count; ++i) {
            // coarse grid so ties actually happen
            scores.scores.push_back(static_cast<double>(rng() % 5) / 4.0);
        }
        const std::size_t k = 1 + rng() % t_count;
        CHECK(hem::select_split_points(scores, k) ==
              oracles::argsort_splits_ref(scores.scores, k));
    }
}

TEST_CASE("synthetic block videos split exactly at the joins") {
    const hem::FrameSequence video = oracles::block_video({3, 4, 2, 3}, 4, 4);
    const ScoreSequence scores =
        hem::adjacent_scores(hem::pool_frames(video, SimilaritySource::raw_avgpool));
    CHECK(hem::select_split_points(scores, 4) == std::vector<std::size_t>{3, 7, 9});
}

TEST_CASE("split selection is invariant to scaling all frame values") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t t_count = 4 + rng() % 6;
        FrameSequence video;
        for (std::size_t t = 0; t < t_count; ++t) {
            video.frames.push_back(oracles::random_frame(rng, 3, 3));
        }
        FrameSequence scaled = video;
        for (Frame& f : scaled.frames) {
            for (double& v : f.values) {
                v *= 7.3;
            }
        }
        const std::size_t k = 2 + rng() % 3;
        const auto splits = [k](const FrameSequence& v) {
            return hem::select_split_points(
                hem::adjacent_scores(hem::pool_frames(v, SimilaritySource::raw_avgpool)), k);
        };
        CHECK(splits(video) == splits(scaled));
    }
}

TEST_CASE("similarity source names parse and print") {
    CHECK(hem::parse_similarity_source("raw") == SimilaritySource::raw_avgpool);
    CHECK(hem::parse_similarity_source("raw_avgpool") == SimilaritySource::raw_avgpool);
    CHECK(hem::parse_similarity_source("feat_avg") == SimilaritySource::feature_avgpool);
    CHECK(hem::parse_similarity_source("feat_cls") == SimilaritySource::feature_cls);
    CHECK(std::string(hem::similarity_source_name(SimilaritySource::feature_cls)) ==
          "feature_cls");
    CHECK_THROWS_AS(hem::parse_similarity_source("bogus"), std::invalid_argument);
}
