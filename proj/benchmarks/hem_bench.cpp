#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hem/matrix.hpp"
#include "hem/memory.hpp"
#include "hem/qformer.hpp"
#include "hem/sampler.hpp"
#include "hem/segmentation.hpp"

namespace {

hem::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    hem::Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = dist(rng);
    }
    return m;
}

hem::FrameSequence random_video(std::mt19937_64& rng, std::size_t frames, std::size_t side) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    hem::FrameSequence video;
    for (std::size_t f = 0; f < frames; ++f) {
        hem::Frame frame(side, side);
        for (double& v : frame.values) {
            v = dist(rng);
        }
        video.frames.push_back(std::move(frame));
    }
    return video;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    const hem::Matrix a = random_matrix(rng, n, n);
    const hem::Matrix b = random_matrix(rng, n, n);
    for (auto _ : state) {
        hem::Matrix c = matmul(a, b);
        benchmark::DoNotOptimize(c.data().data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity();

static void BM_SoftmaxRows(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    const hem::Matrix scores = random_matrix(rng, n, n);
    for (auto _ : state) {
        hem::Matrix w = softmax_rows(scores);
        benchmark::DoNotOptimize(w.data().data());
    }
}
BENCHMARK(BM_SoftmaxRows)->RangeMultiplier(4)->Range(16, 256);

static void BM_Attention(benchmark::State& state) {
    const auto kv_cols = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    const hem::Matrix queries = random_matrix(rng, 64, 32);
    const hem::Matrix kv = random_matrix(rng, 64, kv_cols);
    const hem::AttentionParams params = hem::AttentionParams::seeded(64, 2, 7);
    for (auto _ : state) {
        hem::Matrix out = hem::scaled_attention(queries, kv, params);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_Attention)->RangeMultiplier(2)->Range(16, 512);

static void BM_Segmentation(benchmark::State& state) {
    const auto frames = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    const hem::FrameSequence video = random_video(rng, frames, 16);
    for (auto _ : state) {
        const hem::PooledSequence pooled =
            hem::pool_frames(video, hem::SimilaritySource::raw_avgpool);
        const hem::ScoreSequence scores = hem::adjacent_scores(pooled);
        std::vector<std::size_t> splits = hem::select_split_points(scores, 4);
        benchmark::DoNotOptimize(splits.data());
    }
}
BENCHMARK(BM_Segmentation)->RangeMultiplier(2)->Range(16, 256);

static void BM_MemoryCompression(benchmark::State& state) {
    const auto events = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::vector<hem::QueryBank> banks(events);
    for (auto& bank : banks) {
        for (int b = 0; b < 4; ++b) {
            bank.collect(random_matrix(rng, 64, 32));
        }
    }
    for (auto _ : state) {
        hem::GlobalMemory gm(20);
        for (const auto& bank : banks) {
            gm.append_event(bank);
        }
        benchmark::DoNotOptimize(gm.size());
    }
}
BENCHMARK(BM_MemoryCompression)->RangeMultiplier(2)->Range(8, 64);

static void BM_UniformSampling(benchmark::State& state) {
    hem::SampleRequest req;
    req.total_frames = 512;
    for (std::size_t i = 0; i < 32; ++i) {
        req.split_points.push_back(16 * (i + 1) - 1);
    }
    for (auto _ : state) {
        hem::SamplePlan plan = hem::sample(req, hem::SamplingScheme::scheme1);
        benchmark::DoNotOptimize(plan.items.data());
    }
}
BENCHMARK(BM_UniformSampling);

static void BM_EventPipeline(benchmark::State& state) {
    const auto frames_per_event = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(6);
    std::vector<std::vector<hem::Matrix>> events(2);
    for (auto& event : events) {
        for (std::size_t f = 0; f < frames_per_event; ++f) {
            event.push_back(random_matrix(rng, 64, 16));
        }
    }
    const hem::Matrix queries = hem::make_query_tokens(64, 32, 7);
    const hem::AttentionParams self_params = hem::AttentionParams::seeded(64, 2, 8);
    const hem::AttentionParams cross_params = hem::AttentionParams::seeded(64, 2, 9);
    for (auto _ : state) {
        hem::GlobalMemory gm(20);
        std::vector<hem::Matrix> tokens;
        for (const auto& event : events) {
            hem::EventResult res = hem::process_event(
                std::span<const hem::Matrix>(event), queries, gm, self_params, cross_params);
            gm.append_event(res.bank);
            tokens.push_back(std::move(res.event_token));
        }
        hem::Matrix z_v = hem::concat_events(tokens);
        benchmark::DoNotOptimize(z_v.data().data());
    }
}
BENCHMARK(BM_EventPipeline)->RangeMultiplier(2)->Range(4, 32);

BENCHMARK_MAIN();
