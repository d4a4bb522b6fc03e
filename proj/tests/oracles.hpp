#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here is written as directly as possible from the
// mathematical definitions, trading speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "hem/matrix.hpp"
#include "hem/segmentation.hpp"

namespace oracles {

/// Entry-wise triple loop product of row-major a (m x k) and b (k x n).
inline std::vector<double> matmul_ref(const std::vector<double>& a, std::size_t m, std::size_t k,
                                      const std::vector<double>& b, std::size_t n) {
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t x = 0; x < k; ++x) {
                acc += a[i * k + x] * b[x * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    return out;
}

/// Flat-loop per-channel mean over one 3 x H x W frame.
inline std::vector<double> channel_means_ref(const hem::Frame& frame) {
    std::vector<double> out(3, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < frame.height * frame.width; ++i) {
            acc += frame.values[c * frame.height * frame.width + i];
        }
        out[c] = acc / static_cast<double>(frame.height * frame.width);
    }
    return out;
}

inline double cosine_ref(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Brute-force split selection: full argsort of the scores with explicit
/// (score, index) ordering, then the first k-1 indices mapped to boundaries.
inline std::vector<std::size_t> argsort_splits_ref(const std::vector<double>& scores,
                                                   std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] < scores[b];
        }
        return a < b;
    });
    std::vector<std::size_t> boundaries;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        boundaries.push_back(order[i] + 1);
    }
    std::sort(boundaries.begin(), boundaries.end());
    return boundaries;
}

/// Midpoint sampling evaluated with exact 128-bit rational arithmetic:
/// index_k = a + floor((k+0.5) * L / s), L = b - a + 1.
inline std::vector<std::size_t> uniform_sampling_ref(std::size_t a, std::size_t b,
                                                     std::size_t s) {
    const unsigned __int128 len = b - a + 1;
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < s; ++k) {
        const unsigned __int128 numer = (2 * static_cast<unsigned __int128>(k) + 1) * len;
        std::size_t idx = a + static_cast<std::size_t>(numer / (2 * s));
        out.push_back(std::min(idx, b));
    }
    return out;
}

/// Step-by-step greedy merge: while over cap, find the adjacent pair with the
/// highest flattened cosine (ties toward the smaller index) and replace it by
/// the element-wise mean.
inline std::vector<std::vector<double>> greedy_merge_ref(std::vector<std::vector<double>> blocks,
                                                         std::size_t cap) {
    while (blocks.size() > cap && blocks.size() >= 2) {
        std::size_t best = 0;
        double best_sim = -2.0;
        for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
            const double sim = cosine_ref(blocks[i], blocks[i + 1]);
            if (sim > best_sim) {
                best_sim = sim;
                best = i;
            }
        }
        std::vector<double> merged(blocks[best].size());
        for (std::size_t j = 0; j < merged.size(); ++j) {
            merged[j] = 0.5 * (blocks[best][j] + blocks[best + 1][j]);
        }
        blocks[best] = std::move(merged);
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    }
    return blocks;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline hem::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                 double lo = -1.0, double hi = 1.0) {
    hem::Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = uniform(rng, lo, hi);
    }
    return m;
}

inline hem::Frame random_frame(std::mt19937_64& rng, std::size_t h, std::size_t w) {
    hem::Frame f(h, w);
    for (double& v : f.values) {
        v = uniform(rng, 0.0, 1.0);
    }
    return f;
}

/// Video of `blocks` constant-color segments with the given lengths; every
/// segment gets its own pooled direction, so the joins are the only
/// low-similarity gaps.
inline hem::FrameSequence block_video(const std::vector<std::size_t>& lengths, std::size_t h,
                                      std::size_t w) {
    // distinct directions in RGB space, pairwise non-collinear
    static const double colors[][3] = {
        {1.0, 0.05, 0.05}, {0.05, 1.0, 0.05}, {0.05, 0.05, 1.0}, {0.9, 0.9, 0.05},
    };
    hem::FrameSequence video;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
        for (std::size_t i = 0; i < lengths[s]; ++i) {
            hem::Frame f(h, w);
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t j = 0; j < h * w; ++j) {
                    f.values[c * h * w + j] = colors[s % 4][c];
                }
            }
            video.frames.push_back(std::move(f));
        }
    }
    return video;
}

}  // namespace oracles
