#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hem/matrix.hpp"

namespace hem {

/// Per-event concatenation of frame token matrices, d x (n*p). Append-only
/// within an event; a fresh instance is used for each event.
class LocalMemory {
public:
    LocalMemory() = default;

    /// Appends one frame's d x p tokens; all appends must share the row count.
    void append(const Matrix& frame_tokens);

    const Matrix& tokens() const { return tokens_; }
    std::size_t frame_count() const { return frames_; }
    bool empty() const { return frames_ == 0; }
    void clear();

private:
    Matrix tokens_;
    std::size_t frames_ = 0;
};

/// Ordered per-timestep query blocks collected within one event, each d x q.
class QueryBank {
public:
    QueryBank() = default;

    /// Appends one d x q block; the first block fixes the shape.
    void collect(const Matrix& block);

    const std::vector<Matrix>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }

    /// d x (q * n) concatenation in collection order.
    Matrix concatenated() const { return hcat(blocks_); }

private:
    std::vector<Matrix> blocks_;
};

/// One compression step: the blocks at `index` and `index + 1` were replaced
/// by their element-wise mean at `index`.
struct MergeStep {
    std::size_t index = 0;
};

/// Capacity-bounded, order-preserving sequence of d x q query blocks
/// accumulated across events. Whenever the block count exceeds the capacity,
/// the most similar adjacent pair is merged into its element-wise mean,
/// repeating until the bound holds.
class GlobalMemory {
public:
    /// nullopt = unbounded; 0 disables the memory (appended blocks are dropped).
    explicit GlobalMemory(std::optional<std::size_t> capacity = DEFAULT_CAPACITY);

    static GlobalMemory unbounded() { return GlobalMemory(std::nullopt); }

    /// Appends the bank's blocks in order, then compresses back under the
    /// capacity. Throws on an empty bank. `trace`, when given, records each
    /// merge in application order.
    void append_event(const QueryBank& bank, std::vector<MergeStep>* trace = nullptr);

    /// Greedy adjacent-pair merging until the block count is within capacity.
    /// Idempotent at or under the bound.
    void compress(std::vector<MergeStep>* trace = nullptr);

    const std::vector<Matrix>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    std::optional<std::size_t> capacity() const { return capacity_; }

    /// d x (q * size) concatenation in temporal order.
    Matrix concatenated() const { return hcat(blocks_); }

    static constexpr std::size_t DEFAULT_CAPACITY = 20;

private:
    std::vector<Matrix> blocks_;
    std::optional<std::size_t> capacity_;
};

}  // namespace hem
