#include "hem/memory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hem {

void LocalMemory::append(const Matrix& frame_tokens) {
    if (frame_tokens.empty()) {
        throw std::invalid_argument("local memory: cannot append empty frame tokens");
    }
    if (frames_ == 0) {
        tokens_ = frame_tokens;
    } else {
        if (frame_tokens.rows() != tokens_.rows()) {
            throw std::invalid_argument("local memory: row count " +
                                        std::to_string(frame_tokens.rows()) +
                                        " does not match memory rows " +
                                        std::to_string(tokens_.rows()));
        }
        tokens_ = hcat({tokens_, frame_tokens});
    }
    ++frames_;
}

void LocalMemory::clear() {
    tokens_ = Matrix();
    frames_ = 0;
}

void QueryBank::collect(const Matrix& block) {
    if (block.empty()) {
        throw std::invalid_argument("query bank: cannot collect an empty block");
    }
    if (!blocks_.empty() &&
        (block.rows() != blocks_.front().rows() || block.cols() != blocks_.front().cols())) {
        throw std::invalid_argument(
            "query bank: block shape " + std::to_string(block.rows()) + "x" +
            std::to_string(block.cols()) + " does not match established shape " +
            std::to_string(blocks_.front().rows()) + "x" + std::to_string(blocks_.front().cols()));
    }
    blocks_.push_back(block);
}

namespace {

// Flattened-block cosine, extended to be total: two zero blocks are identical
// (merging them is lossless), a single zero block ranks last.
double block_similarity(const Matrix& a, const Matrix& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        dot += a.data()[i] * b.data()[i];
        na += a.data()[i] * a.data()[i];
        nb += b.data()[i] * b.data()[i];
    }
    if (na == 0.0 && nb == 0.0) {
        return 1.0;
    }
    if (na == 0.0 || nb == 0.0) {
        return -1.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Matrix mean_of(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] = 0.5 * (a.data()[i] + b.data()[i]);
    }
    return out;
}

}  // namespace

GlobalMemory::GlobalMemory(std::optional<std::size_t> capacity) : capacity_(capacity) {}

void GlobalMemory::append_event(const QueryBank& bank, std::vector<MergeStep>* trace) {
    if (bank.empty()) {
        throw std::invalid_argument("global memory: cannot append an empty query bank");
    }
    if (capacity_ && *capacity_ == 0) {
        return;  // memory disabled
    }
    for (const Matrix& block : bank.blocks()) {
        if (!blocks_.empty() && (block.rows() != blocks_.front().rows() ||
                                 block.cols() != blocks_.front().cols())) {
            throw std::invalid_argument("global memory: block shape mismatch");
        }
        blocks_.push_back(block);
    }
    compress(trace);
}

void GlobalMemory::compress(std::vector<MergeStep>* trace) {
    if (!capacity_) {
        return;
    }
    while (blocks_.size() > *capacity_ && blocks_.size() >= 2) {
        std::size_t best = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < blocks_.size(); ++i) {
            const double sim = block_similarity(blocks_[i], blocks_[i + 1]);
            if (sim > best_sim) {  // strict: ties keep the smaller index
                best_sim = sim;
                best = i;
            }
        }
        blocks_[best] = mean_of(blocks_[best], blocks_[best + 1]);
        blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(best + 1));
        if (trace != nullptr) {
            trace->push_back({best});
        }
    }
}

}  // namespace hem
