#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hem/matrix.hpp"
#include "hem/memory.hpp"
#include "hem/segmentation.hpp"

namespace hem {

/// Deterministic stand-in for a pre-trained visual encoder: the frame is cut
/// into `tokens_per_frame` spatial patches, each patch's per-channel means are
/// mapped through a seeded fixed dim x 3 linear map.
struct ToyEncoderParams {
    std::size_t dim = 64;
    std::size_t tokens_per_frame = 16;
    std::uint64_t seed = 0;
};

/// Encodes one frame to dim x tokens_per_frame tokens. The patch grid is the
/// squarest factor pair of tokens_per_frame that divides the frame's spatial
/// extent; throws when no such grid exists.
Matrix toy_encode(const Frame& frame, const ToyEncoderParams& params);

/// Sinusoidal frame-level encoding: entry 2j is sin(t / 10000^(2j/dim)),
/// entry 2j+1 is cos of the same angle.
std::vector<double> positional_encoding(std::size_t timestamp, std::size_t dim);

/// Adds positional_encoding(timestamp, rows) to every token column.
void add_positional_encoding(Matrix& frame_tokens, std::size_t timestamp);

/// Learnable query embeddings, dim x count, seeded deterministically.
Matrix make_query_tokens(std::size_t dim, std::size_t count, std::uint64_t seed);

/// Projection matrices for one attention block. `heads` must divide the
/// dimension.
struct AttentionParams {
    Matrix w_query;  // dim x dim
    Matrix w_key;    // dim x dim
    Matrix w_value;  // dim x dim
    std::size_t heads = 1;

    static AttentionParams seeded(std::size_t dim, std::size_t heads, std::uint64_t seed);
    static AttentionParams identity(std::size_t dim, std::size_t heads = 1);

    std::size_t dim() const { return w_query.rows(); }
};

/// Forward state recorded for the backward pass: projected tensors plus the
/// per-head row-stochastic attention weights.
struct AttentionTape {
    Matrix query_in;  // dim x q
    Matrix kv_in;     // dim x m
    Matrix q_proj;
    Matrix k_proj;
    Matrix v_proj;
    std::vector<Matrix> weights;  // per head, q x m
};

/// Scaled dot-product attention over column-token matrices: queries from
/// `query_in` (dim x q), keys and values from `kv_in` (dim x m), scale
/// 1/sqrt(dim/heads). Returns dim x q.
Matrix scaled_attention(const Matrix& query_in, const Matrix& kv_in,
                        const AttentionParams& params, AttentionTape* tape = nullptr);

/// Backward pass of scaled_attention for frozen projections: accumulates the
/// loss gradient w.r.t. both inputs into d_query_in / d_kv_in (which must be
/// zero-initialized or hold prior accumulations of matching shape).
void attention_vjp(const AttentionTape& tape, const AttentionParams& params, const Matrix& d_out,
                   Matrix& d_query_in, Matrix& d_kv_in);

/// Query self-attention against the global memory. An empty memory (cold
/// start) falls back to the query tokens themselves as keys and values.
Matrix self_attn_queries(const Matrix& queries, const GlobalMemory& gm,
                         const AttentionParams& params, AttentionTape* tape = nullptr);

/// Cross-attention of the attended queries against the local memory columns.
/// Throws on an empty local memory.
Matrix cross_attn_local(const Matrix& attended, const LocalMemory& lm,
                        const AttentionParams& params, AttentionTape* tape = nullptr);

/// Forward state of one event, for the pipeline backward pass.
struct EventTape {
    std::vector<AttentionTape> self_attn;  // one per timestep
    AttentionTape cross_attn;              // final timestep
    std::size_t gm_blocks_before = 0;      // 0 means the cold-start fallback ran
};

struct EventResult {
    Matrix event_token;  // O_c of the final timestep, dim x q
    QueryBank bank;      // per-timestep self-attention outputs
};

/// Runs one event: per frame, adds the intra-event positional encoding,
/// appends to a fresh local memory, self-attends the queries against the
/// (fixed) global memory, cross-attends the result against the local memory,
/// and collects the self-attention output. `frame_tokens` are the encoded
/// d x p tokens, positional encoding not yet applied.
EventResult process_event(std::span<const Matrix> frame_tokens, const Matrix& queries,
                          const GlobalMemory& gm, const AttentionParams& self_params,
                          const AttentionParams& cross_params, EventTape* tape = nullptr);

/// Column-wise concatenation of per-event tokens into Z_v, dim x (q * K).
Matrix concat_events(const std::vector<Matrix>& event_tokens);

/// Linear classifier over the flattened video tokens, standing in for the
/// downstream language model.
struct ToyHead {
    Matrix projection;       // classes x (dim * q * K), applied to row-major flatten
    std::size_t target = 0;  // class index

    static ToyHead seeded(std::size_t classes, std::size_t input_size, std::size_t target,
                          std::uint64_t seed);
};

struct HeadLoss {
    double loss = 0.0;
    Matrix d_projection;  // same shape as the projection
    Matrix d_input;       // same shape as z_v
};

/// Cross-entropy of the projected logits against the target class, with
/// analytic gradients for the projection and the input.
HeadLoss head_loss(const Matrix& z_v, const ToyHead& head);

/// Full differentiable front end: per-event encoded tokens through memories,
/// attention, Z_v assembly and the toy head. Gradients cover the head
/// projection and the query tokens; attention projections stay frozen.
struct PipelineGradients {
    double loss = 0.0;
    Matrix z_v;
    Matrix d_projection;
    Matrix d_queries;
};

double pipeline_loss(const std::vector<std::vector<Matrix>>& event_tokens, const Matrix& queries,
                     const AttentionParams& self_params, const AttentionParams& cross_params,
                     std::optional<std::size_t> gm_capacity, const ToyHead& head,
                     Matrix* z_v_out = nullptr);

PipelineGradients pipeline_gradients(const std::vector<std::vector<Matrix>>& event_tokens,
                                     const Matrix& queries, const AttentionParams& self_params,
                                     const AttentionParams& cross_params,
                                     std::optional<std::size_t> gm_capacity, const ToyHead& head);

}  // namespace hem
