#include "hem/qformer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "hem/rng.hpp"

namespace hem {

namespace {

constexpr std::uint64_t ROLE_ENCODER = 0x10;
constexpr std::uint64_t ROLE_QUERY_TOKENS = 0x20;
constexpr std::uint64_t ROLE_W_QUERY = 0x31;
constexpr std::uint64_t ROLE_W_KEY = 0x32;
constexpr std::uint64_t ROLE_W_VALUE = 0x33;
constexpr std::uint64_t ROLE_HEAD = 0x40;

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Squarest gh x gw factorization of `patches` whose cells tile H x W.
std::pair<std::size_t, std::size_t> patch_grid(std::size_t patches, std::size_t height,
                                               std::size_t width) {
    for (std::size_t gh = static_cast<std::size_t>(std::sqrt(static_cast<double>(patches)));
         gh >= 1; --gh) {
        if (patches % gh != 0) {
            continue;
        }
        const std::size_t gw = patches / gh;
        if (height % gh == 0 && width % gw == 0) {
            return {gh, gw};
        }
        if (gh != gw && height % gw == 0 && width % gh == 0) {
            return {gw, gh};
        }
    }
    throw std::invalid_argument("toy_encode: " + std::to_string(patches) +
                                " patches do not tile a " + std::to_string(height) + "x" +
                                std::to_string(width) + " frame");
}

void set_row_block(Matrix& dst, std::size_t first_row, const Matrix& src) {
    for (std::size_t r = 0; r < src.rows(); ++r) {
        for (std::size_t c = 0; c < src.cols(); ++c) {
            dst.at(first_row + r, c) = src.at(r, c);
        }
    }
}

void check_attention_inputs(const Matrix& query_in, const Matrix& kv_in,
                            const AttentionParams& params) {
    const std::size_t dim = params.dim();
    if (dim == 0 || params.heads == 0 || dim % params.heads != 0) {
        throw std::invalid_argument("attention: dimension " + std::to_string(dim) +
                                    " is not divisible by " + std::to_string(params.heads) +
                                    " heads");
    }
    if (params.w_query.cols() != dim || params.w_key.rows() != dim ||
        params.w_key.cols() != dim || params.w_value.rows() != dim ||
        params.w_value.cols() != dim) {
        throw std::invalid_argument("attention: projection matrices must all be " +
                                    std::to_string(dim) + "x" + std::to_string(dim));
    }
    if (query_in.rows() != dim || kv_in.rows() != dim) {
        throw std::invalid_argument("attention: input rows (" + std::to_string(query_in.rows()) +
                                    " query, " + std::to_string(kv_in.rows()) +
                                    " key/value) do not match dimension " + std::to_string(dim));
    }
    if (query_in.cols() == 0 || kv_in.cols() == 0) {
        throw std::invalid_argument("attention: empty token matrix");
    }
}

}  // namespace

Matrix toy_encode(const Frame& frame, const ToyEncoderParams& params) {
    if (frame.height == 0 || frame.width == 0) {
        throw std::invalid_argument("toy_encode: frame has zero spatial extent");
    }
    if (params.dim == 0 || params.tokens_per_frame == 0) {
        throw std::invalid_argument("toy_encode: dim and tokens_per_frame must be positive");
    }
    const auto [gh, gw] = patch_grid(params.tokens_per_frame, frame.height, frame.width);
    const std::size_t ph = frame.height / gh;
    const std::size_t pw = frame.width / gw;

    Rng rng(derive_seed(params.seed, ROLE_ENCODER));
    const Matrix map = rng.uniform_matrix(params.dim, 3, -1.0, 1.0);

    Matrix tokens(params.dim, params.tokens_per_frame);
    for (std::size_t i = 0; i < gh; ++i) {
        for (std::size_t j = 0; j < gw; ++j) {
            double mean[3] = {0.0, 0.0, 0.0};
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t y = i * ph; y < (i + 1) * ph; ++y) {
                    for (std::size_t x = j * pw; x < (j + 1) * pw; ++x) {
                        mean[c] += frame.value(c, y, x);
                    }
                }
                mean[c] /= static_cast<double>(ph * pw);
            }
            const std::size_t col = i * gw + j;
            for (std::size_t r = 0; r < params.dim; ++r) {
                tokens.at(r, col) =
                    map.at(r, 0) * mean[0] + map.at(r, 1) * mean[1] + map.at(r, 2) * mean[2];
            }
        }
    }
    return tokens;
}

std::vector<double> positional_encoding(std::size_t timestamp, std::size_t dim) {
    std::vector<double> out(dim, 0.0);
    const double t = static_cast<double>(timestamp);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t j = i / 2;
        const double angle =
            t / std::pow(10000.0, static_cast<double>(2 * j) / static_cast<double>(dim));
        out[i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
    return out;
}

void add_positional_encoding(Matrix& frame_tokens, std::size_t timestamp) {
    frame_tokens.add_to_columns(positional_encoding(timestamp, frame_tokens.rows()));
}

Matrix make_query_tokens(std::size_t dim, std::size_t count, std::uint64_t seed) {
    if (dim == 0 || count == 0) {
        throw std::invalid_argument("make_query_tokens: dim and count must be positive");
    }
    Rng rng(derive_seed(seed, ROLE_QUERY_TOKENS));
    const double bound = xavier_bound(dim, count);
    return rng.uniform_matrix(dim, count, -bound, bound);
}

AttentionParams AttentionParams::seeded(std::size_t dim, std::size_t heads, std::uint64_t seed) {
    if (dim == 0 || heads == 0 || dim % heads != 0) {
        throw std::invalid_argument("AttentionParams: dimension " + std::to_string(dim) +
                                    " is not divisible by " + std::to_string(heads) + " heads");
    }
    const double bound = xavier_bound(dim, dim);
    AttentionParams p;
    p.w_query = Rng(derive_seed(seed, ROLE_W_QUERY)).uniform_matrix(dim, dim, -bound, bound);
    p.w_key = Rng(derive_seed(seed, ROLE_W_KEY)).uniform_matrix(dim, dim, -bound, bound);
    p.w_value = Rng(derive_seed(seed, ROLE_W_VALUE)).uniform_matrix(dim, dim, -bound, bound);
    p.heads = heads;
    return p;
}

AttentionParams AttentionParams::identity(std::size_t dim, std::size_t heads) {
    AttentionParams p;
    p.w_query = Matrix::identity(dim);
    p.w_key = Matrix::identity(dim);
    p.w_value = Matrix::identity(dim);
    p.heads = heads;
    return p;
}

Matrix scaled_attention(const Matrix& query_in, const Matrix& kv_in,
                        const AttentionParams& params, AttentionTape* tape) {
    check_attention_inputs(query_in, kv_in, params);
    const std::size_t dim = params.dim();
    const std::size_t head_dim = dim / params.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    const Matrix q_proj = matmul(params.w_query, query_in);
    const Matrix k_proj = matmul(params.w_key, kv_in);
    const Matrix v_proj = matmul(params.w_value, kv_in);

    Matrix out(dim, query_in.cols());
    std::vector<Matrix> weights;
    weights.reserve(params.heads);
    for (std::size_t h = 0; h < params.heads; ++h) {
        const std::size_t r0 = h * head_dim;
        const Matrix qh = q_proj.row_block(r0, head_dim);
        const Matrix kh = k_proj.row_block(r0, head_dim);
        const Matrix vh = v_proj.row_block(r0, head_dim);

        Matrix scores = matmul(qh.transposed(), kh);  // q x m
        scores.scale_inplace(scale);
        Matrix attn = softmax_rows(scores);
        set_row_block(out, r0, matmul(vh, attn.transposed()));
        weights.push_back(std::move(attn));
    }

    if (tape != nullptr) {
        tape->query_in = query_in;
        tape->kv_in = kv_in;
        tape->q_proj = q_proj;
        tape->k_proj = k_proj;
        tape->v_proj = v_proj;
        tape->weights = std::move(weights);
    }
    return out;
}

void attention_vjp(const AttentionTape& tape, const AttentionParams& params, const Matrix& d_out,
                   Matrix& d_query_in, Matrix& d_kv_in) {
    const std::size_t dim = params.dim();
    const std::size_t head_dim = dim / params.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const std::size_t q = tape.query_in.cols();
    const std::size_t m = tape.kv_in.cols();

    Matrix d_q_proj(dim, q);
    Matrix d_k_proj(dim, m);
    Matrix d_v_proj(dim, m);

    for (std::size_t h = 0; h < params.heads; ++h) {
        const std::size_t r0 = h * head_dim;
        const Matrix d_out_h = d_out.row_block(r0, head_dim);
        const Matrix qh = tape.q_proj.row_block(r0, head_dim);
        const Matrix kh = tape.k_proj.row_block(r0, head_dim);
        const Matrix vh = tape.v_proj.row_block(r0, head_dim);
        const Matrix& attn = tape.weights[h];  // q x m

        // out_h = vh * attn^T
        const Matrix d_vh = matmul(d_out_h, attn);                  // head_dim x m
        const Matrix d_attn = matmul(d_out_h.transposed(), vh);     // q x m

        // softmax rows: dS_ij = A_ij * (dA_ij - sum_k dA_ik A_ik), then * scale
        Matrix d_scores(q, m);
        for (std::size_t i = 0; i < q; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                dot += d_attn.at(i, j) * attn.at(i, j);
            }
            for (std::size_t j = 0; j < m; ++j) {
                d_scores.at(i, j) = attn.at(i, j) * (d_attn.at(i, j) - dot) * scale;
            }
        }

        // scores = scale * qh^T kh
        set_row_block(d_q_proj, r0, matmul(kh, d_scores.transposed()));
        set_row_block(d_k_proj, r0, matmul(qh, d_scores));
        set_row_block(d_v_proj, r0, d_vh);
    }

    d_query_in.add_inplace(matmul(params.w_query.transposed(), d_q_proj));
    d_kv_in.add_inplace(matmul(params.w_key.transposed(), d_k_proj));
    d_kv_in.add_inplace(matmul(params.w_value.transposed(), d_v_proj));
}

Matrix self_attn_queries(const Matrix& queries, const GlobalMemory& gm,
                         const AttentionParams& params, AttentionTape* tape) {
    // empty memory: cold start, the queries attend over themselves
    const Matrix kv = gm.empty() ? queries : gm.concatenated();
    return scaled_attention(queries, kv, params, tape);
}

Matrix cross_attn_local(const Matrix& attended, const LocalMemory& lm,
                        const AttentionParams& params, AttentionTape* tape) {
    if (lm.empty()) {
        throw std::invalid_argument("cross_attn_local: local memory is empty");
    }
    return scaled_attention(attended, lm.tokens(), params, tape);
}

EventResult process_event(std::span<const Matrix> frame_tokens, const Matrix& queries,
                          const GlobalMemory& gm, const AttentionParams& self_params,
                          const AttentionParams& cross_params, EventTape* tape) {
    if (frame_tokens.empty()) {
        throw std::invalid_argument("process_event: event has no frames");
    }
    if (tape != nullptr) {
        tape->self_attn.clear();
        tape->gm_blocks_before = gm.size();
    }

    LocalMemory lm;
    QueryBank bank;
    Matrix event_token;
    for (std::size_t t = 0; t < frame_tokens.size(); ++t) {
        Matrix stamped = frame_tokens[t];
        add_positional_encoding(stamped, t);
        lm.append(stamped);

        AttentionTape* self_tape = nullptr;
        if (tape != nullptr) {
            self_tape = &tape->self_attn.emplace_back();
        }
        const Matrix attended = self_attn_queries(queries, gm, self_params, self_tape);

        const bool last = t + 1 == frame_tokens.size();
        AttentionTape* cross_tape = (tape != nullptr && last) ? &tape->cross_attn : nullptr;
        Matrix crossed = cross_attn_local(attended, lm, cross_params, cross_tape);
        if (last) {
            event_token = std::move(crossed);
        }
        bank.collect(attended);
    }
    return {std::move(event_token), std::move(bank)};
}

Matrix concat_events(const std::vector<Matrix>& event_tokens) {
    if (event_tokens.empty()) {
        throw std::invalid_argument("concat_events: no event tokens");
    }
    const std::size_t rows = event_tokens.front().rows();
    const std::size_t cols = event_tokens.front().cols();
    for (const Matrix& t : event_tokens) {
        if (t.rows() != rows || t.cols() != cols) {
            throw std::invalid_argument("concat_events: event token shape mismatch");
        }
    }
    return hcat(event_tokens);
}

ToyHead ToyHead::seeded(std::size_t classes, std::size_t input_size, std::size_t target,
                        std::uint64_t seed) {
    if (classes < 2) {
        throw std::invalid_argument("ToyHead: need at least 2 classes");
    }
    if (target >= classes) {
        throw std::invalid_argument("ToyHead: target " + std::to_string(target) +
                                    " out of range for " + std::to_string(classes) + " classes");
    }
    ToyHead head;
    const double bound = xavier_bound(input_size, classes);
    head.projection =
        Rng(derive_seed(seed, ROLE_HEAD)).uniform_matrix(classes, input_size, -bound, bound);
    head.target = target;
    return head;
}

HeadLoss head_loss(const Matrix& z_v, const ToyHead& head) {
    const std::size_t classes = head.projection.rows();
    if (classes < 2) {
        throw std::invalid_argument("head_loss: need at least 2 classes");
    }
    if (head.target >= classes) {
        throw std::invalid_argument("head_loss: target " + std::to_string(head.target) +
                                    " out of range for " + std::to_string(classes) + " classes");
    }
    const std::vector<double>& flat = z_v.data();  // row-major flatten
    if (head.projection.cols() != flat.size()) {
        throw std::invalid_argument("head_loss: projection expects input of length " +
                                    std::to_string(head.projection.cols()) + ", got " +
                                    std::to_string(flat.size()));
    }

    std::vector<double> logits(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
        double acc = 0.0;
        for (std::size_t l = 0; l < flat.size(); ++l) {
            acc += head.projection.at(k, l) * flat[l];
        }
        logits[k] = acc;
    }

    double max_logit = logits[0];
    for (double v : logits) {
        max_logit = std::max(max_logit, v);
    }
    double exp_sum = 0.0;
    std::vector<double> probs(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
        probs[k] = std::exp(logits[k] - max_logit);
        exp_sum += probs[k];
    }
    for (double& p : probs) {
        p /= exp_sum;
    }

    HeadLoss result;
    result.loss = std::log(exp_sum) - (logits[head.target] - max_logit);

    // d loss / d logits = probs - onehot(target)
    std::vector<double> d_logits = probs;
    d_logits[head.target] -= 1.0;

    result.d_projection = Matrix(classes, flat.size());
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t l = 0; l < flat.size(); ++l) {
            result.d_projection.at(k, l) = d_logits[k] * flat[l];
        }
    }
    result.d_input = Matrix(z_v.rows(), z_v.cols());
    for (std::size_t l = 0; l < flat.size(); ++l) {
        double acc = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            acc += head.projection.at(k, l) * d_logits[k];
        }
        result.d_input.data()[l] = acc;
    }
    return result;
}

namespace {

struct PipelineTrace {
    std::vector<EventTape> events;
    std::vector<std::vector<MergeStep>> merges;
    std::size_t final_gm_size = 0;
};

Matrix run_events(const std::vector<std::vector<Matrix>>& event_tokens, const Matrix& queries,
                  const AttentionParams& self_params, const AttentionParams& cross_params,
                  std::optional<std::size_t> gm_capacity, PipelineTrace* trace) {
    if (event_tokens.empty()) {
        throw std::invalid_argument("pipeline: no events");
    }
    GlobalMemory gm(gm_capacity);
    std::vector<Matrix> tokens;
    tokens.reserve(event_tokens.size());
    for (const std::vector<Matrix>& frames : event_tokens) {
        EventTape* event_tape = trace != nullptr ? &trace->events.emplace_back() : nullptr;
        EventResult res = process_event(std::span<const Matrix>(frames), queries, gm, self_params,
                                        cross_params, event_tape);
        std::vector<MergeStep>* merge_trace =
            trace != nullptr ? &trace->merges.emplace_back() : nullptr;
        gm.append_event(res.bank, merge_trace);
        tokens.push_back(std::move(res.event_token));
    }
    if (trace != nullptr) {
        trace->final_gm_size = gm.size();
    }
    return concat_events(tokens);
}

}  // namespace

double pipeline_loss(const std::vector<std::vector<Matrix>>& event_tokens, const Matrix& queries,
                     const AttentionParams& self_params, const AttentionParams& cross_params,
                     std::optional<std::size_t> gm_capacity, const ToyHead& head,
                     Matrix* z_v_out) {
    const Matrix z_v =
        run_events(event_tokens, queries, self_params, cross_params, gm_capacity, nullptr);
    const HeadLoss hl = head_loss(z_v, head);
    if (z_v_out != nullptr) {
        *z_v_out = z_v;
    }
    return hl.loss;
}

PipelineGradients pipeline_gradients(const std::vector<std::vector<Matrix>>& event_tokens,
                                     const Matrix& queries, const AttentionParams& self_params,
                                     const AttentionParams& cross_params,
                                     std::optional<std::size_t> gm_capacity, const ToyHead& head) {
    PipelineTrace trace;
    const Matrix z_v =
        run_events(event_tokens, queries, self_params, cross_params, gm_capacity, &trace);
    const HeadLoss hl = head_loss(z_v, head);

    const std::size_t dim = queries.rows();
    const std::size_t q = queries.cols();
    const std::size_t event_count = event_tokens.size();
    const bool disabled = gm_capacity && *gm_capacity == 0;

    Matrix d_queries(dim, q);
    // gradient w.r.t. the global memory state after each event's append,
    // walked backwards from the (unconsumed) final state
    std::vector<Matrix> d_gm_after(trace.final_gm_size, Matrix(dim, q));

    for (std::size_t e = event_count; e-- > 0;) {
        const EventTape& tape = trace.events[e];
        const std::size_t steps = tape.self_attn.size();
        const std::size_t before = tape.gm_blocks_before;

        // reverse this event's append+compress: undo merges, then split off
        // the bank gradients from the prior-state gradients
        std::vector<Matrix> d_state = std::move(d_gm_after);
        std::vector<Matrix> d_bank;
        if (disabled) {
            d_bank.assign(steps, Matrix(dim, q));
            d_state.clear();
        } else {
            const std::vector<MergeStep>& merges = trace.merges[e];
            for (auto it = merges.rbegin(); it != merges.rend(); ++it) {
                Matrix half = d_state[it->index];
                half.scale_inplace(0.5);
                d_state[it->index] = half;
                d_state.insert(d_state.begin() + static_cast<std::ptrdiff_t>(it->index + 1),
                               std::move(half));
            }
            d_bank.assign(d_state.begin() + static_cast<std::ptrdiff_t>(before), d_state.end());
            d_state.resize(before, Matrix(dim, q));
        }

        // cross-attention of the final timestep feeds the event token; the
        // local memory branch carries no trainable inputs
        Matrix d_attended_final(dim, q);
        Matrix d_lm_discard(dim, tape.cross_attn.kv_in.cols());
        attention_vjp(tape.cross_attn, cross_params, hl.d_input.col_block(e * q, q),
                      d_attended_final, d_lm_discard);

        for (std::size_t t = steps; t-- > 0;) {
            Matrix d_attended = std::move(d_bank[t]);
            if (t + 1 == steps) {
                d_attended.add_inplace(d_attended_final);
            }
            Matrix d_query_in(dim, q);
            Matrix d_kv(dim, tape.self_attn[t].kv_in.cols());
            attention_vjp(tape.self_attn[t], self_params, d_attended, d_query_in, d_kv);
            d_queries.add_inplace(d_query_in);
            if (before == 0) {
                d_queries.add_inplace(d_kv);  // cold start: keys/values were the queries
            } else {
                for (std::size_t b = 0; b < before; ++b) {
                    d_state[b].add_inplace(d_kv.col_block(b * q, q));
                }
            }
        }
        d_gm_after = std::move(d_state);
    }

    PipelineGradients out;
    out.loss = hl.loss;
    out.z_v = z_v;
    out.d_projection = hl.d_projection;
    out.d_queries = std::move(d_queries);
    return out;
}

}  // namespace hem
