#include "hem/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "hem/log.hpp"
#include "hem/qformer.hpp"
#include "hem/rng.hpp"
#include "hem/tensor_io.hpp"

namespace hem {

namespace {

constexpr std::uint64_t ROLE_SELF_ATTN = 0x51;
constexpr std::uint64_t ROLE_CROSS_ATTN = 0x52;
constexpr std::uint64_t ROLE_TOY_DATA = 0x77;

template <typename Fn>
void stage(const char* name, Fn&& fn) {
    log_info(std::string("stage ") + name);
    try {
        fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + " stage failed: " + e.what());
    }
}

std::optional<std::size_t> cap_from_json(const nlohmann::json& value) {
    if (value.is_null()) {
        return std::nullopt;  // unbounded
    }
    if (!value.is_number_unsigned()) {
        throw std::invalid_argument("config: global_memory_cap must be a non-negative "
                                    "integer or null");
    }
    return value.get<std::size_t>();
}

std::size_t positive_size(const nlohmann::json& value, const char* key) {
    if (!value.is_number_unsigned() || value.get<std::uint64_t>() == 0) {
        throw std::invalid_argument(std::string("config: ") + key +
                                    " must be a positive integer");
    }
    return value.get<std::size_t>();
}

}  // namespace

void PipelineConfig::validate() const {
    if (num_events < 1) {
        throw std::invalid_argument("config: num_events must be at least 1");
    }
    if (dim < 1 || tokens_per_frame < 1 || query_count < 1 || heads < 1 || classes < 1) {
        throw std::invalid_argument("config: d, p, q, heads, and classes must all be positive");
    }
    if (dim % heads != 0) {
        throw std::invalid_argument("config: d=" + std::to_string(dim) +
                                    " is not divisible by heads=" + std::to_string(heads));
    }
    if (target && *target >= classes) {
        throw std::invalid_argument("config: target " + std::to_string(*target) +
                                    " out of range for " + std::to_string(classes) + " classes");
    }
    if (input_path.empty() || output_path.empty()) {
        throw std::invalid_argument("config: input and output paths must be set");
    }
}

void apply_preset(PipelineConfig& config, const std::string& name) {
    if (name == "vqa") {
        config.num_events = 2;
    } else if (name == "caption" || name == "coin") {
        config.num_events = 3;
    } else if (name == "breakfast") {
        config.num_events = 4;
    } else {
        throw std::invalid_argument("unknown preset \"" + name +
                                    "\" (expected vqa, caption, coin, or breakfast)");
    }
}

PipelineConfig load_pipeline_config(const std::string& text, PipelineConfig base) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("config: expected a JSON object");
    }

    PipelineConfig out = std::move(base);
    if (doc.contains("preset")) {
        apply_preset(out, doc["preset"].get<std::string>());
    }
    for (const auto& [key, value] : doc.items()) {
        if (key == "preset") {
            continue;  // applied first, so explicit keys win
        } else if (key == "num_events") {
            out.num_events = positive_size(value, "num_events");
        } else if (key == "source") {
            out.source = parse_similarity_source(value.get<std::string>());
        } else if (key == "scheme") {
            out.scheme = value.is_number()
                             ? parse_sampling_scheme(std::to_string(value.get<int>()))
                             : parse_sampling_scheme(value.get<std::string>());
        } else if (key == "global_memory_cap") {
            out.global_memory_cap = cap_from_json(value);
        } else if (key == "d") {
            out.dim = positive_size(value, "d");
        } else if (key == "p") {
            out.tokens_per_frame = positive_size(value, "p");
        } else if (key == "q") {
            out.query_count = positive_size(value, "q");
        } else if (key == "heads") {
            out.heads = positive_size(value, "heads");
        } else if (key == "classes") {
            out.classes = positive_size(value, "classes");
        } else if (key == "target") {
            if (value.is_null()) {
                out.target.reset();
            } else if (value.is_number_unsigned()) {
                out.target = value.get<std::size_t>();
            } else {
                throw std::invalid_argument("config: target must be a non-negative integer "
                                            "or null");
            }
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) {
                throw std::invalid_argument("config: seed must be a non-negative integer");
            }
            out.seed = value.get<std::uint64_t>();
        } else if (key == "input") {
            out.input_path = value.get<std::string>();
        } else if (key == "output") {
            out.output_path = value.get<std::string>();
        } else {
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
        }
    }
    return out;
}

std::string z_v_path_for(const std::string& output_path) {
    std::string base = output_path;
    constexpr std::string_view suffix = ".json";
    if (base.size() > suffix.size() && base.ends_with(suffix)) {
        base.resize(base.size() - suffix.size());
    }
    return base + ".zv.hemt";
}

std::string run_report_json(const RunReport& report) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const FrameRange& r : report.event_ranges) {
        ranges.push_back({{"begin", r.begin}, {"end", r.end}});
    }
    nlohmann::json doc{
        {"split_points", report.split_points},
        {"event_ranges", ranges},
        {"event_frame_counts", report.event_frame_counts},
        {"gm_size_trajectory", report.gm_size_trajectory},
        {"z_v_checksum", report.z_v_checksum},
        {"z_v_path", report.z_v_path},
        {"wall_time_seconds", report.wall_time_seconds},
    };
    if (report.loss) {
        doc["loss"] = *report.loss;
    }
    return doc.dump(2) + "\n";
}

RunReport run_pipeline(const PipelineConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    RunReport report;

    Tensor input;
    FrameSequence video;
    std::vector<Matrix> features;
    stage("ingest", [&] {
        input = read_tensor(config.input_path);
        if (input.dims.size() == 4) {
            video = frames_from_tensor(input);
        } else if (input.dims.size() == 3) {
            features = features_from_tensor(input);
            if (features.front().rows() != config.dim ||
                features.front().cols() != config.tokens_per_frame) {
                throw std::invalid_argument(
                    "features are " + std::to_string(features.front().rows()) + "x" +
                    std::to_string(features.front().cols()) + " per frame but the config says d=" +
                    std::to_string(config.dim) + ", p=" + std::to_string(config.tokens_per_frame));
            }
        } else {
            throw std::invalid_argument("input tensor must be rank-4 frames [3,T,H,W] or "
                                        "rank-3 features [T,d,p], got rank " +
                                        std::to_string(input.dims.size()));
        }
    });
    const bool have_frames = !video.empty();
    const std::size_t total_frames = have_frames ? video.size() : features.size();
    log_debug("ingested " + std::to_string(total_frames) +
              (have_frames ? " frames" : " feature timesteps"));

    EventPartition part;
    stage("segment", [&] {
        if (config.num_events > total_frames) {
            throw std::invalid_argument("cannot cut " + std::to_string(total_frames) +
                                        " frames into " + std::to_string(config.num_events) +
                                        " events");
        }
        if (config.num_events == 1) {
            part = partition(total_frames, {});
            return;
        }
        if (!have_frames && config.source == SimilaritySource::raw_avgpool) {
            throw std::invalid_argument("similarity source raw_avgpool needs frame input, "
                                        "but the input holds precomputed features");
        }
        const PooledSequence pooled =
            pool_frames(video, config.source, features.empty() ? nullptr : &features);
        const ScoreSequence scores = adjacent_scores(pooled);
        part = partition(total_frames, select_split_points(scores, config.num_events));
    });
    report.split_points = part.split_points;
    report.event_ranges = part.ranges;
    for (const FrameRange& r : part.ranges) {
        report.event_frame_counts.push_back(r.size());
    }

    Matrix z_v;
    stage("process", [&] {
        std::vector<Matrix> frame_tokens;
        frame_tokens.reserve(total_frames);
        if (have_frames) {
            const ToyEncoderParams enc{config.dim, config.tokens_per_frame, config.seed};
            for (const Frame& f : video.frames) {
                frame_tokens.push_back(toy_encode(f, enc));
            }
        } else {
            frame_tokens = std::move(features);
        }

        const Matrix queries = make_query_tokens(config.dim, config.query_count, config.seed);
        const AttentionParams self_params = AttentionParams::seeded(
            config.dim, config.heads, derive_seed(config.seed, ROLE_SELF_ATTN));
        const AttentionParams cross_params = AttentionParams::seeded(
            config.dim, config.heads, derive_seed(config.seed, ROLE_CROSS_ATTN));

        GlobalMemory gm(config.global_memory_cap);
        std::vector<Matrix> event_tokens;
        event_tokens.reserve(part.event_count());
        for (const FrameRange& r : part.ranges) {
            EventResult res = process_event(
                std::span<const Matrix>(frame_tokens.data() + r.begin, r.size()), queries, gm,
                self_params, cross_params);
            gm.append_event(res.bank);
            report.gm_size_trajectory.push_back(gm.size());
            event_tokens.push_back(std::move(res.event_token));
        }
        z_v = concat_events(event_tokens);

        if (config.target) {
            const ToyHead head = ToyHead::seeded(
                config.classes, z_v.rows() * z_v.cols(), *config.target, config.seed);
            report.loss = head_loss(z_v, head).loss;
        }
    });

    stage("write", [&] {
        const Tensor z_v_tensor = tensor_from_matrix(z_v);
        report.z_v_checksum = tensor_checksum(z_v_tensor);
        report.z_v_path = z_v_path_for(config.output_path);
        write_tensor(report.z_v_path, z_v_tensor);

        const auto elapsed = std::chrono::steady_clock::now() - start;
        report.wall_time_seconds = std::chrono::duration<double>(elapsed).count();

        std::ofstream out(config.output_path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + config.output_path + " for writing");
        }
        out << run_report_json(report);
        if (!out.good()) {
            throw std::runtime_error("cannot write report to " + config.output_path);
        }
    });
    return report;
}

void GradCheckConfig::validate() const {
    if (dim < 1 || dim > 32) {
        throw std::invalid_argument("gradcheck: dim must be in [1, 32]");
    }
    if (num_events < 1 || frames_per_event < 1 ||
        num_events * frames_per_event > 8) {
        throw std::invalid_argument("gradcheck: needs 1..8 total frames, got " +
                                    std::to_string(num_events * frames_per_event));
    }
    if (tokens_per_frame < 1 || query_count < 1 || heads < 1 || dim % heads != 0) {
        throw std::invalid_argument("gradcheck: p and q must be positive and heads must "
                                    "divide dim");
    }
    if (classes < 2) {
        throw std::invalid_argument("gradcheck: need at least 2 classes");
    }
    if (!(epsilon > 0.0) || !(tolerance > 0.0)) {
        throw std::invalid_argument("gradcheck: epsilon and tolerance must be positive");
    }
}

std::string gradcheck_report_json(const GradCheckReport& report) {
    const nlohmann::json doc{
        {"max_rel_error", report.max_rel_error},
        {"epsilon", report.epsilon},
        {"tolerance", report.tolerance},
        {"checked_parameters", report.checked_parameters},
        {"loss", report.loss},
        {"passed", report.passed},
    };
    return doc.dump(2) + "\n";
}

GradCheckReport run_gradcheck(const GradCheckConfig& config) {
    config.validate();

    Rng data_rng(derive_seed(config.seed, ROLE_TOY_DATA));
    std::vector<std::vector<Matrix>> event_tokens(config.num_events);
    for (auto& event : event_tokens) {
        for (std::size_t f = 0; f < config.frames_per_event; ++f) {
            event.push_back(
                data_rng.uniform_matrix(config.dim, config.tokens_per_frame, -0.5, 0.5));
        }
    }

    Matrix queries = make_query_tokens(config.dim, config.query_count, config.seed);
    const AttentionParams self_params = AttentionParams::seeded(
        config.dim, config.heads, derive_seed(config.seed, ROLE_SELF_ATTN));
    const AttentionParams cross_params = AttentionParams::seeded(
        config.dim, config.heads, derive_seed(config.seed, ROLE_CROSS_ATTN));
    ToyHead head = ToyHead::seeded(
        config.classes, config.dim * config.query_count * config.num_events, 1, config.seed);

    PipelineGradients analytic =
        pipeline_gradients(event_tokens, queries, self_params, cross_params,
                           config.global_memory_cap, head);
    if (config.corrupt_analytic) {
        analytic.d_queries.at(0, 0) += 0.5;
    }

    const auto loss_now = [&] {
        return pipeline_loss(event_tokens, queries, self_params, cross_params,
                             config.global_memory_cap, head);
    };
    const auto rel_error = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
    };

    GradCheckReport report;
    report.epsilon = config.epsilon;
    report.tolerance = config.tolerance;
    report.loss = analytic.loss;

    const auto check_entry = [&](double& value, double analytic_grad) {
        const double saved = value;
        value = saved + config.epsilon;
        const double loss_plus = loss_now();
        value = saved - config.epsilon;
        const double loss_minus = loss_now();
        value = saved;
        const double fd = (loss_plus - loss_minus) / (2.0 * config.epsilon);
        report.max_rel_error = std::max(report.max_rel_error, rel_error(analytic_grad, fd));
        ++report.checked_parameters;
    };

    for (std::size_t r = 0; r < queries.rows(); ++r) {
        for (std::size_t c = 0; c < queries.cols(); ++c) {
            check_entry(queries.at(r, c), analytic.d_queries.at(r, c));
        }
    }
    for (std::size_t r = 0; r < head.projection.rows(); ++r) {
        for (std::size_t c = 0; c < head.projection.cols(); ++c) {
            check_entry(head.projection.at(r, c), analytic.d_projection.at(r, c));
        }
    }

    report.passed = report.max_rel_error < config.tolerance;
    log_info("gradcheck max relative error " + std::to_string(report.max_rel_error) + " over " +
             std::to_string(report.checked_parameters) + " parameters");
    return report;
}

}  // namespace hem
