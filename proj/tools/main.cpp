#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hem/pipeline.hpp"
#include "hem/sampler.hpp"
#include "hem/segmentation.hpp"
#include "hem/tensor_io.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

// "--cap" accepts a block count, or inf/none for an unbounded memory.
std::optional<std::size_t> parse_cap(const std::string& text) {
    if (text == "inf" || text == "none") {
        return std::nullopt;
    }
    std::size_t consumed = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != text.size()) {
        throw std::invalid_argument("--cap expects a non-negative integer, \"inf\", or \"none\"");
    }
    return static_cast<std::size_t>(value);
}

/// Writes to the given path, or to standard output when the path is empty.
void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + output_path + " for writing");
    }
    out << text;
    if (!out.good()) {
        throw std::runtime_error("cannot write " + output_path);
    }
}

struct SegmentOutcome {
    std::size_t frame_count = 0;
    hem::ScoreSequence scores;  // empty in the single-event case
    hem::EventPartition part;
};

SegmentOutcome segment_file(const std::string& path, hem::SimilaritySource source,
                            std::size_t events) {
    const hem::Tensor tensor = hem::read_tensor(path);
    hem::FrameSequence video;
    std::vector<hem::Matrix> features;
    if (tensor.dims.size() == 4) {
        video = hem::frames_from_tensor(tensor);
    } else if (tensor.dims.size() == 3) {
        features = hem::features_from_tensor(tensor);
    } else {
        throw std::invalid_argument("input tensor must be rank-4 frames [3,T,H,W] or rank-3 "
                                    "features [T,d,p], got rank " +
                                    std::to_string(tensor.dims.size()));
    }

    SegmentOutcome out;
    out.frame_count = video.empty() ? features.size() : video.size();
    if (events > out.frame_count) {
        throw std::invalid_argument("cannot cut " + std::to_string(out.frame_count) +
                                    " frames into " + std::to_string(events) + " events");
    }
    if (events == 1) {
        out.part = hem::partition(out.frame_count, {});
        return out;
    }
    if (video.empty() && source == hem::SimilaritySource::raw_avgpool) {
        throw std::invalid_argument("similarity source raw_avgpool needs frame input, but " +
                                    path + " holds precomputed features");
    }
    const hem::PooledSequence pooled =
        hem::pool_frames(video, source, features.empty() ? nullptr : &features);
    out.scores = hem::adjacent_scores(pooled);
    out.part = hem::partition(out.frame_count, hem::select_split_points(out.scores, events));
    return out;
}

nlohmann::json ranges_json(const std::vector<hem::FrameRange>& ranges) {
    nlohmann::json out = nlohmann::json::array();
    for (const hem::FrameRange& r : ranges) {
        out.push_back({{"begin", r.begin}, {"end", r.end}});
    }
    return out;
}

int cmd_segment(const std::string& input, std::size_t events, const std::string& source_name,
                const std::string& output) {
    const hem::SimilaritySource source = hem::parse_similarity_source(source_name);
    const SegmentOutcome outcome = segment_file(input, source, events);
    const nlohmann::json doc{
        {"input", input},
        {"frame_count", outcome.frame_count},
        {"source", hem::similarity_source_name(source)},
        {"scores", outcome.scores.scores},
        {"split_points", outcome.part.split_points},
        {"event_ranges", ranges_json(outcome.part.ranges)},
    };
    emit(doc.dump(2) + "\n", output);
    return 0;
}

int cmd_sample(const std::vector<std::string>& inputs, const std::string& scheme_name,
               const std::string& source_name, const std::string& output) {
    const hem::SamplingScheme scheme = hem::parse_sampling_scheme(scheme_name);
    const hem::SimilaritySource source = hem::parse_similarity_source(source_name);

    // Sampling plans cover the two-event case: each input contributes its own
    // boundary, and the whole batch shares one frame count.
    hem::SampleRequest request;
    for (const std::string& path : inputs) {
        const SegmentOutcome outcome = segment_file(path, source, 2);
        if (request.split_points.empty()) {
            request.total_frames = outcome.frame_count;
        } else if (outcome.frame_count != request.total_frames) {
            throw std::invalid_argument("batch inputs disagree on frame count: " + path +
                                        " has " + std::to_string(outcome.frame_count) +
                                        " frames, expected " +
                                        std::to_string(request.total_frames));
        }
        request.split_points.push_back(outcome.part.split_points.front());
    }

    const hem::SamplePlan plan = hem::sample(request, scheme);
    nlohmann::json items = nlohmann::json::array();
    for (const hem::SampleItem& item : plan.items) {
        items.push_back({{"segment1", item.segment1}, {"segment2", item.segment2}});
    }
    const nlohmann::json doc{
        {"inputs", inputs},
        {"total_frames", request.total_frames},
        {"split_points", request.split_points},
        {"scheme", static_cast<int>(scheme)},
        {"items", items},
    };
    emit(doc.dump(2) + "\n", output);
    return 0;
}

int cmd_run(const hem::PipelineConfig& config) {
    const hem::RunReport report = hem::run_pipeline(config);
    std::size_t total = 0;
    for (std::size_t n : report.event_frame_counts) {
        total += n;
    }
    std::cout << "run: " << total << " frames -> " << report.event_ranges.size()
              << " events; Z_v " << report.z_v_path << " (" << report.z_v_checksum
              << "); report " << config.output_path;
    if (report.loss) {
        std::cout << "; loss " << *report.loss;
    }
    std::cout << "\n";
    return 0;
}

int cmd_gradcheck(const hem::GradCheckConfig& config, const std::string& output) {
    const hem::GradCheckReport report = hem::run_gradcheck(config);
    std::printf("gradcheck: max relative error %.3e over %zu parameters "
                "(epsilon %g, tolerance %g): %s\n",
                report.max_rel_error, report.checked_parameters, report.epsilon,
                report.tolerance, report.passed ? "PASS" : "FAIL");
    if (!output.empty()) {
        emit(hem::gradcheck_report_json(report), output);
    }
    return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical event memory video front-end"};
    app.require_subcommand(1);

    auto* seg = app.add_subcommand("segment", "Split a video into events at the lowest "
                                              "adjacent-frame similarities");
    std::string seg_input;
    std::size_t seg_events = 2;
    std::string seg_source = "raw_avgpool";
    std::string seg_output;
    seg->add_option("--input,-i", seg_input, "HEMT or JSON tensor file")->required();
    seg->add_option("--events,-k", seg_events, "number of events K")->check(CLI::PositiveNumber);
    seg->add_option("--source", seg_source, "similarity source: raw, feat_avg, or feat_cls");
    seg->add_option("--output,-o", seg_output, "write the JSON result here instead of stdout");

    auto* smp = app.add_subcommand("sample", "Batched two-segment frame sampling around each "
                                             "input's event boundary");
    std::vector<std::string> smp_inputs;
    std::string smp_scheme = "1";
    std::string smp_source = "raw_avgpool";
    std::string smp_output;
    smp->add_option("--input,-i", smp_inputs, "tensor files; repeat for a batch")->required();
    smp->add_option("--scheme", smp_scheme, "sampling scheme: 1 or 2");
    smp->add_option("--source", smp_source, "similarity source: raw, feat_avg, or feat_cls");
    smp->add_option("--output,-o", smp_output, "write the JSON plan here instead of stdout");

    auto* run = app.add_subcommand("run", "Full pass: segment, build memories, attend, and "
                                          "write Z_v plus a JSON report");
    std::string run_config_path;
    std::string run_input;
    std::string run_output;
    std::string run_preset;
    std::size_t run_events = 0;
    std::string run_scheme;
    std::string run_source;
    std::string run_cap;
    std::uint64_t run_seed = 0;
    std::size_t run_target = 0;
    run->add_option("--config", run_config_path, "JSON config file (flags override it)");
    run->add_option("--input,-i", run_input, "HEMT or JSON tensor file");
    run->add_option("--output,-o", run_output, "report path; Z_v lands next to it");
    run->add_option("--preset", run_preset, "event-count preset: vqa, caption, coin, breakfast");
    run->add_option("--events,-k", run_events, "number of events K")->check(CLI::PositiveNumber);
    run->add_option("--scheme", run_scheme, "sampling scheme: 1 or 2");
    run->add_option("--source", run_source, "similarity source: raw, feat_avg, or feat_cls");
    run->add_option("--cap", run_cap, "global memory block cap; inf or none for unbounded");
    run->add_option("--seed", run_seed, "RNG seed for all derived parameters");
    run->add_option("--target", run_target, "toy-head target class; enables the loss field");

    auto* gc = app.add_subcommand("gradcheck", "Verify analytic pipeline gradients against "
                                               "central finite differences");
    hem::GradCheckConfig gc_config;
    std::string gc_cap;
    std::string gc_output;
    gc->add_option("--dim", gc_config.dim, "embedding size d (at most 32)");
    gc->add_option("--tokens", gc_config.tokens_per_frame, "tokens per frame p");
    gc->add_option("--queries", gc_config.query_count, "query token count q");
    gc->add_option("--heads", gc_config.heads, "attention heads");
    gc->add_option("--classes", gc_config.classes, "toy-head classes");
    gc->add_option("--events,-k", gc_config.num_events, "number of events K");
    gc->add_option("--frames", gc_config.frames_per_event, "frames per event");
    gc->add_option("--cap", gc_cap, "global memory block cap; inf or none for unbounded");
    gc->add_option("--seed", gc_config.seed, "RNG seed");
    gc->add_option("--epsilon", gc_config.epsilon, "finite-difference step");
    gc->add_option("--tolerance", gc_config.tolerance, "max accepted relative error");
    gc->add_option("--output,-o", gc_output, "write the JSON report here as well");
    gc->add_flag("--corrupt", gc_config.corrupt_analytic,
                 "negative control: break one analytic gradient entry")
        ->group("");  // hidden test hook

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*seg) {
            return cmd_segment(seg_input, seg_events, seg_source, seg_output);
        }
        if (*smp) {
            return cmd_sample(smp_inputs, smp_scheme, smp_source, smp_output);
        }
        if (*run) {
            hem::PipelineConfig config;
            if (!run_config_path.empty()) {
                config = hem::load_pipeline_config(slurp(run_config_path), config);
            }
            if (run->count("--preset") > 0) {
                hem::apply_preset(config, run_preset);
            }
            if (run->count("--input") > 0) {
                config.input_path = run_input;
            }
            if (run->count("--output") > 0) {
                config.output_path = run_output;
            }
            if (run->count("--events") > 0) {
                config.num_events = run_events;
            }
            if (run->count("--scheme") > 0) {
                config.scheme = hem::parse_sampling_scheme(run_scheme);
            }
            if (run->count("--source") > 0) {
                config.source = hem::parse_similarity_source(run_source);
            }
            if (run->count("--cap") > 0) {
                config.global_memory_cap = parse_cap(run_cap);
            }
            if (run->count("--seed") > 0) {
                config.seed = run_seed;
            }
            if (run->count("--target") > 0) {
                config.target = run_target;
            }
            return cmd_run(config);
        }
        if (*gc) {
            if (gc->count("--cap") > 0) {
                gc_config.global_memory_cap = parse_cap(gc_cap);
            }
            return cmd_gradcheck(gc_config, gc_output);
        }
    } catch (const std::exception& e) {
        std::cerr << "hem: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
