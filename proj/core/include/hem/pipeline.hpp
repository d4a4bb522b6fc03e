#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hem/memory.hpp"
#include "hem/sampler.hpp"
#include "hem/segmentation.hpp"

namespace hem {

/// Everything one full pass needs. Field names follow the config keys:
/// num_events K, d, p, q, heads, classes c, seed.
struct PipelineConfig {
    std::size_t num_events = 2;
    SimilaritySource source = SimilaritySource::raw_avgpool;
    SamplingScheme scheme = SamplingScheme::scheme1;
    std::optional<std::size_t> global_memory_cap = GlobalMemory::DEFAULT_CAPACITY;
    std::size_t dim = 64;              // d, token embedding size
    std::size_t tokens_per_frame = 16;  // p
    std::size_t query_count = 32;      // q
    std::size_t heads = 1;             // h
    std::size_t classes = 4;           // c, toy-head output size
    std::optional<std::size_t> target;  // when set, the report carries a loss
    std::uint64_t seed = 42;
    std::string input_path;
    std::string output_path;

    void validate() const;
};

/// Named event-count defaults: vqa 2, caption 3, coin 3, breakfast 4.
void apply_preset(PipelineConfig& config, const std::string& name);

/// Merges the JSON object in `text` onto `base`. Unknown keys are errors.
PipelineConfig load_pipeline_config(const std::string& text, PipelineConfig base = {});

/// Where a run writes the Z_v tensor: the report path with a trailing
/// ".json" stripped, plus ".zv.hemt".
std::string z_v_path_for(const std::string& output_path);

struct RunReport {
    std::vector<std::size_t> split_points;
    std::vector<FrameRange> event_ranges;
    std::vector<std::size_t> event_frame_counts;
    std::vector<std::size_t> gm_size_trajectory;  // after each event's append
    std::string z_v_checksum;
    std::string z_v_path;
    std::optional<double> loss;
    double wall_time_seconds = 0.0;
};

std::string run_report_json(const RunReport& report);

/// Full pass: ingest -> segment -> process -> write. Writes the Z_v tensor
/// and the JSON report; any failure carries the stage name in its message.
RunReport run_pipeline(const PipelineConfig& config);

/// Finite-difference verification of the analytic pipeline gradients on a
/// toy instance (dim <= 32, at most 8 frames total).
struct GradCheckConfig {
    std::size_t dim = 8;
    std::size_t tokens_per_frame = 4;
    std::size_t query_count = 3;
    std::size_t heads = 2;
    std::size_t classes = 3;
    std::size_t num_events = 2;
    std::size_t frames_per_event = 3;
    std::optional<std::size_t> global_memory_cap = 2;  // small, so merges are exercised
    std::uint64_t seed = 42;
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    bool corrupt_analytic = false;  // negative-control hook: breaks one gradient entry

    void validate() const;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double epsilon = 0.0;
    double tolerance = 0.0;
    std::size_t checked_parameters = 0;
    double loss = 0.0;
    bool passed = false;
};

std::string gradcheck_report_json(const GradCheckReport& report);

GradCheckReport run_gradcheck(const GradCheckConfig& config);

}  // namespace hem
