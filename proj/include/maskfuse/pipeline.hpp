// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskfuse/ensemble.hpp"
#include "maskfuse/eval.hpp"
#include "maskfuse/io.hpp"
#include "maskfuse/semantic_fusion.hpp"

namespace maskfuse {

enum class Stage { SoftNms, SemanticFusion, Ensemble, TtaMerge, Evaluate };

Stage parse_stage(const std::string& name);  // ConfigError on unknown names
std::string stage_name(Stage s);

struct DatasetConfig {
    std::string name;
    std::string gt_path;
    // model_id -> prediction file, iterated in sorted model order.
    std::map<std::string, std::string> prediction_paths;
    std::optional<std::string> semantic_path;     // predicted semantic maps
    std::optional<std::string> semantic_gt_path;  // reference maps for mean-IoU
    std::map<std::string, ScaleSize> scale_tags;  // per model, tta-merge only
};

struct PipelineConfig {
    std::vector<DatasetConfig> datasets;
    std::vector<Stage> stages = {Stage::SoftNms, Stage::SemanticFusion, Stage::Ensemble,
                                 Stage::Evaluate};
    SemanticFusionConfig semantic;
    EnsembleConfig ensemble;
    std::map<std::string, double> ensemble_weights;  // explicit per-model weights
    NmsConfig nms = {NmsMethod::SoftGaussian, OverlapKind::BoxIou, 0.3, 0.5, 0.001, true};
    EvalParams eval;
    // Model receiving semantic fusion and used by evaluate when several sets
    // remain; defaults to the first model in sorted order.
    std::string primary_model;
    std::string output_dir = "out";
};

PipelineConfig load_pipeline_config(const std::string& path);

// Non-mutating scan of every referenced input; empty result means runnable.
std::vector<std::string> validate_inputs(const PipelineConfig& cfg);

// Executes the configured stages per dataset (datasets in parallel up to
// `jobs`), writes fused predictions and the report under output_dir, and
// returns the report. Output bytes are independent of `jobs`.
MetricsReport run_pipeline(const PipelineConfig& cfg, int jobs = 1);

}  // namespace maskfuse
