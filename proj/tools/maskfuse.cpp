// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maskfuse/errors.hpp"
#include "maskfuse/pipeline.hpp"

namespace {

using namespace maskfuse;

std::vector<Stage> parse_stage_list(const std::string& csv) {
    std::vector<Stage> stages;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) stages.push_back(parse_stage(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (stages.empty()) throw ConfigError("empty stage list");
    return stages;
}

int cmd_run(const std::string& config_path, int jobs, const std::string& stage_override) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (!stage_override.empty()) cfg.stages = parse_stage_list(stage_override);
    const auto diags = validate_inputs(cfg);
    if (!diags.empty()) {
        for (const auto& d : diags) std::cerr << "error: " << d << "\n";
        return 1;
    }
    const MetricsReport report = run_pipeline(cfg, jobs);
    if (!report.per_dataset.empty()) std::cout << io::render_report_table(report);
    std::cout << "outputs written to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    const PipelineConfig cfg = load_pipeline_config(config_path);
    const auto diags = validate_inputs(cfg);
    for (const auto& d : diags) std::cout << d << "\n";
    if (diags.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

int cmd_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& overlap, int max_dets) {
    const GroundTruth gt = io::load_ground_truth(gt_path);
    const auto preds = io::load_predictions(pred_path);
    EvalParams params;
    params.max_detections = max_dets;
    params.overlap = overlap == "box" ? OverlapKind::BoxIou : OverlapKind::MaskIou;
    const EvalResult r = evaluate(preds, gt, params);
    std::cout << "mAP@0.50:0.95 " << r.map_percent << "\n"
              << "mAR@0.50:0.95 " << r.mar_percent << "\n";
    return 0;
}

int cmd_nms(const std::string& pred_path, const std::string& method, const std::string& overlap,
            double iou_threshold, double sigma, double prune, const std::string& out_path) {
    NmsConfig cfg;
    if (method == "hard") cfg.method = NmsMethod::Hard;
    else if (method == "soft-linear") cfg.method = NmsMethod::SoftLinear;
    else if (method == "soft-gaussian") cfg.method = NmsMethod::SoftGaussian;
    else throw ConfigError("unknown nms method: " + method);
    cfg.overlap = overlap == "mask-iou" ? OverlapKind::MaskIou : OverlapKind::BoxIou;
    cfg.iou_threshold = iou_threshold;
    cfg.sigma = sigma;
    cfg.prune_threshold = prune;

    const auto dets = io::load_predictions(pred_path);
    const auto kept = suppress(dets, cfg);
    io::save_predictions(out_path, kept);
    std::cout << kept.size() << " of " << dets.size() << " detections kept -> " << out_path
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maskfuse: instance-segmentation post-processing and evaluation toolkit"};
    app.require_subcommand(1);

    std::string config_path, stage_override;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "run the configured pipeline");
    run->add_option("--config", config_path, "pipeline config JSON")->required();
    run->add_option("--jobs", jobs, "datasets processed in parallel");
    run->add_option("--stage-override", stage_override, "comma-separated stage list");

    std::string v_config;
    auto* validate = app.add_subcommand("validate", "scan all inputs without running");
    validate->add_option("--config", v_config, "pipeline config JSON")->required();

    std::string gt_path, pred_path, e_overlap = "mask";
    int max_dets = 100;
    auto* eval = app.add_subcommand("eval", "evaluate one prediction file");
    eval->add_option("--gt", gt_path, "ground-truth JSON")->required();
    eval->add_option("--pred", pred_path, "prediction JSON")->required();
    eval->add_option("--overlap", e_overlap, "mask|box");
    eval->add_option("--max-dets", max_dets, "detections kept per image");

    std::string n_pred, n_method = "soft-gaussian", n_overlap = "box-iou",
                n_out = "nms_out.json";
    double n_iou = 0.3, n_sigma = 0.5, n_prune = 0.001;
    auto* nms = app.add_subcommand("nms", "run suppression on one prediction file");
    nms->add_option("--pred", n_pred, "prediction JSON")->required();
    nms->add_option("--method", n_method, "hard|soft-linear|soft-gaussian");
    nms->add_option("--overlap", n_overlap, "box-iou|mask-iou");
    nms->add_option("--iou-threshold", n_iou, "overlap threshold Nt");
    nms->add_option("--sigma", n_sigma, "gaussian decay parameter");
    nms->add_option("--prune-threshold", n_prune, "drop detections below this score");
    nms->add_option("--output", n_out, "output prediction JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, jobs, stage_override);
        if (validate->parsed()) return cmd_validate(v_config);
        if (eval->parsed()) return cmd_eval(gt_path, pred_path, e_overlap, max_dets);
        if (nms->parsed())
            return cmd_nms(n_pred, n_method, n_overlap, n_iou, n_sigma, n_prune, n_out);
    } catch (const maskfuse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
