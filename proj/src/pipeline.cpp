// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "maskfuse/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using nlohmann::json;
namespace fs = std::filesystem;

namespace maskfuse {

Stage parse_stage(const std::string& name) {
    if (name == "soft-nms") return Stage::SoftNms;
    if (name == "semantic-fusion") return Stage::SemanticFusion;
    if (name == "ensemble") return Stage::Ensemble;
    if (name == "tta-merge") return Stage::TtaMerge;
    if (name == "evaluate") return Stage::Evaluate;
    throw ConfigError("unknown stage: " + name);
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::SoftNms: return "soft-nms";
        case Stage::SemanticFusion: return "semantic-fusion";
        case Stage::Ensemble: return "ensemble";
        case Stage::TtaMerge: return "tta-merge";
        case Stage::Evaluate: return "evaluate";
    }
    return "?";
}

namespace {

NmsMethod parse_nms_method(const std::string& s) {
    if (s == "hard") return NmsMethod::Hard;
    if (s == "soft-linear") return NmsMethod::SoftLinear;
    if (s == "soft-gaussian") return NmsMethod::SoftGaussian;
    throw ConfigError("unknown nms method: " + s);
}

OverlapKind parse_overlap(const std::string& s) {
    if (s == "box-iou" || s == "box") return OverlapKind::BoxIou;
    if (s == "mask-iou" || s == "mask") return OverlapKind::MaskIou;
    throw ConfigError("unknown overlap kind: " + s);
}

NmsConfig nms_from_json(const json& j, const NmsConfig& base) {
    NmsConfig cfg = base;
    if (j.contains("method")) cfg.method = parse_nms_method(j["method"].get<std::string>());
    if (j.contains("overlap")) cfg.overlap = parse_overlap(j["overlap"].get<std::string>());
    if (j.contains("iou_threshold")) cfg.iou_threshold = j["iou_threshold"].get<double>();
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    if (j.contains("prune_threshold")) cfg.prune_threshold = j["prune_threshold"].get<double>();
    return cfg;
}

}  // namespace

namespace {

// Input paths in the config are resolved against the config file's directory;
// output_dir stays relative to the working directory.
std::string resolve(const fs::path& base, const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).lexically_normal().string();
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("parse error in " + path + " at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }

    const fs::path base = fs::path(path).parent_path();
    PipelineConfig cfg;
    for (const auto& d : j.at("datasets")) {
        DatasetConfig ds;
        ds.name = d.at("name").get<std::string>();
        ds.gt_path = resolve(base, d.at("gt_path").get<std::string>());
        for (const auto& [model, val] : d.at("prediction_paths").items()) {
            if (val.is_string()) {
                ds.prediction_paths[model] = resolve(base, val.get<std::string>());
            } else {
                ds.prediction_paths[model] = resolve(base, val.at("path").get<std::string>());
                if (val.contains("scale"))
                    ds.scale_tags[model] = {val["scale"].at(0).get<int>(),
                                            val["scale"].at(1).get<int>()};
            }
        }
        if (d.contains("semantic_path"))
            ds.semantic_path = resolve(base, d["semantic_path"].get<std::string>());
        if (d.contains("semantic_gt_path"))
            ds.semantic_gt_path = resolve(base, d["semantic_gt_path"].get<std::string>());
        cfg.datasets.push_back(std::move(ds));
    }

    if (j.contains("stages")) {
        cfg.stages.clear();
        for (const auto& s : j["stages"]) cfg.stages.push_back(parse_stage(s.get<std::string>()));
    }
    if (cfg.stages.empty()) throw ConfigError("stage list must be non-empty");

    if (j.contains("semantic")) {
        const auto& s = j["semantic"];
        if (s.contains("tau1")) cfg.semantic.tau1 = s["tau1"].get<double>();
        if (s.contains("region_rule")) {
            const std::string r = s["region_rule"].get<std::string>();
            if (r == "bbox-clip") cfg.semantic.region_rule = RegionRule::BboxClip;
            else if (r == "whole-image") cfg.semantic.region_rule = RegionRule::WholeImage;
            else throw ConfigError("unknown region_rule: " + r);
        }
    }
    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        if (e.contains("weights_mode")) {
            const std::string m = e["weights_mode"].get<std::string>();
            if (m == "explicit") cfg.ensemble.weights_mode = WeightsMode::Explicit;
            else if (m == "map-normalized") cfg.ensemble.weights_mode = WeightsMode::MapNormalized;
            else throw ConfigError("unknown weights_mode: " + m);
        }
        if (e.contains("model_maps"))
            for (const auto& [k, v] : e["model_maps"].items())
                cfg.ensemble.model_maps[k] = v.get<double>();
        if (e.contains("weights"))
            for (const auto& [k, v] : e["weights"].items())
                cfg.ensemble_weights[k] = v.get<double>();
        if (e.contains("nms")) cfg.ensemble.nms = nms_from_json(e["nms"], cfg.ensemble.nms);
    }
    if (j.contains("nms")) cfg.nms = nms_from_json(j["nms"], cfg.nms);
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        if (e.contains("max_detections")) cfg.eval.max_detections = e["max_detections"].get<int>();
        if (e.contains("overlap")) cfg.eval.overlap = parse_overlap(e["overlap"].get<std::string>());
        if (e.contains("iou_thresholds")) {
            cfg.eval.iou_thresholds.clear();
            for (const auto& t : e["iou_thresholds"])
                cfg.eval.iou_thresholds.push_back(t.get<double>());
        }
    }
    if (j.contains("primary_model")) cfg.primary_model = j["primary_model"].get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

    for (const auto& ds : cfg.datasets) {
        const bool tta = std::find(cfg.stages.begin(), cfg.stages.end(), Stage::TtaMerge) !=
                         cfg.stages.end();
        if (tta && ds.scale_tags.size() != ds.prediction_paths.size())
            throw ConfigError("tta-merge requires a scale tag on every prediction file (dataset " +
                              ds.name + ")");
    }
    return cfg;
}

std::vector<std::string> validate_inputs(const PipelineConfig& cfg) {
    std::vector<std::string> diags;
    for (const auto& ds : cfg.datasets) {
        if (!fs::exists(ds.gt_path)) {
            diags.push_back(ds.gt_path + ": file not found");
            continue;
        }
        auto gt_diags = io::scan_ground_truth_file(ds.gt_path);
        diags.insert(diags.end(), gt_diags.begin(), gt_diags.end());

        GroundTruth gt;
        const GroundTruth* gt_ptr = nullptr;
        if (gt_diags.empty()) {
            try {
                gt = io::load_ground_truth(ds.gt_path);
                gt_ptr = &gt;
            } catch (const std::exception& e) {
                diags.push_back(e.what());
            }
        }
        for (const auto& [model, path] : ds.prediction_paths) {
            if (!fs::exists(path)) {
                diags.push_back(path + ": file not found");
                continue;
            }
            auto d = io::scan_prediction_file(path, gt_ptr);
            diags.insert(diags.end(), d.begin(), d.end());
        }
        for (const auto& sem : {ds.semantic_path, ds.semantic_gt_path}) {
            if (!sem) continue;
            if (!fs::exists(*sem)) {
                diags.push_back(*sem + ": file not found");
                continue;
            }
            auto d = io::scan_semantic_file(*sem, gt_ptr);
            diags.insert(diags.end(), d.begin(), d.end());
        }
    }
    return diags;
}

namespace {

struct DatasetOutcome {
    DatasetMetrics metrics;
    bool evaluated = false;
    std::optional<double> semantic_miou;
    std::vector<Detection> fused;  // detections at end of the stage list
};

// Keyed, ordered detection sets flowing through the stages.
using SetMap = std::vector<std::pair<std::string, std::vector<Detection>>>;

std::string pick_primary(const PipelineConfig& cfg, const SetMap& sets) {
    if (!cfg.primary_model.empty()) return cfg.primary_model;
    return sets.empty() ? std::string{} : sets.front().first;
}

DatasetOutcome run_dataset(const PipelineConfig& cfg, const DatasetConfig& ds) {
    const GroundTruth gt = io::load_ground_truth(ds.gt_path);

    SetMap sets;
    for (const auto& [model, path] : ds.prediction_paths) {
        sets.emplace_back(model, io::load_predictions(path));
    }

    DatasetOutcome out;
    for (Stage stage : cfg.stages) {
        switch (stage) {
            case Stage::SoftNms: {
                for (auto& [model, dets] : sets) dets = suppress(dets, cfg.nms);
                break;
            }
            case Stage::SemanticFusion: {
                if (!ds.semantic_path) break;  // stage is a no-op without maps
                const auto maps = io::load_semantic_maps(*ds.semantic_path);
                std::unordered_map<int64_t, const SemanticMap*> by_image;
                for (const auto& m : maps) by_image[m.image_id] = &m;
                const std::string primary = pick_primary(cfg, sets);
                for (auto& [model, dets] : sets) {
                    if (model != primary) continue;
                    std::vector<Detection> fused;
                    fused.reserve(dets.size());
                    // Fuse per image, preserving input order.
                    std::unordered_map<int64_t, std::vector<size_t>> groups;
                    for (size_t i = 0; i < dets.size(); ++i)
                        groups[dets[i].image_id].push_back(i);
                    std::vector<Detection> result = dets;
                    for (const auto& [img, idxs] : groups) {
                        auto it = by_image.find(img);
                        if (it == by_image.end()) continue;  // no map, leave unchanged
                        std::vector<Detection> sub;
                        for (size_t i : idxs) sub.push_back(dets[i]);
                        sub = fuse_semantic(sub, *it->second, cfg.semantic);
                        for (size_t k = 0; k < idxs.size(); ++k) result[idxs[k]] = sub[k];
                    }
                    dets = std::move(result);
                }
                break;
            }
            case Stage::Ensemble: {
                EnsembleConfig ecfg = cfg.ensemble;
                std::vector<PredictionSet> pools;
                for (auto& [model, dets] : sets) {
                    PredictionSet ps;
                    ps.model_id = model;
                    auto w = cfg.ensemble_weights.find(model);
                    ps.weight = w != cfg.ensemble_weights.end() ? w->second : 1.0;
                    ps.detections = std::move(dets);
                    pools.push_back(std::move(ps));
                }
                auto fused = ensemble_fuse(pools, ecfg);
                sets.clear();
                sets.emplace_back("fused", std::move(fused));
                break;
            }
            case Stage::TtaMerge: {
                // Per image: rescale every set to the image's resolution, fuse.
                std::unordered_map<int64_t, std::pair<int, int>> dims;
                std::vector<int64_t> image_order;
                for (const auto& im : gt.images) {
                    dims[im.id] = {im.height, im.width};
                    image_order.push_back(im.id);
                }
                std::sort(image_order.begin(), image_order.end());

                std::vector<Detection> merged;
                for (int64_t img : image_order) {
                    std::vector<std::pair<ScaleSize, PredictionSet>> scaled;
                    for (const auto& [model, dets] : sets) {
                        PredictionSet ps;
                        ps.model_id = model;
                        ps.weight = 1.0;
                        for (const auto& d : dets)
                            if (d.image_id == img) ps.detections.push_back(d);
                        scaled.emplace_back(ds.scale_tags.at(model), std::move(ps));
                    }
                    const auto [h, w] = dims.at(img);
                    auto fused = tta_merge(scaled, h, w, cfg.ensemble);
                    merged.insert(merged.end(), fused.begin(), fused.end());
                }
                sets.clear();
                sets.emplace_back("fused", std::move(merged));
                break;
            }
            case Stage::Evaluate: {
                const std::string primary = pick_primary(cfg, sets);
                const std::vector<Detection>* eval_dets = nullptr;
                for (const auto& [model, dets] : sets)
                    if (model == primary || sets.size() == 1) eval_dets = &dets;
                if (!eval_dets) throw ConfigError("evaluate: primary model not found");
                const EvalResult r = evaluate(*eval_dets, gt, cfg.eval);
                out.metrics = {r.map_percent, r.mar_percent};
                out.evaluated = true;
                if (ds.semantic_path && ds.semantic_gt_path) {
                    out.semantic_miou =
                        semantic_mean_iou(io::load_semantic_maps(*ds.semantic_path),
                                          io::load_semantic_maps(*ds.semantic_gt_path));
                }
                break;
            }
        }
    }

    const std::string primary = pick_primary(cfg, sets);
    for (auto& [model, dets] : sets) {
        if (model == primary || sets.size() == 1) out.fused = std::move(dets);
    }
    return out;
}

}  // namespace

MetricsReport run_pipeline(const PipelineConfig& cfg, int jobs) {
    if (cfg.stages.empty()) throw ConfigError("stage list must be non-empty");
    if (jobs < 1) jobs = 1;
    fs::create_directories(cfg.output_dir);

    const int64_t n = static_cast<int64_t>(cfg.datasets.size());
    std::vector<DatasetOutcome> outcomes(cfg.datasets.size());
    if (jobs == 1 || n == 1) {
        // Keep the inner kernels' parallelism instead of nesting.
        for (int64_t i = 0; i < n; ++i) {
            outcomes[static_cast<size_t>(i)] =
                run_dataset(cfg, cfg.datasets[static_cast<size_t>(i)]);
        }
    } else {
        std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
        for (int64_t i = 0; i < n; ++i) {
            try {
                outcomes[static_cast<size_t>(i)] =
                    run_dataset(cfg, cfg.datasets[static_cast<size_t>(i)]);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    }

    std::map<std::string, DatasetMetrics> per_dataset;
    std::map<std::string, double> mious;
    for (size_t i = 0; i < cfg.datasets.size(); ++i) {
        const auto& ds = cfg.datasets[i];
        io::save_predictions((fs::path(cfg.output_dir) / (ds.name + "_fused.json")).string(),
                             outcomes[i].fused);
        if (outcomes[i].evaluated) per_dataset[ds.name] = outcomes[i].metrics;
        if (outcomes[i].semantic_miou) mious[ds.name] = *outcomes[i].semantic_miou;
    }

    MetricsReport report;
    if (!per_dataset.empty()) {
        report = aggregate_report(per_dataset, mious);
        io::save_report((fs::path(cfg.output_dir) / "report.json").string(), report);
        std::ofstream table((fs::path(cfg.output_dir) / "report.txt").string());
        table << io::render_report_table(report);
    }
    return report;
}

}  // namespace maskfuse
