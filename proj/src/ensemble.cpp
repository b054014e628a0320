// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/ensemble.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

#include "maskfuse/errors.hpp"

namespace maskfuse {

std::map<std::string, double> derive_weights(const std::map<std::string, double>& model_maps) {
    if (model_maps.empty()) throw ConfigError("derive_weights: no models given");
    double best = 0.0;
    for (const auto& [id, m] : model_maps) {
        if (m < 0.0) throw ConfigError("derive_weights: negative mAP for " + id);
        best = std::max(best, m);
    }
    if (best <= 0.0) throw ConfigError("derive_weights: all mAPs are zero");
    std::map<std::string, double> weights;
    for (const auto& [id, m] : model_maps) weights[id] = m / best;
    return weights;
}

std::vector<Detection> ensemble_fuse(const std::vector<PredictionSet>& sets,
                                     const EnsembleConfig& cfg) {
    std::map<std::string, double> derived;
    if (cfg.weights_mode == WeightsMode::MapNormalized) derived = derive_weights(cfg.model_maps);

    // Masks for one image must agree in shape across all sets.
    std::unordered_map<int64_t, std::pair<int, int>> dims;
    for (const auto& set : sets) {
        for (const auto& d : set.detections) {
            auto [it, inserted] = dims.try_emplace(d.image_id, d.mask.height, d.mask.width);
            if (!inserted && it->second != std::make_pair(d.mask.height, d.mask.width))
                throw ContractError("inconsistent mask dimensions for image " +
                                    std::to_string(d.image_id));
        }
    }

    struct Pooled {
        Detection det;
        const std::string* model_id;
        size_t index_in_set;
    };
    std::vector<Pooled> pool;
    for (const auto& set : sets) {
        double w = set.weight;
        if (cfg.weights_mode == WeightsMode::MapNormalized) {
            auto it = derived.find(set.model_id);
            if (it == derived.end())
                throw ConfigError("no mAP entry for model " + set.model_id);
            w = it->second;
        }
        if (w < 0.0) throw ConfigError("negative ensemble weight for model " + set.model_id);
        for (size_t i = 0; i < set.detections.size(); ++i) {
            Detection d = set.detections[i];
            d.score = std::clamp(d.score * w, 0.0, 1.0);
            pool.push_back({std::move(d), &set.model_id, i});
        }
    }

    // Canonical pooled order makes the NMS tie-break independent of set order.
    std::sort(pool.begin(), pool.end(), [](const Pooled& a, const Pooled& b) {
        return std::tie(b.det.score, *a.model_id, a.index_in_set) <
               std::tie(a.det.score, *b.model_id, b.index_in_set);
    });

    std::vector<Detection> pooled;
    pooled.reserve(pool.size());
    for (auto& p : pool) pooled.push_back(std::move(p.det));

    NmsConfig nms = cfg.nms;
    nms.overlap = OverlapKind::MaskIou;
    nms.group = true;
    return suppress(pooled, nms);
}

std::vector<Detection> tta_merge(
    const std::vector<std::pair<ScaleSize, PredictionSet>>& scaled_sets, int original_h,
    int original_w, const EnsembleConfig& cfg) {
    if (original_h <= 0 || original_w <= 0) throw ConfigError("tta_merge: bad original size");
    std::vector<PredictionSet> rescaled;
    rescaled.reserve(scaled_sets.size());
    for (const auto& [scale, set] : scaled_sets) {
        const auto [sh, sw] = scale;
        if (sh <= 0 || sw <= 0) throw ConfigError("tta_merge: zero-area scale");
        PredictionSet out;
        // Scale tag keeps pooled tie-breaking unambiguous across scales of one model.
        out.model_id =
            set.model_id + "@" + std::to_string(sh) + "x" + std::to_string(sw);
        out.weight = 1.0;
        out.detections.reserve(set.detections.size());
        const double fy = static_cast<double>(original_h) / sh;
        const double fx = static_cast<double>(original_w) / sw;
        for (const auto& d : set.detections) {
            Detection r = d;
            r.mask = mask_resize(d.mask, original_h, original_w);
            r.box = Box{d.box.x * fx, d.box.y * fy, d.box.w * fx, d.box.h * fy};
            out.detections.push_back(std::move(r));
        }
        rescaled.push_back(std::move(out));
    }
    EnsembleConfig fuse_cfg = cfg;
    fuse_cfg.weights_mode = WeightsMode::Explicit;
    return ensemble_fuse(rescaled, fuse_cfg);
}

}  // namespace maskfuse
