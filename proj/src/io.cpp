// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "maskfuse/errors.hpp"

using nlohmann::json;

namespace maskfuse::io {

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("parse error in " + path + " at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
}

RleMask rle_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("size") || !j.contains("counts"))
        throw InputError(where + ": segmentation must be {\"size\":[H,W],\"counts\":[...]}");
    RleMask rle;
    rle.height = j["size"].at(0).get<int>();
    rle.width = j["size"].at(1).get<int>();
    for (const auto& c : j["counts"]) {
        const int64_t v = c.get<int64_t>();
        if (v < 0) throw InputError(where + ": negative RLE count");
        rle.counts.push_back(static_cast<uint32_t>(v));
    }
    return rle;
}

json rle_to_json(const RleMask& rle) {
    return json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Box box_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw InputError(where + ": bbox must be [x,y,w,h]");
    return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

Detection detection_from_json(const json& j, const std::string& where) {
    Detection d;
    d.image_id = j.at("image_id").get<int64_t>();
    d.category_id = j.at("category_id").get<int>();
    d.score = j.at("score").get<double>();
    if (d.score < 0.0 || d.score > 1.0) throw InputError(where + ": score outside [0,1]");
    d.box = box_from_json(j.at("bbox"), where);
    const RleMask rle = rle_from_json(j.at("segmentation"), where);
    try {
        d.mask = rle_decode(rle);
    } catch (const InputError& e) {
        throw InputError(where + ": " + e.what());
    }
    return d;
}

}  // namespace

GroundTruth load_ground_truth(const std::string& path) {
    const json j = parse_file(path);
    GroundTruth gt;
    for (const auto& im : j.at("images")) {
        gt.images.push_back({im.at("id").get<int64_t>(), im.at("height").get<int>(),
                             im.at("width").get<int>()});
    }
    for (const auto& c : j.at("categories")) {
        gt.categories.push_back({c.at("id").get<int>(), c.value("name", std::string{})});
    }
    size_t idx = 0;
    for (const auto& a : j.at("annotations")) {
        const std::string where = path + " annotation[" + std::to_string(idx++) + "]";
        GtAnnotation ann;
        ann.image_id = a.at("image_id").get<int64_t>();
        ann.category_id = a.at("category_id").get<int>();
        ann.mask = rle_from_json(a.at("segmentation"), where);
        ann.box = box_from_json(a.at("bbox"), where);
        const int64_t total = static_cast<int64_t>(ann.mask.height) * ann.mask.width;
        int64_t sum = 0;
        for (uint32_t c : ann.mask.counts) sum += c;
        if (sum != total) throw InputError(where + ": RLE counts sum mismatch");
        gt.annotations.push_back(std::move(ann));
    }
    return gt;
}

std::vector<Detection> load_predictions(const std::string& path) {
    const json j = parse_file(path);
    if (!j.is_array()) throw InputError(path + ": prediction file must be a JSON array");
    std::vector<Detection> dets;
    dets.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        dets.push_back(detection_from_json(j[i], path + " record[" + std::to_string(i) + "]"));
    }
    return dets;
}

std::vector<SemanticMap> load_semantic_maps(const std::string& path) {
    const json j = parse_file(path);
    if (!j.is_array()) throw InputError(path + ": semantic file must be a JSON array");
    std::vector<SemanticMap> maps;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string where = path + " record[" + std::to_string(i) + "]";
        SemanticMap m;
        m.image_id = j[i].at("image_id").get<int64_t>();
        try {
            m.mask = rle_decode(rle_from_json(j[i].at("segmentation"), where));
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

void save_predictions(const std::string& path, const std::vector<Detection>& dets) {
    json out = json::array();
    for (const auto& d : dets) {
        out.push_back({{"image_id", d.image_id},
                       {"category_id", d.category_id},
                       {"score", d.score},
                       {"bbox", {d.box.x, d.box.y, d.box.w, d.box.h}},
                       {"segmentation", rle_to_json(rle_encode(d.mask))}});
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << out.dump(2) << "\n";
}

void save_report(const std::string& path, const MetricsReport& report) {
    json per = json::object();
    for (const auto& [name, m] : report.per_dataset) {
        per[name] = {{"mAP", m.map_percent}, {"mAR", m.mar_percent}};
    }
    json out = {{"per_dataset", per},
                {"average_mAP", report.average_map},
                {"average_mAR", report.average_mar},
                {"combined", report.combined}};
    if (!report.semantic_miou.empty()) {
        json miou = json::object();
        for (const auto& [name, v] : report.semantic_miou) miou[name] = v;
        out["semantic_mean_iou"] = miou;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << out.dump(2) << "\n";
}

std::string render_report_table(const MetricsReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    size_t name_w = 7;  // "Average"
    for (const auto& [name, m] : report.per_dataset) name_w = std::max(name_w, name.size());

    os << std::setw(12) << std::left << "" << std::right;
    for (const auto& [name, m] : report.per_dataset)
        os << std::setw(static_cast<int>(name_w) + 2) << name;
    os << std::setw(static_cast<int>(name_w) + 2) << "Average"
       << std::setw(14) << "(mAP+mAR)/2" << "\n";

    os << std::setw(12) << std::left << "mAP" << std::right;
    for (const auto& [name, m] : report.per_dataset)
        os << std::setw(static_cast<int>(name_w) + 2) << m.map_percent;
    os << std::setw(static_cast<int>(name_w) + 2) << report.average_map
       << std::setw(14) << report.combined << "\n";

    os << std::setw(12) << std::left << "mAR" << std::right;
    for (const auto& [name, m] : report.per_dataset)
        os << std::setw(static_cast<int>(name_w) + 2) << m.mar_percent;
    os << std::setw(static_cast<int>(name_w) + 2) << report.average_mar << "\n";

    if (!report.semantic_miou.empty()) {
        os << std::setw(12) << std::left << "mean IoU" << std::right;
        for (const auto& [name, m] : report.per_dataset) {
            auto it = report.semantic_miou.find(name);
            if (it != report.semantic_miou.end())
                os << std::setw(static_cast<int>(name_w) + 2) << it->second;
            else
                os << std::setw(static_cast<int>(name_w) + 2) << "-";
        }
        os << "\n";
    }
    return os.str();
}

namespace {

void scan_rle(const json& j, const std::string& where, std::vector<std::string>& diags) {
    if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
        diags.push_back(where + ": missing or malformed segmentation");
        return;
    }
    const int64_t h = j["size"].at(0).get<int64_t>();
    const int64_t w = j["size"].at(1).get<int64_t>();
    int64_t sum = 0;
    for (const auto& c : j["counts"]) {
        const int64_t v = c.get<int64_t>();
        if (v < 0) {
            diags.push_back(where + ": negative RLE count");
            return;
        }
        sum += v;
    }
    if (sum != h * w)
        diags.push_back(where + ": RLE counts sum to " + std::to_string(sum) + ", expected " +
                        std::to_string(h * w));
}

}  // namespace

std::vector<std::string> scan_prediction_file(const std::string& path, const GroundTruth* gt) {
    std::vector<std::string> diags;
    json j;
    try {
        j = parse_file(path);
    } catch (const InputError& e) {
        return {e.what()};
    }
    if (!j.is_array()) return {path + ": prediction file must be a JSON array"};

    std::unordered_set<int64_t> image_ids;
    std::unordered_set<int> cat_ids;
    if (gt) {
        for (const auto& im : gt->images) image_ids.insert(im.id);
        for (const auto& c : gt->categories) cat_ids.insert(c.id);
    }
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string where = path + " record[" + std::to_string(i) + "]";
        const auto& rec = j[i];
        for (const char* field : {"image_id", "category_id", "score", "bbox", "segmentation"}) {
            if (!rec.contains(field)) diags.push_back(where + ": missing field " + field);
        }
        if (rec.contains("score")) {
            const double s = rec["score"].get<double>();
            if (s < 0.0 || s > 1.0) diags.push_back(where + ": score outside [0,1]");
        }
        if (rec.contains("segmentation")) scan_rle(rec["segmentation"], where, diags);
        if (gt && rec.contains("image_id") &&
            !image_ids.count(rec["image_id"].get<int64_t>()))
            diags.push_back(where + ": image_id not present in ground truth");
        if (gt && rec.contains("category_id") && !cat_ids.count(rec["category_id"].get<int>()))
            diags.push_back(where + ": category_id not present in ground truth");
    }
    return diags;
}

std::vector<std::string> scan_ground_truth_file(const std::string& path) {
    std::vector<std::string> diags;
    json j;
    try {
        j = parse_file(path);
    } catch (const InputError& e) {
        return {e.what()};
    }
    for (const char* field : {"images", "categories", "annotations"}) {
        if (!j.contains(field)) diags.push_back(path + ": missing section " + field);
    }
    if (!diags.empty()) return diags;

    std::unordered_map<int64_t, std::pair<int, int>> img_dims;
    std::unordered_set<int> cat_ids;
    for (const auto& im : j["images"])
        img_dims[im.at("id").get<int64_t>()] = {im.at("height").get<int>(),
                                                im.at("width").get<int>()};
    for (const auto& c : j["categories"]) cat_ids.insert(c.at("id").get<int>());

    const auto& anns = j["annotations"];
    for (size_t i = 0; i < anns.size(); ++i) {
        const std::string where = path + " annotation[" + std::to_string(i) + "]";
        const auto& a = anns[i];
        const auto img = img_dims.find(a.at("image_id").get<int64_t>());
        if (img == img_dims.end()) {
            diags.push_back(where + ": unknown image_id");
            continue;
        }
        if (!cat_ids.count(a.at("category_id").get<int>()))
            diags.push_back(where + ": unknown category_id");
        if (a.contains("segmentation")) {
            scan_rle(a["segmentation"], where, diags);
            const auto& size = a["segmentation"]["size"];
            if (size.at(0).get<int>() != img->second.first ||
                size.at(1).get<int>() != img->second.second)
                diags.push_back(where + ": mask dimensions disagree with image");
        } else {
            diags.push_back(where + ": missing segmentation");
        }
    }
    return diags;
}

std::vector<std::string> scan_semantic_file(const std::string& path, const GroundTruth* gt) {
    std::vector<std::string> diags;
    json j;
    try {
        j = parse_file(path);
    } catch (const InputError& e) {
        return {e.what()};
    }
    if (!j.is_array()) return {path + ": semantic file must be a JSON array"};
    std::unordered_set<int64_t> image_ids;
    if (gt)
        for (const auto& im : gt->images) image_ids.insert(im.id);
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string where = path + " record[" + std::to_string(i) + "]";
        const auto& rec = j[i];
        if (!rec.contains("image_id")) diags.push_back(where + ": missing field image_id");
        if (rec.contains("segmentation"))
            scan_rle(rec["segmentation"], where, diags);
        else
            diags.push_back(where + ": missing field segmentation");
        if (gt && rec.contains("image_id") && !image_ids.count(rec["image_id"].get<int64_t>()))
            diags.push_back(where + ": image_id not present in ground truth");
    }
    return diags;
}

}  // namespace maskfuse::io
