#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "facescan/detector.hpp"

#include "json.hpp"

namespace facescan {

std::optional<HeatMap> heatmap(const NetworkSpec& net, const PyramidLevel& level) {
    const ScanGeometry geom = receptive_geometry(net);
    if (level.image.height < geom.window || level.image.width < geom.window) return std::nullopt;

    const Tensor out = forward(net, to_tensor(adapt_channels(level.image, net.input_channels)));
    HeatMap hm;
    hm.rows = out.height;
    hm.cols = out.width;
    hm.geometry = geom;
    hm.level_scale = level.scale;
    hm.scores.assign(out.plane(1), out.plane(1) + static_cast<std::size_t>(out.height) * out.width);
    return hm;
}

namespace {

Box cell_box(const HeatMap& hm, int r, int c, int original_width, int original_height) {
    const double inv = 1.0 / hm.level_scale;
    const Box level_box{static_cast<double>(c) * hm.geometry.stride,
                        static_cast<double>(r) * hm.geometry.stride,
                        static_cast<double>(hm.geometry.window),
                        static_cast<double>(hm.geometry.window)};
    return clamp_to({level_box.x * inv, level_box.y * inv, level_box.w * inv, level_box.h * inv},
                    original_width, original_height);
}

}  // namespace

std::vector<Detection> cells_to_boxes(const HeatMap& hm, double score_floor, int original_width,
                                      int original_height) {
    std::vector<Detection> dets;
    for (int r = 0; r < hm.rows; ++r)
        for (int c = 0; c < hm.cols; ++c) {
            const double s = hm.at(r, c);
            if (s < score_floor) continue;
            dets.push_back({cell_box(hm, r, c, original_width, original_height), s, 0});
        }
    return dets;
}

namespace {

struct LevelOutput {
    std::vector<Detection> dets;
    HeatMap hm;
    bool valid = false;
};

// Feature for cell (r, c): the patch of the activation feeding the first
// fc-derived layer that this cell's window looked at, flattened in tensor
// order. Only defined when every layer from there on has stride 1.
std::vector<double> cell_feature(const Tensor& acts, int kernel, int r, int c) {
    std::vector<double> f;
    f.reserve(static_cast<std::size_t>(acts.channels) * kernel * kernel);
    for (int ch = 0; ch < acts.channels; ++ch)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) f.push_back(acts.at(ch, r + ky, c + kx));
    return f;
}

void check_feature_layer(const NetworkSpec& net) {
    if (net.feature_layer < 0 || net.feature_layer >= static_cast<int>(net.layers.size()))
        fail(ErrorKind::Config, "model does not record a feature layer; box regression needs one");
    for (std::size_t i = static_cast<std::size_t>(net.feature_layer); i < net.layers.size(); ++i) {
        const LayerSpec& s = net.layers[i].spec;
        if ((s.kind == LayerKind::Conv || s.kind == LayerKind::MaxPool) && s.stride != 1)
            fail(ErrorKind::Config, "layers after the feature layer must have stride 1");
    }
}

LevelOutput scan_level(const NetworkSpec& net, const PyramidLevel& level, int level_index,
                       const DetectConfig& cfg, int original_width, int original_height,
                       const ScanGeometry& geom) {
    LevelOutput out;
    if (level.image.height < geom.window || level.image.width < geom.window) return out;
    const Tensor input = to_tensor(adapt_channels(level.image, net.input_channels));

    HeatMap hm;
    hm.geometry = geom;
    hm.level_scale = level.scale;

    if (cfg.regressor) {
        const std::vector<Tensor> acts = forward_all(net, input);
        const Tensor& scores = acts.back();
        hm.rows = scores.height;
        hm.cols = scores.width;
        hm.scores.assign(scores.plane(1),
                         scores.plane(1) + static_cast<std::size_t>(scores.height) * scores.width);
        const Tensor& feats = acts[net.feature_layer];
        const int kernel = net.layers[net.feature_layer].spec.kernel;
        for (int r = 0; r < hm.rows; ++r)
            for (int c = 0; c < hm.cols; ++c) {
                const double s = hm.at(r, c);
                if (s < cfg.score_floor) continue;
                const Box proposal = cell_box(hm, r, c, original_width, original_height);
                const Box refined =
                    apply_regressor(*cfg.regressor, proposal, cell_feature(feats, kernel, r, c));
                out.dets.push_back({clamp_to(refined, original_width, original_height), s,
                                    level_index});
            }
    } else {
        const Tensor scores = forward(net, input);
        hm.rows = scores.height;
        hm.cols = scores.width;
        hm.scores.assign(scores.plane(1),
                         scores.plane(1) + static_cast<std::size_t>(scores.height) * scores.width);
        out.dets = cells_to_boxes(hm, cfg.score_floor, original_width, original_height);
        for (Detection& d : out.dets) d.level = level_index;
    }
    out.hm = std::move(hm);
    out.valid = true;
    return out;
}

std::vector<Detection> run_detect(const NetworkSpec& net, const Image& img,
                                  const DetectConfig& cfg, std::vector<HeatMap>* maps,
                                  std::ostream* log) {
    if (!net.fully_convolutional())
        fail(ErrorKind::Config, "detection needs a fully-convolutional net; run fc_to_conv first");
    const ScanGeometry geom = receptive_geometry(net);
    if (cfg.regressor) check_feature_layer(net);

    PyramidConfig pyr = cfg.pyramid;
    if (pyr.min_dim == 0) pyr.min_dim = geom.window;
    const std::vector<PyramidLevel> levels = build_pyramid(img, pyr, log);

    std::vector<LevelOutput> results(levels.size());
    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || levels.size() <= 1) {
        for (std::size_t i = 0; i < levels.size(); ++i)
            results[i] = scan_level(net, levels[i], static_cast<int>(i), cfg, img.width,
                                    img.height, geom);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < levels.size(); i = next++)
                results[i] = scan_level(net, levels[i], static_cast<int>(i), cfg, img.width,
                                        img.height, geom);
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(threads, static_cast<int>(levels.size())); ++t)
            pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // merge in level order so the outcome is independent of scheduling
    std::vector<Detection> all;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].valid) continue;
        all.insert(all.end(), results[i].dets.begin(), results[i].dets.end());
        if (maps) maps->push_back(std::move(results[i].hm));
    }

    std::vector<Detection> kept = suppress(std::move(all), cfg.nms);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return kept;
}

}  // namespace

std::vector<Detection> detect(const NetworkSpec& net, const Image& img, const DetectConfig& cfg,
                              std::ostream* log) {
    return run_detect(net, img, cfg, nullptr, log);
}

std::vector<Detection> detect_with_heatmaps(const NetworkSpec& net, const Image& img,
                                            const DetectConfig& cfg, std::vector<HeatMap>& maps,
                                            std::ostream* log) {
    return run_detect(net, img, cfg, &maps, log);
}

Image render_heatmap(const HeatMap& hm) {
    Image img(1, std::max(1, hm.rows), std::max(1, hm.cols));
    for (int r = 0; r < hm.rows; ++r)
        for (int c = 0; c < hm.cols; ++c)
            img.at(0, r, c) = std::floor(255.0 * hm.at(r, c) + 0.5);
    return img;
}

void write_detections_jsonl(std::ostream& out, const std::string& image_id,
                            std::span<const Detection> dets) {
    const std::string id = nlohmann::json(image_id).dump();
    char buf[256];
    for (const Detection& d : dets) {
        std::snprintf(buf, sizeof(buf), ",\"x\":%.3f,\"y\":%.3f,\"w\":%.3f,\"h\":%.3f,\"score\":%.6f}",
                      d.box.x, d.box.y, d.box.w, d.box.h, d.score);
        out << "{\"image\":" << id << buf << "\n";
    }
}

std::vector<NamedDetection> read_detections_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<NamedDetection> dets;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("image") || !j.contains("score"))
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": bad detection record");
        NamedDetection d;
        try {
            d.image_id = j.at("image").get<std::string>();
            d.det.box = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
                         j.at("h").get<double>()};
            d.det.score = j.at("score").get<double>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Parse,
                 path + ":" + std::to_string(line_no) + ": bad detection record (" + e.what() + ")");
        }
        dets.push_back(std::move(d));
    }
    return dets;
}

}  // namespace facescan
