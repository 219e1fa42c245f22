// facescan: dense sliding-window face detection from the command line.
//
// Subcommands: detect, eval, train, sample, analyze-poses, model-info.
// Data goes to stdout or the requested files; progress and warnings go to
// stderr. Exit codes: 0 success, 1 operational failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "facescan/detector.hpp"
#include "facescan/errors.hpp"
#include "facescan/evaluation.hpp"
#include "facescan/image.hpp"
#include "facescan/mininet.hpp"
#include "facescan/model_io.hpp"
#include "facescan/overlay.hpp"
#include "facescan/rng.hpp"
#include "facescan/trainer.hpp"

namespace fs = std::filesystem;
using namespace facescan;

namespace {

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot create " + path);
    return out;
}

// Sorted wanted-extension scan so pool construction is deterministic.
std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir + " is not a directory");
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (char& c : ext) c = static_cast<char>(std::tolower(c));
        if (ext == ".pgm" || ext == ".ppm" || ext == ".png") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorKind::Io, dir + " holds no .pgm/.ppm/.png images");
    return files;
}

std::vector<Box> boxes_for(const std::vector<GroundTruth>& gts, const std::string& id) {
    for (const GroundTruth& g : gts)
        if (g.image_id == id) return g.boxes;
    return {};
}

struct DetectArgs {
    std::string model, image, id, regressor, out, overlay, heatmap_dir;
    std::string nms = "avg";
    double fs = default_scale_step();
    double upscale = 5.0;
    double nms_threshold = -1.0;  // strategy default when unset
    double nms_floor = 0.2;
    double nms_keep = 0.9;
    double score_floor = 0.01;
    int threads = 1;
};

int run_detect(const DetectArgs& a) {
    NetworkSpec net = load_model(a.model);
    if (!net.fully_convolutional()) net = fc_to_conv(net);

    DetectConfig cfg;
    cfg.pyramid.upscale = a.upscale;
    cfg.pyramid.scale_step = a.fs;
    cfg.score_floor = a.score_floor;
    cfg.nms = a.nms == "max" ? OverlapConfig::max_default() : OverlapConfig::avg_default();
    if (a.nms_threshold >= 0) cfg.nms.overlap_threshold = a.nms_threshold;
    cfg.nms.confidence_floor = a.nms_floor;
    cfg.nms.keep_ratio = a.nms_keep;
    cfg.threads = a.threads;

    RegressorModel reg;
    if (!a.regressor.empty()) {
        reg = load_regressor(a.regressor);
        cfg.regressor = &reg;
    }

    const Image img = read_image(a.image);
    const std::string image_id = a.id.empty() ? stem_of(a.image) : a.id;

    std::vector<HeatMap> maps;
    const bool want_maps = !a.heatmap_dir.empty();
    const std::vector<Detection> dets = want_maps
                                            ? detect_with_heatmaps(net, img, cfg, maps, &std::cerr)
                                            : detect(net, img, cfg, &std::cerr);

    if (a.out.empty()) {
        write_detections_jsonl(std::cout, image_id, dets);
    } else {
        std::ofstream out = open_out(a.out);
        write_detections_jsonl(out, image_id, dets);
    }
    if (!a.overlay.empty()) write_image(a.overlay, draw_detections(img, dets));
    if (want_maps) {
        fs::create_directories(a.heatmap_dir);
        char name[64];
        for (std::size_t i = 0; i < maps.size(); ++i) {
            std::snprintf(name, sizeof(name), "heatmap_%02zu.pgm", i);
            write_image((fs::path(a.heatmap_dir) / name).string(), render_heatmap(maps[i]));
        }
    }
    std::cerr << "detections: " << dets.size() << "\n";
    return 0;
}

struct EvalArgs {
    std::string dets, gt, format = "rect", pr_out;
    double iou = 0.5;
};

int run_eval(const EvalArgs& a) {
    const GtFormat format = a.format == "fddb" ? GtFormat::Fddb : GtFormat::Rect;
    const EvalReport report = evaluate(a.dets, a.gt, format, a.iou, &std::cerr);
    if (!a.pr_out.empty()) {
        std::ofstream out = open_out(a.pr_out);
        write_pr_csv(out, report.curve);
    }
    write_report(std::cout, report);
    return 0;
}

struct TrainArgs {
    std::string init = "random", images, gt, out, risk_out;
    int iterations = 2000;
    std::uint64_t seed = 1;
    double lr = 0.01, momentum = 0.9, weight_decay = 5e-4;
    int batch_size = 128;
    double positive_fraction = 0.25;
    int pos_per_image = 10, neg_per_image = 30;
    double iou_min = 0.5, iou_max = 0.3;
};

int run_train(const TrainArgs& a) {
    NetworkSpec net = a.init == "random" ? init_random(mininet(), derive_seed(a.seed, 0))
                                         : load_model(a.init);
    const int window = input_window(net);
    const std::vector<GroundTruth> gts = parse_rect_annotations(a.gt);

    std::vector<Patch> positives, negatives;
    const std::vector<std::string> files = list_images(a.images);
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string id = stem_of(files[i]);
        const Image img = adapt_channels(read_image(files[i]), net.input_channels);
        const std::vector<Box> boxes = boxes_for(gts, id);
        const std::uint64_t img_seed = derive_seed(a.seed, 1000 + i);
        if (!boxes.empty()) {
            std::vector<Patch> pos =
                sample_positives(img, id, boxes, a.iou_min, a.pos_per_image, img_seed, window);
            positives.insert(positives.end(), pos.begin(), pos.end());
        }
        std::vector<Patch> neg = sample_negatives(img, id, boxes, a.iou_max, a.neg_per_image,
                                                  derive_seed(img_seed, 1), window);
        negatives.insert(negatives.end(), neg.begin(), neg.end());
    }
    std::cerr << "pools: " << positives.size() << " positive, " << negatives.size()
              << " negative patches\n";
    if (positives.empty()) fail(ErrorKind::InvalidArgument, "no positive patches; check the gt file");

    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.momentum = a.momentum;
    cfg.weight_decay = a.weight_decay;
    cfg.iterations = a.iterations;
    cfg.batch.size = a.batch_size;
    cfg.batch.positive_fraction = a.positive_fraction;
    cfg.seed = a.seed;

    std::vector<RiskPoint> trace;
    net = finetune(std::move(net), positives, negatives, cfg, &trace, &std::cerr);

    save_model(net, a.out + ".net", a.out + ".bin");
    if (!a.risk_out.empty()) {
        std::ofstream out = open_out(a.risk_out);
        write_risk_trace_csv(out, trace);
    }
    std::cerr << "saved " << a.out << ".net / " << a.out << ".bin\n";
    return 0;
}

struct SampleArgs {
    std::string images, gt, kind = "pos", out_dir;
    int count_per_image = 10;
    std::uint64_t seed = 1;
    int window = 0;  // 0: reference architecture window
    double iou_min = 0.5, iou_max = 0.3;
};

int run_sample(const SampleArgs& a) {
    const int window = a.window > 0 ? a.window : input_window(mininet());
    const std::vector<GroundTruth> gts = parse_rect_annotations(a.gt);
    std::vector<Patch> patches;
    const std::vector<std::string> files = list_images(a.images);
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string id = stem_of(files[i]);
        const Image img = to_gray(read_image(files[i]));
        const std::vector<Box> boxes = boxes_for(gts, id);
        const std::uint64_t img_seed = derive_seed(a.seed, 1000 + i);
        if (a.kind == "pos") {
            if (boxes.empty()) continue;
            std::vector<Patch> p =
                sample_positives(img, id, boxes, a.iou_min, a.count_per_image, img_seed, window);
            patches.insert(patches.end(), p.begin(), p.end());
        } else {
            std::vector<Patch> p =
                sample_negatives(img, id, boxes, a.iou_max, a.count_per_image, img_seed, window);
            patches.insert(patches.end(), p.begin(), p.end());
        }
    }
    dump_patches(a.out_dir, patches);
    std::cerr << "wrote " << patches.size() << " patches to " << a.out_dir << "\n";
    return 0;
}

struct PoseArgs {
    std::string poses, out;
    double bin_width = 10.0;
};

int run_poses(const PoseArgs& a) {
    const std::vector<PoseAnnotation> annos = parse_pose_annotations(a.poses);
    const PoseHistograms h = pose_histogram(annos, a.bin_width);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
        out = &file;
    }
    *out << "bin_lo,bin_hi,in_plane,pitch,yaw\n";
    char buf[128];
    for (std::size_t i = 0; i < h.bin_lo.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%ld,%ld,%ld\n", h.bin_lo[i],
                      h.bin_lo[i] + h.bin_width, h.roll[i], h.pitch[i], h.yaw[i]);
        *out << buf;
    }
    std::cerr << "annotations: " << annos.size() << "\n";
    return 0;
}

int run_model_info(const std::string& model_path) {
    const NetworkSpec net = load_model(model_path);
    std::cout << "format FSNET " << kModelFormatVersion << "\n";
    std::cout << "input_channels " << net.input_channels << "\n";
    std::cout << "mean";
    for (double m : net.mean) std::cout << " " << m;
    std::cout << "\nscale " << net.scale << "\n";
    std::cout << "parameters " << net.parameter_count() << "\n";
    std::cout << "form " << (net.fully_convolutional() ? "fully-convolutional" : "fully-connected")
              << "\n";

    const int window = input_window(net);
    std::cout << "window " << window << "\n";
    const NetworkSpec conv_net = net.fully_convolutional() ? net : fc_to_conv(net);
    const ScanGeometry geom = receptive_geometry(conv_net);
    std::cout << "stride " << geom.stride << "\n";
    std::cout << "geometry " << (geom.exact ? "exact" : "nominal") << "\n";

    Shape shape{net.input_channels, window, window};
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        shape = propagate_shape(l.spec, shape, static_cast<int>(i));
        std::cout << "layer " << i << " " << to_string(l.spec.kind);
        if (l.spec.kind == LayerKind::Conv || l.spec.kind == LayerKind::MaxPool)
            std::cout << " kernel " << l.spec.kernel << " stride " << l.spec.stride << " pad "
                      << l.spec.pad;
        std::cout << " -> " << shape.channels << "x" << shape.height << "x" << shape.width << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dense sliding-window face detection"};
    app.require_subcommand(1);

    DetectArgs det;
    CLI::App* cmd_detect = app.add_subcommand("detect", "scan an image and emit detections");
    cmd_detect->add_option("--model", det.model, "model manifest (.net)")->required();
    cmd_detect->add_option("--image", det.image, "input image (pgm/ppm/png)")->required();
    cmd_detect->add_option("--id", det.id, "image id for the output records (default: file stem)");
    cmd_detect->add_option("--fs", det.fs, "pyramid scale step (default cbrt(0.5) = 0.793701)");
    cmd_detect->add_option("--upscale", det.upscale, "level-0 magnification (default 5)");
    cmd_detect->add_option("--nms", det.nms, "suppression strategy: avg|max (default avg)")
        ->check(CLI::IsMember({"avg", "max"}));
    cmd_detect->add_option("--nms-threshold", det.nms_threshold,
                           "overlap threshold (default 0.2 avg / 0.3 max)");
    cmd_detect->add_option("--nms-floor", det.nms_floor, "avg: confidence floor (default 0.2)");
    cmd_detect->add_option("--nms-keep", det.nms_keep, "avg: keep ratio (default 0.9)");
    cmd_detect->add_option("--score-floor", det.score_floor,
                           "pre-suppression score floor (default 0.01)");
    cmd_detect->add_option("--regressor", det.regressor, "box regressor manifest (.reg)");
    cmd_detect->add_option("--out", det.out, "detections jsonl (default: stdout)");
    cmd_detect->add_option("--overlay", det.overlay, "write an annotated image (.png/.ppm)");
    cmd_detect->add_option("--heatmap-out", det.heatmap_dir, "write per-level heat maps here");
    cmd_detect->add_option("--threads", det.threads, "pyramid-level parallelism (default 1)");

    EvalArgs ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "score detections against ground truth");
    cmd_eval->add_option("--dets", ev.dets, "detections jsonl")->required();
    cmd_eval->add_option("--gt", ev.gt, "ground-truth file")->required();
    cmd_eval->add_option("--format", ev.format, "gt format: rect|fddb (default rect)")
        ->check(CLI::IsMember({"rect", "fddb"}));
    cmd_eval->add_option("--iou", ev.iou, "match threshold (default 0.5)");
    cmd_eval->add_option("--pr-out", ev.pr_out, "write the precision-recall curve csv");

    TrainArgs tr;
    CLI::App* cmd_train = app.add_subcommand("train", "fine-tune or train the classifier");
    cmd_train->add_option("--init", tr.init, "'random' or a model manifest to start from");
    cmd_train->add_option("--images", tr.images, "training image directory")->required();
    cmd_train->add_option("--gt", tr.gt, "rect ground-truth file")->required();
    cmd_train->add_option("--iterations", tr.iterations, "sgd iterations (default 2000)");
    cmd_train->add_option("--seed", tr.seed, "master seed (default 1)");
    cmd_train->add_option("--out", tr.out, "output model prefix (writes .net and .bin)")->required();
    cmd_train->add_option("--lr", tr.lr, "learning rate (default 0.01)");
    cmd_train->add_option("--momentum", tr.momentum, "momentum (default 0.9)");
    cmd_train->add_option("--weight-decay", tr.weight_decay, "weight decay (default 5e-4)");
    cmd_train->add_option("--batch-size", tr.batch_size, "batch size (default 128)");
    cmd_train->add_option("--positive-fraction", tr.positive_fraction,
                          "positives per batch (default 0.25)");
    cmd_train->add_option("--pos-per-image", tr.pos_per_image, "positive patches per image");
    cmd_train->add_option("--neg-per-image", tr.neg_per_image, "negative patches per image");
    cmd_train->add_option("--iou-min", tr.iou_min, "positive acceptance IOU (default 0.5)");
    cmd_train->add_option("--iou-max", tr.iou_max, "negative rejection IOU (default 0.3)");
    cmd_train->add_option("--risk-out", tr.risk_out, "write the risk trace csv");

    SampleArgs sa;
    CLI::App* cmd_sample = app.add_subcommand("sample", "export training patches");
    cmd_sample->add_option("--images", sa.images, "image directory")->required();
    cmd_sample->add_option("--gt", sa.gt, "rect ground-truth file")->required();
    cmd_sample->add_option("--kind", sa.kind, "pos|neg (default pos)")
        ->check(CLI::IsMember({"pos", "neg"}));
    cmd_sample->add_option("--count-per-image", sa.count_per_image, "patches per image");
    cmd_sample->add_option("--seed", sa.seed, "master seed (default 1)");
    cmd_sample->add_option("--out-dir", sa.out_dir, "output directory")->required();
    cmd_sample->add_option("--window", sa.window, "patch size (default: reference window)");
    cmd_sample->add_option("--iou-min", sa.iou_min, "positive acceptance IOU");
    cmd_sample->add_option("--iou-max", sa.iou_max, "negative rejection IOU");

    PoseArgs po;
    CLI::App* cmd_poses = app.add_subcommand("analyze-poses", "histogram pose annotations");
    cmd_poses->add_option("--poses", po.poses, "pose file: id roll pitch yaw")->required();
    cmd_poses->add_option("--bin-width", po.bin_width, "bin width in degrees (default 10)");
    cmd_poses->add_option("--out", po.out, "csv output (default: stdout)");

    std::string info_model;
    CLI::App* cmd_info = app.add_subcommand("model-info", "describe a model file");
    cmd_info->add_option("--model", info_model, "model manifest (.net)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the reason
        return 2;
    }

    try {
        if (cmd_detect->parsed()) return run_detect(det);
        if (cmd_eval->parsed()) return run_eval(ev);
        if (cmd_train->parsed()) return run_train(tr);
        if (cmd_sample->parsed()) return run_sample(sa);
        if (cmd_poses->parsed()) return run_poses(po);
        if (cmd_info->parsed()) return run_model_info(info_model);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
