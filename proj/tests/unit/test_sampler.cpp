#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "facescan/nms.hpp"
#include "facescan/rng.hpp"
#include "facescan/sampler.hpp"
#include "synthetic.hpp"
#include "test_paths.hpp"

using namespace facescan;
using facescan::testing::make_scene;
using facescan::testing::scratch_dir;

namespace {

bool same_patch(const Patch& a, const Patch& b) {
    return a.tensor.data == b.tensor.data && a.face == b.face && a.source.x == b.source.x &&
           a.source.y == b.source.y && a.source.w == b.source.w && a.source.h == b.source.h &&
           a.flipped == b.flipped;
}

}  // namespace

TEST_CASE("sample_positives: acceptance rule holds against the recorded source") {
    const facescan::testing::SyntheticScene scene = make_scene(501, 131);
    REQUIRE_FALSE(scene.gts.empty());
    const std::vector<Patch> patches =
        sample_positives(scene.image, "s", scene.gts, 0.5, 25, 42, 35);
    CHECK(patches.size() == 25);
    for (const Patch& p : patches) {
        CHECK(p.face);
        CHECK(p.tensor.height == 35);
        CHECK(p.tensor.width == 35);
        double best = 0.0;
        for (const Box& g : scene.gts) best = std::max(best, iou(p.source, g));
        CHECK(best > 0.5);
    }
}

TEST_CASE("sample_positives: tight thresholds only pass near-exact windows") {
    Image img(1, 80, 80, 100.0);
    const std::vector<Box> gts = {{25, 25, 30, 30}};
    // the exact window has IOU 1 and always qualifies; at 0.65 only
    // closely aligned jitters survive
    const std::vector<Patch> patches = sample_positives(img, "s", gts, 0.65, 4, 7, 16);
    for (const Patch& p : patches) {
        CHECK(iou(p.source, gts[0]) > 0.65);
        CHECK(std::abs(p.source.cx() - 40.0) < 15.0);
        CHECK(std::abs(p.source.cy() - 40.0) < 15.0);
    }
}

TEST_CASE("sample_positives: impossible threshold exhausts the attempt budget") {
    Image img(1, 60, 60, 0.0);
    const std::vector<Box> gts = {{10, 10, 20, 20}};
    try {
        sample_positives(img, "s", gts, 1.0, 1, 3, 16);  // IOU > 1 cannot happen
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplingExhausted);
    }
}

TEST_CASE("sample_positives: deterministic in the seed") {
    const facescan::testing::SyntheticScene scene = make_scene(502, 131);
    const std::vector<Patch> a = sample_positives(scene.image, "s", scene.gts, 0.5, 10, 9, 35);
    const std::vector<Patch> b = sample_positives(scene.image, "s", scene.gts, 0.5, 10, 9, 35);
    const std::vector<Patch> c = sample_positives(scene.image, "s", scene.gts, 0.5, 10, 10, 35);
    REQUIRE(a.size() == b.size());
    bool all_same = true, any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_same = all_same && same_patch(a[i], b[i]);
        any_diff = any_diff || !same_patch(a[i], c[i]);
    }
    CHECK(all_same);
    CHECK(any_diff);
}

TEST_CASE("sample_negatives: clear of every ground-truth box") {
    const facescan::testing::SyntheticScene scene = make_scene(503, 131);
    const std::vector<Patch> patches =
        sample_negatives(scene.image, "s", scene.gts, 0.3, 40, 11, 35);
    CHECK(patches.size() == 40);
    for (const Patch& p : patches) {
        CHECK_FALSE(p.face);
        for (const Box& g : scene.gts) CHECK(iou(p.source, g) <= 0.3);
    }
}

TEST_CASE("sample_negatives: no ground truth means any window qualifies") {
    Image img(1, 50, 50, 10.0);
    const std::vector<Patch> patches = sample_negatives(img, "s", {}, 0.0, 5, 12, 16);
    CHECK(patches.size() == 5);
}

TEST_CASE("flip_patch: involution, symmetry, index arithmetic") {
    Rng rng(61);
    Patch p;
    p.tensor = Tensor(1, 4, 6);
    for (double& v : p.tensor.data) v = rng.uniform(0, 255);
    const Patch f = flip_patch(p);
    CHECK(f.flipped);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x) CHECK(f.tensor.at(0, y, x) == p.tensor.at(0, y, 5 - x));

    const Patch ff = flip_patch(f);
    CHECK_FALSE(ff.flipped);
    CHECK(ff.tensor.data == p.tensor.data);

    Patch sym;
    sym.tensor = Tensor(1, 2, 3);
    sym.tensor.data = {1, 2, 1, 7, 8, 7};
    CHECK(flip_patch(sym).tensor.data == sym.tensor.data);
}

TEST_CASE("compose_batch: exact counts at several sizes") {
    Image img(1, 40, 40, 128.0);
    const std::vector<Box> gts = {{8, 8, 20, 20}};
    const std::vector<Patch> pos = sample_positives(img, "s", gts, 0.5, 6, 1, 8);
    const std::vector<Patch> neg = sample_negatives(img, "s", gts, 0.3, 9, 2, 8);

    BatchSpec spec;
    spec.size = 128;
    spec.positive_fraction = 0.25;
    const std::vector<Patch> batch = compose_batch(pos, neg, spec, 77);
    REQUIRE(batch.size() == 128);
    int faces = 0;
    for (const Patch& p : batch) faces += p.face ? 1 : 0;
    CHECK(faces == 32);

    BatchSpec small;
    small.size = 4;
    small.positive_fraction = 0.25;
    const std::vector<Patch> tiny = compose_batch(pos, neg, small, 78);
    int tiny_faces = 0;
    for (const Patch& p : tiny) tiny_faces += p.face ? 1 : 0;
    CHECK(tiny_faces == 1);

    BatchSpec bad;
    bad.size = 10;
    bad.positive_fraction = 0.25;  // 2.5 positives is not a batch
    CHECK_THROWS_AS(compose_batch(pos, neg, bad, 79), Error);
}

TEST_CASE("compose_batch: deterministic and uniform over the pool") {
    Image img(1, 40, 40, 128.0);
    const std::vector<Box> gts = {{8, 8, 20, 20}};
    const std::vector<Patch> pos = sample_positives(img, "s", gts, 0.5, 10, 3, 8);
    const std::vector<Patch> neg = sample_negatives(img, "s", gts, 0.3, 10, 4, 8);

    BatchSpec spec;
    spec.size = 16;
    spec.positive_fraction = 0.25;
    const std::vector<Patch> a = compose_batch(pos, neg, spec, 99);
    const std::vector<Patch> b = compose_batch(pos, neg, spec, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_patch(a[i], b[i]));

    // frequency of each positive across many draws: within 5 sigma of uniform
    std::vector<long> hits(pos.size(), 0);
    const int batches = 10000;
    for (int i = 0; i < batches; ++i) {
        for (const Patch& p : compose_batch(pos, neg, spec, 1000 + i))
            if (p.face)
                for (std::size_t j = 0; j < pos.size(); ++j)
                    if (p.source.x == pos[j].source.x && p.source.y == pos[j].source.y &&
                        p.source.w == pos[j].source.w)
                        ++hits[j];
    }
    const double draws = static_cast<double>(batches) * 4;  // 4 positives per batch
    const double mean = draws / static_cast<double>(pos.size());
    const double sigma = std::sqrt(draws * (1.0 / pos.size()) * (1.0 - 1.0 / pos.size()));
    for (long h : hits) CHECK(std::abs(h - mean) <= 5.0 * sigma);
}

TEST_CASE("pose histogram: conservation and binning") {
    PoseHistograms empty = pose_histogram({}, 10.0);
    for (long v : empty.roll) CHECK(v == 0);

    std::vector<PoseAnnotation> one = {{"a", 0, 0, 0}};
    const PoseHistograms h = pose_histogram(one, 10.0);
    REQUIRE(h.bin_lo.size() == 36);
    CHECK(h.roll[18] == 1);  // [-180,180) in 10-degree bins: 0 lands in bin 18
    CHECK(h.pitch[18] == 1);
    CHECK(h.yaw[18] == 1);

    Rng rng(71);
    std::vector<PoseAnnotation> annos;
    for (int i = 0; i < 500; ++i)
        annos.push_back({"x", rng.uniform(-180, 180), rng.uniform(-90, 90), rng.uniform(-180, 180)});
    const PoseHistograms big = pose_histogram(annos, 7.5);
    long roll_total = 0, yaw_total = 0;
    for (long v : big.roll) roll_total += v;
    for (long v : big.yaw) yaw_total += v;
    CHECK(roll_total == 500);
    CHECK(yaw_total == 500);

    // angles outside the range wrap
    std::vector<PoseAnnotation> edge = {{"e", 180.0, -180.0, 359.0}};
    const PoseHistograms wrapped = pose_histogram(edge, 10.0);
    CHECK(wrapped.roll[0] == 1);   // 180 wraps to -180
    CHECK(wrapped.pitch[0] == 1);
    CHECK(wrapped.yaw[17] == 1);   // 359 wraps to -1
}

TEST_CASE("pose annotations parse and reject garbage") {
    const std::string dir = scratch_dir("poses");
    write_file(dir + "/ok.txt",
               std::vector<std::uint8_t>{});
    CHECK(parse_pose_annotations(dir + "/ok.txt").empty());

    const std::string good = "# header\nimg1 10.5 -20 30\nimg2 0 0 0\n";
    write_file(dir + "/good.txt", std::vector<std::uint8_t>(good.begin(), good.end()));
    const std::vector<PoseAnnotation> annos = parse_pose_annotations(dir + "/good.txt");
    REQUIRE(annos.size() == 2);
    CHECK(annos[0].id == "img1");
    CHECK(annos[0].pitch == -20.0);

    const std::string bad = "img1 1 2\n";
    write_file(dir + "/bad.txt", std::vector<std::uint8_t>(bad.begin(), bad.end()));
    CHECK_THROWS_AS(parse_pose_annotations(dir + "/bad.txt"), Error);
}

TEST_CASE("dump_patches writes rasters and a matching index") {
    const std::string dir = scratch_dir("dump");
    Image img(1, 40, 40, 128.0);
    const std::vector<Box> gts = {{8, 8, 20, 20}};
    const std::vector<Patch> pos = sample_positives(img, "img7", gts, 0.5, 3, 5, 16);
    dump_patches(dir + "/out", pos);
    CHECK(std::filesystem::exists(dir + "/out/patch_00000.pgm"));
    CHECK(std::filesystem::exists(dir + "/out/patch_00002.pgm"));
    const std::vector<std::uint8_t> index = read_file(dir + "/out/index.tsv");
    const std::string text(index.begin(), index.end());
    CHECK(text.find("img7") != std::string::npos);
    CHECK(text.find("face") != std::string::npos);
    const Image back = read_image(dir + "/out/patch_00001.pgm");
    CHECK(back.width == 16);
}
