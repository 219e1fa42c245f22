#include <bit>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "facescan/image.hpp"  // read_file / write_file
#include "facescan/model_io.hpp"

namespace facescan {

namespace {

// ---- float32 blob ----

std::vector<std::uint8_t> pack_f32(const std::vector<double>& values) {
    std::vector<std::uint8_t> out(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        out[i * 4 + 0] = static_cast<std::uint8_t>(bits);
        out[i * 4 + 1] = static_cast<std::uint8_t>(bits >> 8);
        out[i * 4 + 2] = static_cast<std::uint8_t>(bits >> 16);
        out[i * 4 + 3] = static_cast<std::uint8_t>(bits >> 24);
    }
    return out;
}

std::vector<double> unpack_f32(const std::uint8_t* bytes, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(bytes[i * 4 + 0]) |
                                   (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- manifest tokenizing ----

struct ManifestLine {
    long number = 0;
    std::vector<std::string> tokens;
};

std::vector<ManifestLine> tokenize_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<ManifestLine> lines;
    std::string raw;
    long number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.resize(hash);
        std::istringstream ss(raw);
        ManifestLine line;
        line.number = number;
        std::string tok;
        while (ss >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void manifest_error(const std::string& path, long line, const std::string& msg) {
    fail(ErrorKind::Format, path + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& tok, const std::string& path, long line) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        manifest_error(path, line, "expected a number, got '" + tok + "'");
    return v;
}

long parse_long(const std::string& tok, const std::string& path, long line) {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        manifest_error(path, line, "expected an integer, got '" + tok + "'");
    return v;
}

// key/value pairs after a fixed prefix
struct KeyValues {
    const ManifestLine& line;
    const std::string& path;
    std::size_t pos;

    bool next(std::string& key, std::string& value) {
        if (pos >= line.tokens.size()) return false;
        if (pos + 1 >= line.tokens.size())
            manifest_error(path, line.number, "key '" + line.tokens[pos] + "' is missing a value");
        key = line.tokens[pos];
        value = line.tokens[pos + 1];
        pos += 2;
        return true;
    }
};

struct ParamLocation {
    std::uint64_t weight_offset = 0, weight_count = 0;
    std::uint64_t bias_offset = 0, bias_count = 0;
    bool present = false;
};

std::string resolve_sibling(const std::string& manifest_path, const std::string& name) {
    return (std::filesystem::path(manifest_path).parent_path() / name).string();
}

}  // namespace

NetworkSpec load_model(const std::string& manifest_path) {
    const std::vector<ManifestLine> lines = tokenize_manifest(manifest_path);
    for (const ManifestLine& l : lines)
        if (l.tokens.size() >= 2 && l.tokens[0] == "weights")
            return load_model(manifest_path, resolve_sibling(manifest_path, l.tokens[1]));
    fail(ErrorKind::Format, manifest_path + ": manifest does not name a weights blob");
}

NetworkSpec load_model(const std::string& manifest_path, const std::string& weights_path) {
    const std::vector<ManifestLine> lines = tokenize_manifest(manifest_path);
    if (lines.empty()) fail(ErrorKind::Format, manifest_path + ": empty manifest");
    const ManifestLine& head = lines.front();
    if (head.tokens[0] != "FSNET")
        fail(ErrorKind::Format, manifest_path + ": bad magic '" + head.tokens[0] + "'");
    if (head.tokens.size() < 2 ||
        parse_long(head.tokens[1], manifest_path, head.number) != kModelFormatVersion)
        fail(ErrorKind::Format, manifest_path + ": unsupported format version");

    NetworkSpec net;
    net.mean.clear();
    std::vector<ParamLocation> locations;
    bool saw_end = false;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const ManifestLine& line = lines[li];
        const std::string& head_tok = line.tokens[0];
        if (saw_end) manifest_error(manifest_path, line.number, "content after 'end'");
        if (head_tok == "end") {
            saw_end = true;
        } else if (head_tok == "weights") {
            // blob name, consumed by the single-argument loader
        } else if (head_tok == "input_channels") {
            net.input_channels =
                static_cast<int>(parse_long(line.tokens.at(1), manifest_path, line.number));
        } else if (head_tok == "mean") {
            for (std::size_t i = 1; i < line.tokens.size(); ++i)
                net.mean.push_back(parse_number(line.tokens[i], manifest_path, line.number));
        } else if (head_tok == "scale") {
            net.scale = parse_number(line.tokens.at(1), manifest_path, line.number);
        } else if (head_tok == "feature_layer") {
            net.feature_layer =
                static_cast<int>(parse_long(line.tokens.at(1), manifest_path, line.number));
        } else if (head_tok == "layer") {
            if (line.tokens.size() < 2) manifest_error(manifest_path, line.number, "layer kind missing");
            Layer layer;
            ParamLocation loc;
            const std::string& kind = line.tokens[1];
            if (kind == "conv") layer.spec.kind = LayerKind::Conv;
            else if (kind == "maxpool") layer.spec.kind = LayerKind::MaxPool;
            else if (kind == "relu") layer.spec.kind = LayerKind::Relu;
            else if (kind == "fc") layer.spec.kind = LayerKind::FullyConnected;
            else if (kind == "lrn") layer.spec.kind = LayerKind::Lrn;
            else if (kind == "softmax") layer.spec.kind = LayerKind::Softmax;
            else manifest_error(manifest_path, line.number, "unknown layer kind '" + kind + "'");

            KeyValues kv{line, manifest_path, 2};
            std::string key, value;
            while (kv.next(key, value)) {
                if (key == "in") {
                    // conv: channel count; fc: CxHxW
                    int c = 0, h = 1, w = 1;
                    if (std::sscanf(value.c_str(), "%dx%dx%d", &c, &h, &w) == 3 ||
                        std::sscanf(value.c_str(), "%d", &c) == 1) {
                        layer.spec.in_channels = c;
                        layer.spec.in_height = h;
                        layer.spec.in_width = w;
                    } else {
                        manifest_error(manifest_path, line.number, "bad 'in' value '" + value + "'");
                    }
                } else if (key == "out") {
                    layer.spec.out_channels =
                        static_cast<int>(parse_long(value, manifest_path, line.number));
                } else if (key == "kernel") {
                    layer.spec.kernel = static_cast<int>(parse_long(value, manifest_path, line.number));
                } else if (key == "stride") {
                    layer.spec.stride = static_cast<int>(parse_long(value, manifest_path, line.number));
                } else if (key == "pad") {
                    layer.spec.pad = static_cast<int>(parse_long(value, manifest_path, line.number));
                } else if (key == "from_fc") {
                    layer.spec.from_fc = parse_long(value, manifest_path, line.number) != 0;
                } else if (key == "size") {
                    layer.spec.lrn.local_size =
                        static_cast<int>(parse_long(value, manifest_path, line.number));
                } else if (key == "alpha") {
                    layer.spec.lrn.alpha = parse_number(value, manifest_path, line.number);
                } else if (key == "beta") {
                    layer.spec.lrn.beta = parse_number(value, manifest_path, line.number);
                } else if (key == "k") {
                    layer.spec.lrn.k = parse_number(value, manifest_path, line.number);
                } else if (key == "weights") {
                    loc.weight_offset = static_cast<std::uint64_t>(
                        parse_long(value, manifest_path, line.number));
                    if (!kv.next(key, value) || key != "count")
                        manifest_error(manifest_path, line.number, "weights offset needs a count");
                    loc.weight_count =
                        static_cast<std::uint64_t>(parse_long(value, manifest_path, line.number));
                    loc.present = true;
                } else if (key == "bias") {
                    loc.bias_offset = static_cast<std::uint64_t>(
                        parse_long(value, manifest_path, line.number));
                    if (!kv.next(key, value) || key != "count")
                        manifest_error(manifest_path, line.number, "bias offset needs a count");
                    loc.bias_count =
                        static_cast<std::uint64_t>(parse_long(value, manifest_path, line.number));
                    loc.present = true;
                } else {
                    manifest_error(manifest_path, line.number, "unknown key '" + key + "'");
                }
            }
            net.layers.push_back(std::move(layer));
            locations.push_back(loc);
        } else {
            manifest_error(manifest_path, line.number, "unknown record '" + head_tok + "'");
        }
    }
    if (!saw_end) fail(ErrorKind::Format, manifest_path + ": missing 'end' marker");

    // offsets must ascend without gaps and cover the blob exactly
    const std::vector<std::uint8_t> blob = read_file(weights_path);
    std::uint64_t cursor = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& layer = net.layers[i];
        const ParamLocation& loc = locations[i];
        const bool wants_params = layer.spec.kind == LayerKind::Conv ||
                                  layer.spec.kind == LayerKind::FullyConnected;
        const std::string name = std::string("layer ") + std::to_string(i);
        if (!wants_params) {
            if (loc.present)
                fail(ErrorKind::ShapeMismatch, manifest_path + ": " + name + " takes no parameters");
            continue;
        }
        if (!loc.present)
            fail(ErrorKind::ShapeMismatch, manifest_path + ": " + name + " is missing weight records");
        if (loc.weight_offset != cursor)
            fail(ErrorKind::Format, manifest_path + ": " + name + " weights at offset " +
                                        std::to_string(loc.weight_offset) + ", expected " +
                                        std::to_string(cursor) +
                                        " (offsets must ascend and leave no gaps)");
        if (loc.bias_offset != loc.weight_offset + loc.weight_count * 4)
            fail(ErrorKind::Format,
                 manifest_path + ": " + name + " biases must directly follow its weights");
        const std::uint64_t end = loc.bias_offset + loc.bias_count * 4;
        if (end > blob.size())
            fail(ErrorKind::Truncated, weights_path + ": blob ends inside " + name + " (need " +
                                           std::to_string(end) + " bytes, have " +
                                           std::to_string(blob.size()) + ")");
        layer.weights = unpack_f32(blob.data() + loc.weight_offset, loc.weight_count);
        layer.bias = unpack_f32(blob.data() + loc.bias_offset, loc.bias_count);
        cursor = end;
    }
    if (cursor != blob.size())
        fail(ErrorKind::Format, weights_path + ": blob has " +
                                    std::to_string(blob.size() - cursor) +
                                    " trailing bytes the manifest does not account for");

    validate(net);
    return net;
}

void save_model(const NetworkSpec& net, const std::string& manifest_path,
                const std::string& weights_path) {
    validate(net);
    std::ostringstream manifest;
    manifest << "FSNET " << kModelFormatVersion << "\n";
    manifest << "weights " << std::filesystem::path(weights_path).filename().string() << "\n";
    manifest << "input_channels " << net.input_channels << "\n";
    manifest << "mean";
    for (double m : net.mean) manifest << " " << format_double(m);
    manifest << "\n";
    manifest << "scale " << format_double(net.scale) << "\n";
    if (net.feature_layer >= 0) manifest << "feature_layer " << net.feature_layer << "\n";

    std::vector<std::uint8_t> blob;
    for (const Layer& layer : net.layers) {
        const LayerSpec& s = layer.spec;
        manifest << "layer " << to_string(s.kind);
        switch (s.kind) {
            case LayerKind::Conv:
                manifest << " in " << s.in_channels << " out " << s.out_channels << " kernel "
                         << s.kernel << " stride " << s.stride << " pad " << s.pad;
                if (s.from_fc) manifest << " from_fc 1";
                break;
            case LayerKind::MaxPool:
                manifest << " kernel " << s.kernel << " stride " << s.stride << " pad " << s.pad;
                break;
            case LayerKind::FullyConnected:
                manifest << " in " << s.in_channels << "x" << s.in_height << "x" << s.in_width
                         << " out " << s.out_channels;
                break;
            case LayerKind::Lrn:
                manifest << " size " << s.lrn.local_size << " alpha " << format_double(s.lrn.alpha)
                         << " beta " << format_double(s.lrn.beta) << " k "
                         << format_double(s.lrn.k);
                break;
            case LayerKind::Relu:
            case LayerKind::Softmax:
                break;
        }
        if (!layer.weights.empty() || !layer.bias.empty()) {
            manifest << " weights " << blob.size() << " count " << layer.weights.size();
            const std::vector<std::uint8_t> w = pack_f32(layer.weights);
            blob.insert(blob.end(), w.begin(), w.end());
            manifest << " bias " << blob.size() << " count " << layer.bias.size();
            const std::vector<std::uint8_t> b = pack_f32(layer.bias);
            blob.insert(blob.end(), b.begin(), b.end());
        }
        manifest << "\n";
    }
    manifest << "end\n";

    const std::string text = manifest.str();
    write_file(manifest_path, std::vector<std::uint8_t>(text.begin(), text.end()));
    write_file(weights_path, blob);
}

// ---- regressor ----

RegressorModel load_regressor(const std::string& manifest_path) {
    const std::vector<ManifestLine> lines = tokenize_manifest(manifest_path);
    for (const ManifestLine& l : lines)
        if (l.tokens.size() >= 2 && l.tokens[0] == "weights")
            return load_regressor(manifest_path, resolve_sibling(manifest_path, l.tokens[1]));
    fail(ErrorKind::Format, manifest_path + ": manifest does not name a weights blob");
}

RegressorModel load_regressor(const std::string& manifest_path, const std::string& weights_path) {
    const std::vector<ManifestLine> lines = tokenize_manifest(manifest_path);
    if (lines.empty()) fail(ErrorKind::Format, manifest_path + ": empty manifest");
    const ManifestLine& head = lines.front();
    if (head.tokens[0] != "FSREG")
        fail(ErrorKind::Format, manifest_path + ": bad magic '" + head.tokens[0] + "'");
    if (head.tokens.size() < 2 ||
        parse_long(head.tokens[1], manifest_path, head.number) != kRegressorFormatVersion)
        fail(ErrorKind::Format, manifest_path + ": unsupported format version");

    RegressorModel model;
    struct RowLoc {
        std::string name;
        std::uint64_t weight_offset = 0, weight_count = 0, bias_offset = 0, bias_count = 0;
    };
    std::vector<RowLoc> rows;
    bool saw_end = false;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const ManifestLine& line = lines[li];
        if (saw_end) manifest_error(manifest_path, line.number, "content after 'end'");
        const std::string& head_tok = line.tokens[0];
        if (head_tok == "end") {
            saw_end = true;
        } else if (head_tok == "weights") {
            // blob name, consumed by the single-argument loader
        } else if (head_tok == "feature_dim") {
            model.feature_dim =
                static_cast<int>(parse_long(line.tokens.at(1), manifest_path, line.number));
        } else if (head_tok == "lambda") {
            model.lambda = parse_number(line.tokens.at(1), manifest_path, line.number);
        } else if (head_tok == "row") {
            if (line.tokens.size() != 10 || line.tokens[2] != "weights" ||
                line.tokens[4] != "count" || line.tokens[6] != "bias" || line.tokens[8] != "count")
                manifest_error(manifest_path, line.number,
                               "want: row <name> weights <off> count <n> bias <off> count <n>");
            RowLoc loc;
            loc.name = line.tokens[1];
            loc.weight_offset =
                static_cast<std::uint64_t>(parse_long(line.tokens[3], manifest_path, line.number));
            loc.weight_count =
                static_cast<std::uint64_t>(parse_long(line.tokens[5], manifest_path, line.number));
            loc.bias_offset =
                static_cast<std::uint64_t>(parse_long(line.tokens[7], manifest_path, line.number));
            loc.bias_count =
                static_cast<std::uint64_t>(parse_long(line.tokens[9], manifest_path, line.number));
            rows.push_back(std::move(loc));
        } else {
            manifest_error(manifest_path, line.number, "unknown record '" + head_tok + "'");
        }
    }
    if (!saw_end) fail(ErrorKind::Format, manifest_path + ": missing 'end' marker");
    if (model.feature_dim < 1) fail(ErrorKind::Format, manifest_path + ": missing feature_dim");
    if (rows.size() != 4) fail(ErrorKind::Format, manifest_path + ": want exactly 4 delta rows");

    const char* expected[4] = {"tx", "ty", "tw", "th"};
    const std::vector<std::uint8_t> blob = read_file(weights_path);
    std::vector<double>* weights[4] = {&model.wx, &model.wy, &model.ww, &model.wh};
    double* biases[4] = {&model.bx, &model.by, &model.bw, &model.bh};
    std::uint64_t cursor = 0;
    for (int i = 0; i < 4; ++i) {
        const RowLoc& loc = rows[i];
        if (loc.name != expected[i])
            fail(ErrorKind::Format, manifest_path + ": row " + std::to_string(i) + " must be '" +
                                        expected[i] + "', got '" + loc.name + "'");
        if (loc.weight_count != static_cast<std::uint64_t>(model.feature_dim) || loc.bias_count != 1)
            fail(ErrorKind::ShapeMismatch,
                 manifest_path + ": row " + loc.name + " counts do not match feature_dim");
        if (loc.weight_offset != cursor || loc.bias_offset != cursor + loc.weight_count * 4)
            fail(ErrorKind::Format,
                 manifest_path + ": row " + loc.name + " offsets must ascend and leave no gaps");
        const std::uint64_t end = loc.bias_offset + 4;
        if (end > blob.size())
            fail(ErrorKind::Truncated, weights_path + ": blob ends inside row " + loc.name);
        *weights[i] = unpack_f32(blob.data() + loc.weight_offset, loc.weight_count);
        *biases[i] = unpack_f32(blob.data() + loc.bias_offset, 1)[0];
        cursor = end;
    }
    if (cursor != blob.size())
        fail(ErrorKind::Format, weights_path + ": blob has trailing bytes");
    return model;
}

void save_regressor(const RegressorModel& model, const std::string& manifest_path,
                    const std::string& weights_path) {
    if (model.feature_dim < 1 ||
        model.wx.size() != static_cast<std::size_t>(model.feature_dim) ||
        model.wy.size() != model.wx.size() || model.ww.size() != model.wx.size() ||
        model.wh.size() != model.wx.size())
        fail(ErrorKind::InvalidArgument, "regressor weight rows do not match feature_dim");

    std::ostringstream manifest;
    manifest << "FSREG " << kRegressorFormatVersion << "\n";
    manifest << "weights " << std::filesystem::path(weights_path).filename().string() << "\n";
    manifest << "feature_dim " << model.feature_dim << "\n";
    manifest << "lambda " << format_double(model.lambda) << "\n";

    const char* names[4] = {"tx", "ty", "tw", "th"};
    const std::vector<double>* weights[4] = {&model.wx, &model.wy, &model.ww, &model.wh};
    const double biases[4] = {model.bx, model.by, model.bw, model.bh};
    std::vector<std::uint8_t> blob;
    for (int i = 0; i < 4; ++i) {
        manifest << "row " << names[i] << " weights " << blob.size() << " count "
                 << weights[i]->size();
        const std::vector<std::uint8_t> w = pack_f32(*weights[i]);
        blob.insert(blob.end(), w.begin(), w.end());
        manifest << " bias " << blob.size() << " count 1\n";
        const std::vector<std::uint8_t> b = pack_f32({biases[i]});
        blob.insert(blob.end(), b.begin(), b.end());
    }
    manifest << "end\n";

    const std::string text = manifest.str();
    write_file(manifest_path, std::vector<std::uint8_t>(text.begin(), text.end()));
    write_file(weights_path, blob);
}

}  // namespace facescan
