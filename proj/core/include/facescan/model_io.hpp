#pragma once

#include <string>

#include "facescan/bbox_regression.hpp"
#include "facescan/net.hpp"

namespace facescan {

// Models persist as a pair of files: a line-oriented text manifest (magic
// "FSNET", versioned, one record per layer with byte offsets and element
// counts into the blob) and a raw little-endian float32 blob holding each
// layer's filters immediately followed by its biases. docs/FORMATS.md pins
// the layout byte for byte.

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kRegressorFormatVersion = 1;

NetworkSpec load_model(const std::string& manifest_path, const std::string& weights_path);
// Blob located via the manifest's `weights` entry, relative to the manifest.
NetworkSpec load_model(const std::string& manifest_path);
void save_model(const NetworkSpec& net, const std::string& manifest_path,
                const std::string& weights_path);

RegressorModel load_regressor(const std::string& manifest_path, const std::string& weights_path);
RegressorModel load_regressor(const std::string& manifest_path);
void save_regressor(const RegressorModel& model, const std::string& manifest_path,
                    const std::string& weights_path);

}  // namespace facescan
