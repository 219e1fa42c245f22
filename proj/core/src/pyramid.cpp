#include <algorithm>

#include "facescan/pyramid.hpp"

namespace facescan {

std::vector<PyramidLevel> build_pyramid(const Image& img, const PyramidConfig& cfg,
                                        std::ostream* log) {
    if (!(cfg.scale_step > 0.0) || !(cfg.scale_step < 1.0))
        fail(ErrorKind::InvalidArgument, "pyramid scale step must lie in (0, 1)");
    if (!(cfg.upscale >= 1.0))
        fail(ErrorKind::InvalidArgument, "pyramid upscale factor must be >= 1");
    if (cfg.min_dim < 1)
        fail(ErrorKind::InvalidArgument, "pyramid minimum dimension must be >= 1");

    std::vector<PyramidLevel> levels;
    double scale = cfg.upscale;
    while (true) {
        const int h = scaled_dim(img.height, scale);
        const int w = scaled_dim(img.width, scale);
        if (std::min(h, w) < cfg.min_dim) break;
        levels.push_back({resize_bilinear(img, scale), scale});
        scale *= cfg.scale_step;
    }
    if (levels.empty() && log)
        *log << "note: image " << img.width << "x" << img.height
             << " is too small for the scan window even at upscale " << cfg.upscale << "\n";
    return levels;
}

}  // namespace facescan
