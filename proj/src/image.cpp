#include "shdebias/image.hpp"

#include <algorithm>
#include <string>

namespace shdebias {

void require_coherent(const RgbImage& img, const char* what) {
    const ImagePlane& r = img.r;
    auto same = [&](const ImagePlane& p) {
        return p.width == r.width && p.height == r.height &&
               p.encoding.kind == r.encoding.kind;
    };
    if (!same(img.g) || !same(img.b))
        throw PreconditionError(std::string(what) + ": channel shape/encoding mismatch");
    if (r.width <= 0 || r.height <= 0)
        throw PreconditionError(std::string(what) + ": empty image");
}

std::size_t FaceMask::count() const {
    return static_cast<std::size_t>(std::count(on.begin(), on.end(), std::uint8_t{1}));
}

void require_same_shape(const ImagePlane& img, const FaceMask& mask, const char* what) {
    if (img.width != mask.width || img.height != mask.height)
        throw PreconditionError(std::string(what) + ": mask/image shape mismatch");
}

}  // namespace shdebias
