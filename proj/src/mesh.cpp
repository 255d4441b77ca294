#include "rdhybrid/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace rdhybrid {

CartesianMesh::CartesianMesh(const BoxDomain& domain, std::int64_t nx) : domain_(domain) {
    if (nx <= 0) throw ModelError("mesh needs a positive voxel count");
    const Vec3 ext = domain.extent();
    h_ = ext.x / static_cast<double>(nx);
    if (!(h_ > 0.0)) throw ModelError("mesh needs a box with positive extent");
    dims_[0] = nx;
    for (int a = 1; a < 3; ++a) {
        const double n = ext[a] / h_;
        const double r = std::round(n);
        if (r < 1.0 || std::abs(n - r) > 1e-9 * std::max(1.0, n))
            throw ModelError("box extent along axis " + std::to_string(a) + " is not an integer multiple of h");
        dims_[a] = static_cast<std::int64_t>(r);
    }
}

VoxelIndex CartesianMesh::locate(const Vec3& p) const {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) {
        auto i = static_cast<std::int64_t>(std::floor((p[a] - domain_.lower[a]) / h_));
        c[a] = std::clamp<std::int64_t>(i, 0, dims_[a] - 1);
    }
    return index(c[0], c[1], c[2]);
}

Vec3 CartesianMesh::voxel_lower(VoxelIndex v) const {
    const auto c = coords(v);
    return {domain_.lower.x + h_ * static_cast<double>(c[0]), domain_.lower.y + h_ * static_cast<double>(c[1]),
            domain_.lower.z + h_ * static_cast<double>(c[2])};
}

Vec3 CartesianMesh::voxel_center(VoxelIndex v) const {
    return voxel_lower(v) + Vec3{0.5 * h_, 0.5 * h_, 0.5 * h_};
}

int CartesianMesh::neighbors(VoxelIndex v, std::array<VoxelIndex, 6>& out) const {
    const auto c = coords(v);
    const std::int64_t stride[3] = {1, dims_[0], dims_[0] * dims_[1]};
    int n = 0;
    for (int a = 0; a < 3; ++a) {
        if (c[a] > 0) out[n++] = v - stride[a];
        if (c[a] + 1 < dims_[a]) out[n++] = v + stride[a];
    }
    return n;
}

}  // namespace rdhybrid
