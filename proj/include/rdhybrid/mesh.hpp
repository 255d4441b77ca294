#pragma once

#include <array>
#include <cstdint>

#include "rdhybrid/model.hpp"
#include "rdhybrid/types.hpp"

namespace rdhybrid {

// Uniform voxel grid over a box. Voxel (ix, iy, iz) has linear index
// ix + nx * (iy + ny * iz).
class CartesianMesh {
public:
    // nx voxels along x; h = extent.x / nx. Throws ModelError if the other
    // extents are not integer multiples of h.
    CartesianMesh(const BoxDomain& domain, std::int64_t nx);

    const BoxDomain& domain() const { return domain_; }
    double h() const { return h_; }
    double voxel_volume() const { return h_ * h_ * h_; }
    std::array<std::int64_t, 3> dims() const { return dims_; }
    std::int64_t size() const { return dims_[0] * dims_[1] * dims_[2]; }

    VoxelIndex index(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return ix + dims_[0] * (iy + dims_[1] * iz);
    }
    std::array<std::int64_t, 3> coords(VoxelIndex v) const {
        return {v % dims_[0], (v / dims_[0]) % dims_[1], v / (dims_[0] * dims_[1])};
    }

    // Voxel containing p; faces belong to the voxel above them (lower-inclusive).
    // Points on the upper box face map to the last voxel.
    VoxelIndex locate(const Vec3& p) const;
    Vec3 voxel_lower(VoxelIndex v) const;
    Vec3 voxel_center(VoxelIndex v) const;

    // Face neighbours inside the box; returns the count (3..6). Outward faces
    // of boundary voxels are dropped (reflective boundary).
    int neighbors(VoxelIndex v, std::array<VoxelIndex, 6>& out) const;

private:
    BoxDomain domain_;
    double h_;
    std::array<std::int64_t, 3> dims_{};
};

}  // namespace rdhybrid
