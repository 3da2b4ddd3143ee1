// Spatial partitioning of source positions: a 2D grid over the horizontal
// plane or 3D voxels. Cells are half-open ([min, max) per axis) with the
// global upper edge closed, so every boundary point has exactly one owner.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "odf/errors.hpp"
#include "odf/math.hpp"

namespace odf {

enum class PartitionKind : std::uint8_t { Grid2D = 0, Voxel3D = 1 };

inline const char* to_string(PartitionKind k) { return k == PartitionKind::Grid2D ? "grid2d" : "voxel3d"; }

using PartitionId = std::uint32_t;

struct PartitionResolution {
    // Either a per-axis cell count (grid) or a fixed cell edge in meters.
    enum class Mode { CellCounts, CellSize } mode = Mode::CellCounts;
    std::uint32_t counts[3] = {8, 8, 1};
    double cell_size = 16.0;

    static PartitionResolution from_counts(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz = 1) {
        PartitionResolution r;
        r.mode = Mode::CellCounts;
        r.counts[0] = nx;
        r.counts[1] = ny;
        r.counts[2] = nz;
        return r;
    }
    static PartitionResolution from_cell_size(double meters) {
        PartitionResolution r;
        r.mode = Mode::CellSize;
        r.cell_size = meters;
        return r;
    }
};

class PartitionScheme {
public:
    PartitionKind kind = PartitionKind::Grid2D;
    Vec3 origin;                    // lower corner of the covered box
    Vec3 cell_size{1.0, 1.0, 1.0};  // per-axis cell edge (z unused for grid2d)
    std::uint32_t dims[3] = {1, 1, 1};
    Aabb domain;                    // bounding box of the positions the scheme was built from

    static PartitionScheme build(const std::vector<Vec3>& positions, PartitionKind kind,
                                 const PartitionResolution& res) {
        if (positions.empty()) throw InputError("cannot build partition scheme from zero positions");
        PartitionScheme s;
        s.kind = kind;
        for (const Vec3& p : positions) s.domain.expand(p);
        s.origin = s.domain.min;
        const Vec3 span = s.domain.extent();
        const int axes = kind == PartitionKind::Grid2D ? 2 : 3;
        if (res.mode == PartitionResolution::Mode::CellCounts) {
            for (int a = 0; a < 3; ++a) {
                const std::uint32_t c = a < axes ? res.counts[a] : 1;
                if (c == 0) throw InputError("partition cell count must be positive");
                s.dims[a] = a < axes ? c : 1;
            }
            s.cell_size = {span.x > 0 ? span.x / s.dims[0] : 1.0, span.y > 0 ? span.y / s.dims[1] : 1.0,
                           axes == 3 && span.z > 0 ? span.z / s.dims[2] : (span.z > 0 ? span.z : 1.0)};
            if (axes == 2) s.dims[2] = 1;
        } else {
            if (res.cell_size <= 0.0) throw InputError("partition cell size must be positive");
            s.cell_size = {res.cell_size, res.cell_size, res.cell_size};
            for (int a = 0; a < 3; ++a) {
                if (a >= axes) {
                    s.dims[a] = 1;
                    continue;
                }
                const double sp = span[a];
                s.dims[a] = sp > 0 ? static_cast<std::uint32_t>(std::ceil(sp / res.cell_size)) : 1;
                if (s.dims[a] == 0) s.dims[a] = 1;
            }
        }
        // Enumerate active cells in ascending linear-id order.
        std::vector<PartitionId> ids;
        ids.reserve(positions.size());
        for (const Vec3& p : positions) ids.push_back(s.cell_of(p));
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        s.active_ = std::move(ids);
        for (std::size_t i = 0; i < s.active_.size(); ++i) s.index_[s.active_[i]] = i;
        return s;
    }

    std::size_t active_count() const { return active_.size(); }
    const std::vector<PartitionId>& active_cells() const { return active_; }

    // Dense index of an active cell id (order of active_cells()).
    std::size_t active_index(PartitionId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw NoCoverageError("partition id " + std::to_string(id) + " is not active");
        return it->second;
    }

    bool is_active(PartitionId id) const { return index_.count(id) > 0; }

    // Linear cell id for a position, independent of activity. Throws
    // NoCoverageError when the position lies outside the covered box.
    PartitionId cell_of(const Vec3& p) const {
        const int axes = kind == PartitionKind::Grid2D ? 2 : 3;
        std::uint32_t c[3] = {0, 0, 0};
        for (int a = 0; a < axes; ++a) {
            const double rel = p[a] - origin[a];
            const double hi = domain.max[a] - origin[a];
            if (rel < 0.0 || rel > hi)
                throw NoCoverageError("position outside partition domain on axis " + std::to_string(a));
            // floor rule, upper edge exclusive except the global max edge
            std::uint32_t idx = rel >= hi ? dims[a] - 1
                                          : static_cast<std::uint32_t>(rel / cell_size[a]);
            if (idx >= dims[a]) idx = dims[a] - 1;
            c[a] = idx;
        }
        return c[0] + dims[0] * (c[1] + static_cast<std::uint64_t>(dims[1]) * c[2]);
    }

    // Partition id for a source position; the cell must be active.
    PartitionId partition_of(const Vec3& p) const {
        const PartitionId id = cell_of(p);
        if (!is_active(id))
            throw NoCoverageError("cell " + std::to_string(id) + " holds no trained partition");
        return id;
    }

    // Geometric bounds of a cell (z spans the full domain for grid2d).
    Aabb cell_bounds(PartitionId id) const {
        const std::uint32_t ix = id % dims[0];
        const std::uint32_t iy = (id / dims[0]) % dims[1];
        const std::uint32_t iz = id / (static_cast<std::uint64_t>(dims[0]) * dims[1]);
        Aabb box;
        box.min = {origin.x + ix * cell_size.x, origin.y + iy * cell_size.y,
                   kind == PartitionKind::Grid2D ? domain.min.z : origin.z + iz * cell_size.z};
        box.max = {box.min.x + cell_size.x, box.min.y + cell_size.y,
                   kind == PartitionKind::Grid2D ? domain.max.z : box.min.z + cell_size.z};
        return box;
    }

    // Used by deserialization; trusts the caller to pass a sorted unique list.
    void set_active_cells(std::vector<PartitionId> ids) {
        active_ = std::move(ids);
        index_.clear();
        for (std::size_t i = 0; i < active_.size(); ++i) index_[active_[i]] = i;
    }

private:
    std::vector<PartitionId> active_;
    std::unordered_map<PartitionId, std::size_t> index_;
};

}  // namespace odf
