#pragma once

#include "gsscene/error.hpp"
#include "gsscene/quaternion.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace gsscene {

/// Static 3-d tree over a point set, answering fixed-radius queries.
/// A query returns every index whose squared distance to the query point is
/// at most radius², sorted ascending.
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 8;

    KdTree() = default;

    explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
        for (const auto& p : points_) {
            if (!p.allFinite()) throw NonFiniteInput("spatial index input contains a non-finite point");
        }
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / kLeafSize + 1);
            build(0, static_cast<std::uint32_t>(points_.size()));
        }
    }

    std::size_t size() const noexcept { return points_.size(); }
    std::span<const Vec3> points() const noexcept { return points_; }

    std::vector<std::uint32_t> radius_query(const Vec3& center, double radius) const {
        std::vector<std::uint32_t> out;
        radius_query(center, radius, out);
        return out;
    }

    void radius_query(const Vec3& center, double radius, std::vector<std::uint32_t>& out) const {
        out.clear();
        if (nodes_.empty() || radius < 0.0) return;
        const double r2 = radius * radius;
        search(0, center, r2, out);
        std::sort(out.begin(), out.end());
    }

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1; // -1 marks a leaf
        std::int32_t right = -1;
        int axis = 0;
        double split = 0.0;
        Vec3 lo;
        Vec3 hi;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
        const auto idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        Vec3 lo = points_[order_[begin]];
        Vec3 hi = lo;
        for (std::uint32_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        nodes_[idx].lo = lo;
        nodes_[idx].hi = hi;
        if (end - begin <= kLeafSize) return idx;

        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double pa = points_[a][axis];
                             const double pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        const std::int32_t left = build(begin, mid);
        const std::int32_t right = build(mid, end);
        nodes_[idx].axis = axis;
        nodes_[idx].split = points_[order_[mid]][axis];
        nodes_[idx].left = left;
        nodes_[idx].right = right;
        return idx;
    }

    // Squared distance from `c` to the node's bounding box.
    static double box_distance2(const Node& n, const Vec3& c) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double v = c[a] < n.lo[a] ? n.lo[a] - c[a] : (c[a] > n.hi[a] ? c[a] - n.hi[a] : 0.0);
            d2 += v * v;
        }
        return d2;
    }

    void search(std::int32_t idx, const Vec3& c, double r2, std::vector<std::uint32_t>& out) const {
        const Node& n = nodes_[idx];
        if (box_distance2(n, c) > r2) return;
        if (n.left < 0) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const std::uint32_t id = order_[i];
                if ((points_[id] - c).squaredNorm() <= r2) out.push_back(id);
            }
            return;
        }
        search(n.left, c, r2, out);
        search(n.right, c, r2, out);
    }

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// Alias matching the collision module's vocabulary.
using SpatialIndex = KdTree;

inline SpatialIndex build_index(std::span<const Vec3> points) { return SpatialIndex(points); }

} // namespace gsscene
