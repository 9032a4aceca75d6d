// Road network topology: intersections, roads, and the segment partition.
#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tse {

struct Segment {
    size_t id = 0;
    std::vector<size_t> road_indices;

    size_t size() const { return road_indices.size(); }
};

struct RoadNetwork {
    size_t intersections = 0;
    std::vector<std::pair<size_t, size_t>> roads;  // endpoint intersection ids
    std::vector<Segment> segments;

    size_t road_count() const { return roads.size(); }
    size_t segment_count() const { return segments.size(); }

    // Roads sharing an intersection are neighbors (used by the synthetic generator).
    std::vector<std::vector<size_t>> road_adjacency() const;

    // Throws ConfigError unless the segments partition the road set.
    void validate() const;
};

// 8 intersections, 21 roads, 5 segments (sizes 4,4,4,4,5).
RoadNetwork default_network();

}  // namespace tse
