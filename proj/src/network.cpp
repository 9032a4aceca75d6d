#include "tse/network.hpp"

#include <algorithm>

#include "tse/common.hpp"

namespace tse {

std::vector<std::vector<size_t>> RoadNetwork::road_adjacency() const {
    std::vector<std::vector<size_t>> by_node(intersections);
    for (size_t e = 0; e < roads.size(); ++e) {
        by_node[roads[e].first].push_back(e);
        by_node[roads[e].second].push_back(e);
    }
    std::vector<std::vector<size_t>> adj(roads.size());
    for (const auto& incident : by_node) {
        for (size_t a : incident) {
            for (size_t b : incident) {
                if (a != b) adj[a].push_back(b);
            }
        }
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

void RoadNetwork::validate() const {
    std::vector<int> seen(roads.size(), 0);
    for (const auto& seg : segments) {
        if (seg.road_indices.empty()) {
            throw ConfigError("segment " + std::to_string(seg.id) + " has no roads");
        }
        for (size_t r : seg.road_indices) {
            if (r >= roads.size()) {
                throw ConfigError("segment " + std::to_string(seg.id) + " references road " +
                                  std::to_string(r) + " but the network has only " +
                                  std::to_string(roads.size()) + " roads");
            }
            if (seen[r]++) {
                throw ConfigError("road " + std::to_string(r) + " appears in more than one segment");
            }
        }
    }
    for (size_t r = 0; r < roads.size(); ++r) {
        if (!seen[r]) {
            throw ConfigError("road " + std::to_string(r) + " is not covered by any segment");
        }
    }
}

RoadNetwork default_network() {
    RoadNetwork net;
    net.intersections = 8;
    // ring + chords, 21 distinct edges over 8 nodes
    net.roads = {
        {0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0},  // ring
        {0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 7}, {6, 0}, {7, 1},  // short chords
        {0, 4}, {1, 5}, {2, 6}, {3, 7},                                  // diameters
        {0, 3},
    };
    const std::vector<std::vector<size_t>> groups = {
        {0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}, {12, 13, 14, 15}, {16, 17, 18, 19, 20}};
    for (size_t k = 0; k < groups.size(); ++k) {
        net.segments.push_back(Segment{k, groups[k]});
    }
    net.validate();
    return net;
}

}  // namespace tse
