#ifndef CHAFFSIM_TRACES_HPP
#define CHAFFSIM_TRACES_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chaffsim/errors.hpp"
#include "chaffsim/mobility.hpp"

namespace chaffsim {

struct RawTracePoint {
    std::string node_id;
    double timestamp = 0.0;  // seconds since epoch
    double latitude = 0.0;
    double longitude = 0.0;
};

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

// Towers surviving dedup; the index in `towers` is the cell id.
struct CellMap {
    std::vector<LatLon> towers;
};

// Great-circle distance in meters on a 6371 km sphere.
inline double haversine_m(const LatLon& a, const LatLon& b) {
    constexpr double kEarthRadiusM = 6371000.0;
    constexpr double kDeg = M_PI / 180.0;
    double dlat = (b.lat - a.lat) * kDeg;
    double dlon = (b.lon - a.lon) * kDeg;
    double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * std::sin(dlon / 2) *
                   std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

// Greedy scan in input order: keep a tower iff no previously kept tower lies
// within `radius_meters`.
inline CellMap dedup_towers(const std::vector<LatLon>& towers, double radius_meters) {
    if (towers.empty()) throw ValidationError("empty tower list");
    if (radius_meters < 0) throw ValidationError("radius must be nonnegative");
    CellMap map;
    for (const auto& t : towers) {
        bool close = false;
        for (const auto& kept : map.towers)
            if (haversine_m(t, kept) <= radius_meters) {
                close = true;
                break;
            }
        if (!close) map.towers.push_back(t);
    }
    return map;
}

// Nearest tower id by great-circle distance; smallest id wins ties.
inline int nearest_cell(const CellMap& map, const LatLon& p) {
    int best = 0;
    double best_d = haversine_m(p, map.towers[0]);
    for (int i = 1; i < static_cast<int>(map.towers.size()); ++i) {
        double d = haversine_m(p, map.towers[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

inline Trajectory quantize(const std::vector<LatLon>& series, const CellMap& map) {
    if (map.towers.empty()) throw ValidationError("empty cell map");
    Trajectory out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = nearest_cell(map, series[i]);
    return out;
}

namespace detail {

// Linear interpolation of a sorted (timestamp, position) series onto explicit
// grid times. Fails (returns false) if the grid leaves the observed span or a
// gap between consecutive observations exceeds the cutoff.
inline bool interpolate_onto_grid(const std::vector<RawTracePoint>& pts,
                                  const std::vector<double>& grid_times,
                                  double inactivity_cutoff, std::vector<LatLon>& out) {
    if (pts.size() < 2) return false;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].timestamp - pts[i - 1].timestamp > inactivity_cutoff) return false;
    if (grid_times.front() < pts.front().timestamp ||
        grid_times.back() > pts.back().timestamp)
        return false;
    out.clear();
    out.reserve(grid_times.size());
    std::size_t seg = 1;
    for (double t : grid_times) {
        while (seg < pts.size() - 1 && pts[seg].timestamp < t) ++seg;
        const auto& a = pts[seg - 1];
        const auto& b = pts[seg];
        double span = b.timestamp - a.timestamp;
        double w = span > 0 ? (t - a.timestamp) / span : 0.0;
        out.push_back({a.latitude + w * (b.latitude - a.latitude),
                       a.longitude + w * (b.longitude - a.longitude)});
    }
    return true;
}

}  // namespace detail

struct RegularizedNode {
    std::string node_id;
    std::vector<LatLon> series;
    double start_time = 0.0;
};

// Per-node uniform-grid resampling over each node's own observed span. Nodes
// with fewer than 2 points or an internal gap beyond the cutoff are dropped.
inline std::vector<RegularizedNode> regularize(
    const std::map<std::string, std::vector<RawTracePoint>>& per_node, double interval,
    double inactivity_cutoff, std::vector<std::string>* dropped = nullptr) {
    if (interval <= 0) throw ValidationError("interval must be positive");
    std::vector<RegularizedNode> out;
    for (const auto& [node, pts_in] : per_node) {
        std::vector<RawTracePoint> pts = pts_in;
        std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
            return a.timestamp < b.timestamp;
        });
        std::vector<double> grid;
        if (pts.size() >= 2)
            for (double t = pts.front().timestamp; t <= pts.back().timestamp + 1e-9;
                 t += interval)
                grid.push_back(t);
        std::vector<LatLon> series;
        if (grid.size() >= 1 &&
            detail::interpolate_onto_grid(pts, grid, inactivity_cutoff, series)) {
            out.push_back({node, std::move(series), pts.front().timestamp});
        } else if (dropped) {
            dropped->push_back(node);
        }
    }
    return out;
}

struct IngestStats {
    int nodes_kept = 0;
    int nodes_dropped = 0;
    int malformed_records = 0;
    int cell_count = 0;
    int slots = 0;
};

struct Corpus {
    std::vector<std::string> node_ids;
    std::vector<Trajectory> trajectories;
    CellMap cells;
    IngestStats stats;
};

inline std::map<std::string, std::vector<RawTracePoint>> parse_raw_traces(
    std::istream& is, int* malformed = nullptr) {
    std::map<std::string, std::vector<RawTracePoint>> per_node;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        RawTracePoint p;
        if (!(ss >> p.node_id >> p.timestamp >> p.latitude >> p.longitude) ||
            std::fabs(p.latitude) > 90.0 || std::fabs(p.longitude) > 180.0) {
            if (malformed) ++(*malformed);
            continue;
        }
        per_node[p.node_id].push_back(p);
    }
    return per_node;
}

inline std::vector<LatLon> parse_towers(std::istream& is, int* malformed = nullptr) {
    std::vector<LatLon> towers;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        LatLon t;
        if (!(ss >> t.lat >> t.lon) || std::fabs(t.lat) > 90.0 || std::fabs(t.lon) > 180.0) {
            if (malformed) ++(*malformed);
            continue;
        }
        towers.push_back(t);
    }
    return towers;
}

// Full ingestion pipeline: parse, per-node sort, resample onto the window grid
// (dropping nodes that do not cover it or have a gap beyond the cutoff),
// quantize to Voronoi cells. All surviving trajectories share the window grid
// and therefore have equal length.
inline Corpus build_corpus(std::istream& traces_in, std::istream& towers_in,
                           double window_start, double window_length,
                           double interval = 60.0, double inactivity_cutoff = 300.0,
                           double dedup_radius = 100.0) {
    Corpus corpus;
    auto per_node = parse_raw_traces(traces_in, &corpus.stats.malformed_records);
    auto towers = parse_towers(towers_in, &corpus.stats.malformed_records);
    corpus.cells = dedup_towers(towers, dedup_radius);

    int T = static_cast<int>(std::floor(window_length / interval));
    if (T < 1) throw ValidationError("window shorter than one interval");
    std::vector<double> grid(T);
    for (int k = 0; k < T; ++k) grid[k] = window_start + k * interval;

    for (auto& [node, pts] : per_node) {
        std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
            return a.timestamp < b.timestamp;
        });
        std::vector<LatLon> series;
        if (detail::interpolate_onto_grid(pts, grid, inactivity_cutoff, series)) {
            corpus.node_ids.push_back(node);
            corpus.trajectories.push_back(quantize(series, corpus.cells));
            ++corpus.stats.nodes_kept;
        } else {
            ++corpus.stats.nodes_dropped;
        }
    }
    if (corpus.trajectories.empty()) throw ValidationError("no nodes survived ingestion");
    corpus.stats.cell_count = static_cast<int>(corpus.cells.towers.size());
    corpus.stats.slots = T;
    return corpus;
}

// Trajectory file: "node_id c1 c2 ... cT" per line.
inline void write_trajectories(std::ostream& os, const std::vector<std::string>& ids,
                               const std::vector<Trajectory>& trajectories) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        os << ids[i];
        for (int c : trajectories[i]) os << " " << c;
        os << "\n";
    }
}

inline std::pair<std::vector<std::string>, std::vector<Trajectory>> read_trajectories(
    std::istream& is) {
    std::vector<std::string> ids;
    std::vector<Trajectory> trajectories;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id;
        if (!(ss >> id)) continue;
        Trajectory x;
        int c;
        while (ss >> c) x.push_back(c);
        if (x.empty()) throw IoError("trajectory line without cells");
        ids.push_back(id);
        trajectories.push_back(std::move(x));
    }
    return {std::move(ids), std::move(trajectories)};
}

}  // namespace chaffsim

#endif
