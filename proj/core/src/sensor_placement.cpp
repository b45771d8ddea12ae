#include "dualarm/sensor_placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"

namespace dualarm {

namespace {

int face_axis(Face f) {
    switch (f) {
        case Face::PosX:
        case Face::NegX: return 0;
        case Face::PosY:
        case Face::NegY: return 1;
        default: return 2;
    }
}

double face_sign(Face f) {
    return (f == Face::PosX || f == Face::PosY || f == Face::PosZ) ? 1.0 : -1.0;
}

/// uv axes = the two geometry axes other than the face normal, in order.
std::pair<int, int> face_uv_axes(Face f) {
    switch (face_axis(f)) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

/// 3-D distance from a geometry-frame point to the face rectangle.
double face_rect_distance(const Eigen::Vector3d& p, const Cuboid& c, Face f) {
    const int n = face_axis(f);
    const auto [ua, va] = face_uv_axes(f);
    const double dn = p[n] - face_sign(f) * c.half_extents[n];
    const double du = std::max(0.0, std::abs(p[ua]) - c.half_extents[ua]);
    const double dv = std::max(0.0, std::abs(p[va]) - c.half_extents[va]);
    return std::sqrt(dn * dn + du * du + dv * dv);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string face_name(Face f) {
    switch (f) {
        case Face::PosX: return "+X";
        case Face::NegX: return "-X";
        case Face::PosY: return "+Y";
        case Face::NegY: return "-Y";
        case Face::PosZ: return "+Z";
        default: return "-Z";
    }
}

Face face_from_name(const std::string& name) {
    for (Face f : kAllFaces)
        if (face_name(f) == name) return f;
    throw std::runtime_error("unknown face name: " + name);
}

Eigen::Vector2d face_half_extents(const Cuboid& cuboid, Face f) {
    const auto [ua, va] = face_uv_axes(f);
    return {cuboid.half_extents[ua], cuboid.half_extents[va]};
}

TagResult tag_collision_points(const Dataset& ds, const KinematicChain& chain_b, double tol) {
    TagResult result;
    for (const Sample& s : ds.samples) {
        for (const CollisionContact& contact : s.collisions) {
            const Cuboid& cuboid =
                chain_b.links[static_cast<std::size_t>(contact.link_b - 1)].geometry;
            const Eigen::Vector3d p_link =
                world_to_link_frame(chain_b, contact.link_b, s.theta_b, contact.point_world);
            const Eigen::Vector3d p_geo = cuboid.frame_offset.inverse().apply(p_link);

            Face best = Face::PosX;
            double best_dist = std::numeric_limits<double>::infinity();
            for (Face f : kAllFaces) {
                const double d = face_rect_distance(p_geo, cuboid, f);
                if (d < best_dist) {
                    best_dist = d;
                    best = f;
                }
            }
            if (best_dist > tol) {
                ++result.rejected;
                continue;
            }
            const auto [ua, va] = face_uv_axes(best);
            result.hits.push_back({contact.link_b, best, {p_geo[ua], p_geo[va]}});
        }
    }
    return result;
}

std::optional<SensorPlacement> optimal_placement(const std::vector<FaceHit>& hits, int link,
                                                 Face face, const Cuboid& cuboid,
                                                 const PlacementOptions& options) {
    std::vector<double> us, vs;
    for (const FaceHit& h : hits) {
        if (h.link == link && h.face == face) {
            us.push_back(h.uv.x());
            vs.push_back(h.uv.y());
        }
    }
    if (static_cast<int>(us.size()) < options.min_hits) return std::nullopt;

    Eigen::Vector2d uv;
    if (options.statistic == PlacementStatistic::Mean) {
        uv.x() = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(us.size());
        uv.y() = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
    } else {
        uv = {median_of(us), median_of(vs)};
    }
    const Eigen::Vector2d he = face_half_extents(cuboid, face);
    uv = uv.cwiseMax(-he).cwiseMin(he);  // a sensor must sit on the face
    return SensorPlacement{link, face, uv, static_cast<int>(us.size())};
}

PlacementSet place_all(const std::vector<FaceHit>& hits, const KinematicChain& chain_b,
                       const PlacementOptions& options) {
    PlacementSet set;
    for (int link = 2; link <= kNumLinks; ++link) {
        const Cuboid& cuboid = chain_b.links[static_cast<std::size_t>(link - 1)].geometry;
        for (Face f : kAllFaces) {
            if (auto p = optimal_placement(hits, link, f, cuboid, options))
                set.placements.push_back(*p);
            else
                set.skipped.emplace_back(link, f);
        }
    }
    return set;
}

Histogram2D face_histogram(const std::vector<FaceHit>& hits, int link, Face face,
                           const Cuboid& cuboid, int bins) {
    if (bins < 1) throw std::invalid_argument("face_histogram: bins must be >= 1");
    Histogram2D hist;
    hist.link = link;
    hist.face = face;
    hist.bins = bins;
    hist.counts.assign(static_cast<std::size_t>(bins),
                       std::vector<std::size_t>(static_cast<std::size_t>(bins), 0));
    const Eigen::Vector2d he = face_half_extents(cuboid, face);
    for (int axis = 0; axis < 2; ++axis) {
        auto& edges = axis == 0 ? hist.u_edges : hist.v_edges;
        edges.resize(static_cast<std::size_t>(bins) + 1);
        for (int i = 0; i <= bins; ++i)
            edges[static_cast<std::size_t>(i)] = -he[axis] + 2.0 * he[axis] * i / bins;
    }

    std::size_t total = 0;
    for (const FaceHit& h : hits) {
        if (h.link != link || h.face != face) continue;
        const auto bin_of = [&](double x, double half) {
            const int b = static_cast<int>(std::floor((x + half) / (2.0 * half) * bins));
            return std::clamp(b, 0, bins - 1);
        };
        ++hist.counts[static_cast<std::size_t>(bin_of(h.uv.x(), he.x()))]
                     [static_cast<std::size_t>(bin_of(h.uv.y(), he.y()))];
        ++total;
    }
    if (total == 0) throw std::invalid_argument("face_histogram: no hits on this face");
    return hist;
}

void save_placements(const PlacementSet& set, const std::string& path) {
    json doc = json::object();
    for (const SensorPlacement& p : set.placements) {
        doc[std::to_string(p.link)][face_name(p.face)] =
            json{{"uv", vec2_to_json(p.uv)}, {"n_hits", p.n_hits}};
    }
    write_file_atomic(path, doc.dump(2) + "\n");
}

PlacementSet load_placements(const std::string& path) {
    const json doc = json::parse(read_file(path));
    PlacementSet set;
    for (const auto& [link_key, faces] : doc.items()) {
        const int link = std::stoi(link_key);
        for (const auto& [fname, entry] : faces.items()) {
            SensorPlacement p;
            p.link = link;
            p.face = face_from_name(fname);
            p.uv = vec2_from_json(entry.at("uv"));
            p.n_hits = entry.at("n_hits").get<int>();
            set.placements.push_back(p);
        }
    }
    return set;
}

void write_histogram_csv(const Histogram2D& hist, const std::string& path) {
    std::ostringstream out;
    out << "u_bin,v_bin,count\n";
    for (int i = 0; i < hist.bins; ++i) {
        for (int j = 0; j < hist.bins; ++j) {
            const double uc = 0.5 * (hist.u_edges[static_cast<std::size_t>(i)] +
                                     hist.u_edges[static_cast<std::size_t>(i) + 1]);
            const double vc = 0.5 * (hist.v_edges[static_cast<std::size_t>(j)] +
                                     hist.v_edges[static_cast<std::size_t>(j) + 1]);
            out << uc << "," << vc << ","
                << hist.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] << "\n";
        }
    }
    write_file_atomic(path, out.str());
}

}  // namespace dualarm
