#ifndef DUALARM_SENSOR_PLACEMENT_HPP
#define DUALARM_SENSOR_PLACEMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "dualarm/dataset.hpp"
#include "dualarm/kinematics.hpp"

namespace dualarm {

/// Cuboid face, named by its outward normal in the geometry frame.
enum class Face { PosX, NegX, PosY, NegY, PosZ, NegZ };

inline constexpr std::array<Face, 6> kAllFaces = {Face::PosX, Face::NegX, Face::PosY,
                                                  Face::NegY, Face::PosZ, Face::NegZ};

std::string face_name(Face f);
Face face_from_name(const std::string& name);

/// In-plane half extents (u, v) of a face. The uv axes are the geometry
/// axes other than the face normal, in coordinate order:
///   +/-X faces -> (u, v) = (y, z); +/-Y -> (x, z); +/-Z -> (x, y).
Eigen::Vector2d face_half_extents(const Cuboid& cuboid, Face f);

/// A collision point expressed in a link face's planar coordinates.
struct FaceHit {
    int link = 0;  // 2..6
    Face face = Face::PosX;
    Eigen::Vector2d uv = Eigen::Vector2d::Zero();
};

struct TagResult {
    std::vector<FaceHit> hits;
    std::size_t rejected = 0;  // points farther than tol from every face
};

/**
 * Transform every logged contact point into its link frame at the sample's
 * own config, map it into the link's cuboid geometry frame, and assign it
 * to the nearest face. Points farther than `tol` from every face rectangle
 * are counted in `rejected` instead.
 */
TagResult tag_collision_points(const Dataset& ds, const KinematicChain& chain_b,
                               double tol = 1e-6);

/// A placed proximity sensor: face point plus how many hits produced it.
struct SensorPlacement {
    int link = 0;
    Face face = Face::PosX;
    Eigen::Vector2d uv = Eigen::Vector2d::Zero();
    int n_hits = 0;
};

enum class PlacementStatistic { Mean, Median };

struct PlacementOptions {
    int min_hits = 30;
    PlacementStatistic statistic = PlacementStatistic::Mean;  // Median is opt-in
};

/**
 * Empirical expectation of the face hits (component-wise mean by default),
 * clamped into the face rectangle. Returns nullopt with fewer than
 * min_hits hits on that face.
 */
std::optional<SensorPlacement> optimal_placement(const std::vector<FaceHit>& hits, int link,
                                                 Face face, const Cuboid& cuboid,
                                                 const PlacementOptions& options = {});

struct PlacementSet {
    std::vector<SensorPlacement> placements;
    std::vector<std::pair<int, Face>> skipped;  // faces below min_hits
};

/// Placements for every (link 2..6, face) group with enough hits.
PlacementSet place_all(const std::vector<FaceHit>& hits, const KinematicChain& chain_b,
                       const PlacementOptions& options = {});

struct Histogram2D {
    int link = 0;
    Face face = Face::PosX;
    int bins = 0;
    std::vector<std::vector<std::size_t>> counts;  // [u_bin][v_bin]
    std::vector<double> u_edges;                   // bins+1 edges spanning the face
    std::vector<double> v_edges;
};

/// 2-D histogram of a face's hits over the face rectangle. Throws on zero hits.
Histogram2D face_histogram(const std::vector<FaceHit>& hits, int link, Face face,
                           const Cuboid& cuboid, int bins);

/// placement.json round trip: {link: {face: {"uv": [2], "n_hits": int}}}.
void save_placements(const PlacementSet& set, const std::string& path);
PlacementSet load_placements(const std::string& path);

/// CSV rows "u_bin,v_bin,count" with bin-center coordinates.
void write_histogram_csv(const Histogram2D& hist, const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_SENSOR_PLACEMENT_HPP
