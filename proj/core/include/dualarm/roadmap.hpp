#ifndef DUALARM_ROADMAP_HPP
#define DUALARM_ROADMAP_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "dualarm/vae.hpp"

namespace dualarm {

enum class NodeSource { Dataset, Synthetic };

struct GraphNode {
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    SafetyLabel label = SafetyLabel::Safe;
    JointConfig theta_b;  // decoded arm_2 pose; the planner needs no model at runtime
    NodeSource source = NodeSource::Dataset;
};

/**
 * KNN roadmap over the latent manifold. Adjacency is undirected with
 * weights equal to latent Euclidean distance; only safe nodes carry
 * edges. The graph is immutable after build — blacklists are per-query
 * overlays, never mutations.
 */
struct LatentGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::map<int, double>> adjacency;

    int size() const { return static_cast<int>(nodes.size()); }
    bool is_safe(int id) const {
        return nodes[static_cast<std::size_t>(id)].label == SafetyLabel::Safe;
    }
};

struct PathQuery {
    int start = 0;
    int goal = 0;
    std::unordered_set<int> blacklist;
};

struct PathResult {
    std::vector<int> nodes;
    double weight = 0.0;
};

/// Start and goal ended up in different connected components (possibly cut
/// apart by the blacklist). Carries both components' sizes.
class NoPathError : public std::runtime_error {
public:
    NoPathError(std::size_t start_component, std::size_t goal_component)
        : std::runtime_error("no path: start component has " +
                             std::to_string(start_component) + " nodes, goal component has " +
                             std::to_string(goal_component)),
          start_component_size(start_component),
          goal_component_size(goal_component) {}
    std::size_t start_component_size;
    std::size_t goal_component_size;
};

/**
 * Symmetric KNN edge set over a point list: (i, j) is an edge when j ranks
 * among i's k nearest points or vice versa. Distance ties resolve toward
 * the smaller index. Pairs come back sorted with i < j.
 */
std::vector<std::pair<int, int>> symmetric_knn_edges(const std::vector<Eigen::Vector2d>& points,
                                                     int k);

/**
 * Embed the dataset at encode(.)'s mu with true labels, densify with
 * n_synthetic uniform draws over the embedded bounding box labeled by the
 * decoder, and connect safe nodes with symmetric KNN edges (an edge exists
 * when either endpoint ranks the other among its k nearest safe nodes).
 * Dataset-only KNN edges are kept when synthetic nodes are added, so
 * densification only ever adds connectivity. Throws if no safe node exists.
 */
LatentGraph build_graph(const VaeModel& model, const Dataset& ds, int k, int n_synthetic,
                        std::uint64_t seed);

/**
 * Dijkstra over safe, non-blacklisted nodes. Ties at equal tentative
 * distance resolve toward the smaller node id, making results deterministic.
 * Throws NoPathError when the goal is unreachable, std::invalid_argument on
 * an unsafe or blacklisted endpoint.
 */
PathResult shortest_path(const LatentGraph& graph, const PathQuery& query);

/// shortest_path under blacklist ∪ additions; the graph is never mutated.
PathResult replan(const LatentGraph& graph, int current, int goal,
                  const std::unordered_set<int>& blacklist,
                  const std::unordered_set<int>& additions);

/// Safe node minimizing latent distance to z; ties toward the smaller id.
int nearest_safe_node(const LatentGraph& graph, const Eigen::Vector2d& z);

/// Safe node minimizing joint-space distance of its stored theta_b to the
/// given config. Used to anchor start/goal configs without the model.
/// Optionally restricted to a node subset (e.g. the largest component).
int nearest_safe_node_by_config(const LatentGraph& graph, const JointConfig& config,
                                const std::vector<int>* restrict_to = nullptr);

/// Node ids of the largest connected component among safe nodes (ascending).
std::vector<int> largest_component(const LatentGraph& graph);

/// Check structural invariants (symmetry, metric weights, safe-only edges,
/// no self-loops). Throws std::runtime_error naming the first violation.
void validate_graph(const LatentGraph& graph);

/// graph.json round trip: {nodes: [{id, z, label, theta_b, source}], edges: [[i, j, w]]}.
void save_graph(const LatentGraph& graph, const std::string& path);
LatentGraph load_graph(const std::string& path);

/// Scatter data for the latent manifold: id,u,v,label,source per row.
void write_latent_scatter_csv(const LatentGraph& graph, const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_ROADMAP_HPP
