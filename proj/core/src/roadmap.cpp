#include "dualarm/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "json_util.hpp"

namespace dualarm {

namespace {

/// symmetric_knn_edges over the subset `ids`, results in node-id space.
std::vector<std::pair<int, int>> knn_edges(const LatentGraph& graph,
                                           const std::vector<int>& ids, int k) {
    std::vector<Eigen::Vector2d> points;
    points.reserve(ids.size());
    for (const int id : ids) points.push_back(graph.nodes[static_cast<std::size_t>(id)].z);
    std::vector<std::pair<int, int>> edges = symmetric_knn_edges(points, k);
    for (auto& [i, j] : edges) {
        i = ids[static_cast<std::size_t>(i)];
        j = ids[static_cast<std::size_t>(j)];
    }
    return edges;
}

void add_edges(LatentGraph& graph, const std::vector<std::pair<int, int>>& edges) {
    for (const auto& [i, j] : edges) {
        const double w = (graph.nodes[static_cast<std::size_t>(i)].z -
                          graph.nodes[static_cast<std::size_t>(j)].z)
                             .norm();
        graph.adjacency[static_cast<std::size_t>(i)][j] = w;
        graph.adjacency[static_cast<std::size_t>(j)][i] = w;
    }
}

bool usable(const LatentGraph& graph, int id, const std::unordered_set<int>& blacklist) {
    return graph.is_safe(id) && !blacklist.contains(id);
}

/// Size of the connected component containing `root` among usable nodes.
std::size_t component_size(const LatentGraph& graph, int root,
                           const std::unordered_set<int>& blacklist) {
    std::vector<char> seen(static_cast<std::size_t>(graph.size()), 0);
    std::vector<int> stack{root};
    seen[static_cast<std::size_t>(root)] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        ++count;
        for (const auto& [v, w] : graph.adjacency[static_cast<std::size_t>(u)]) {
            (void)w;
            if (!seen[static_cast<std::size_t>(v)] && usable(graph, v, blacklist)) {
                seen[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    return count;
}

const char* label_name(SafetyLabel l) {
    return l == SafetyLabel::Safe ? "safe" : "colliding";
}
const char* source_name(NodeSource s) {
    return s == NodeSource::Dataset ? "dataset" : "synthetic";
}

}  // namespace

std::vector<std::pair<int, int>> symmetric_knn_edges(const std::vector<Eigen::Vector2d>& points,
                                                     int k) {
    std::vector<std::pair<int, int>> edges;
    const auto n = points.size();
    if (n < 2 || k < 1) return edges;
    for (std::size_t a = 0; a < n; ++a) {
        // (distance^2, index) max-heap holding the k best candidates
        std::priority_queue<std::pair<double, int>> heap;
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const std::pair<double, int> cand{(points[b] - points[a]).squaredNorm(),
                                              static_cast<int>(b)};
            if (static_cast<int>(heap.size()) < k) {
                heap.push(cand);
            } else if (cand < heap.top()) {
                heap.pop();
                heap.push(cand);
            }
        }
        while (!heap.empty()) {
            const int b = heap.top().second;
            heap.pop();
            edges.emplace_back(std::min(static_cast<int>(a), b),
                               std::max(static_cast<int>(a), b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

LatentGraph build_graph(const VaeModel& model, const Dataset& ds, int k, int n_synthetic,
                        std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("build_graph: k must be >= 1");
    if (n_synthetic < 0) throw std::invalid_argument("build_graph: n_synthetic must be >= 0");

    LatentGraph graph;
    graph.nodes.reserve(ds.samples.size() + static_cast<std::size_t>(n_synthetic));

    Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (const Sample& s : ds.samples) {
        GraphNode node;
        node.z = encode(model, pose_vector(s)).mu;
        node.label = s.flag == 1 ? SafetyLabel::Safe : SafetyLabel::Colliding;
        node.theta_b = decoded_theta_b(model, decode(model, node.z));
        node.source = NodeSource::Dataset;
        lo = lo.cwiseMin(node.z);
        hi = hi.cwiseMax(node.z);
        graph.nodes.push_back(std::move(node));
    }

    Rng rng(seed);
    for (int i = 0; i < n_synthetic; ++i) {
        GraphNode node;
        node.z = {rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y())};
        node.label = classify_latent(model, node.z);
        node.theta_b = decoded_theta_b(model, decode(model, node.z));
        node.source = NodeSource::Synthetic;
        graph.nodes.push_back(std::move(node));
    }

    graph.adjacency.assign(graph.nodes.size(), {});

    std::vector<int> dataset_safe, all_safe;
    for (int id = 0; id < graph.size(); ++id) {
        if (!graph.is_safe(id)) continue;
        all_safe.push_back(id);
        if (graph.nodes[static_cast<std::size_t>(id)].source == NodeSource::Dataset)
            dataset_safe.push_back(id);
    }
    if (all_safe.empty()) throw std::runtime_error("build_graph: no safe nodes");

    // Dataset-layer edges first, then the densified layer on top. The union
    // keeps every pre-densification edge, so adding synthetic nodes never
    // disconnects or lengthens existing routes.
    add_edges(graph, knn_edges(graph, dataset_safe, k));
    if (n_synthetic > 0) add_edges(graph, knn_edges(graph, all_safe, k));
    return graph;
}

PathResult shortest_path(const LatentGraph& graph, const PathQuery& query) {
    const auto check_endpoint = [&](int id, const char* what) {
        if (id < 0 || id >= graph.size())
            throw std::invalid_argument(std::string(what) + " node id out of range");
        if (!graph.is_safe(id))
            throw std::invalid_argument(std::string(what) + " node is not safe");
        if (query.blacklist.contains(id))
            throw std::invalid_argument(std::string(what) + " node is blacklisted");
    };
    check_endpoint(query.start, "start");
    check_endpoint(query.goal, "goal");

    const auto n = static_cast<std::size_t>(graph.size());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> pred(n, -1);
    std::vector<char> done(n, 0);

    // (distance, id) min-heap; the id component makes equal-distance pops
    // deterministic in favor of the smaller node id.
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist[static_cast<std::size_t>(query.start)] = 0.0;
    heap.emplace(0.0, query.start);

    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = 1;
        if (u == query.goal) break;
        for (const auto& [v, w] : graph.adjacency[static_cast<std::size_t>(u)]) {
            if (done[static_cast<std::size_t>(v)] || !usable(graph, v, query.blacklist))
                continue;
            const double nd = d + w;
            if (nd < dist[static_cast<std::size_t>(v)]) {
                dist[static_cast<std::size_t>(v)] = nd;
                pred[static_cast<std::size_t>(v)] = u;
                heap.emplace(nd, v);
            }
        }
    }

    if (!done[static_cast<std::size_t>(query.goal)])
        throw NoPathError(component_size(graph, query.start, query.blacklist),
                          component_size(graph, query.goal, query.blacklist));

    PathResult result;
    result.weight = dist[static_cast<std::size_t>(query.goal)];
    for (int u = query.goal; u != -1; u = pred[static_cast<std::size_t>(u)])
        result.nodes.push_back(u);
    std::reverse(result.nodes.begin(), result.nodes.end());
    return result;
}

PathResult replan(const LatentGraph& graph, int current, int goal,
                  const std::unordered_set<int>& blacklist,
                  const std::unordered_set<int>& additions) {
    PathQuery query;
    query.start = current;
    query.goal = goal;
    query.blacklist = blacklist;
    query.blacklist.insert(additions.begin(), additions.end());
    return shortest_path(graph, query);
}

int nearest_safe_node(const LatentGraph& graph, const Eigen::Vector2d& z) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int id = 0; id < graph.size(); ++id) {
        if (!graph.is_safe(id)) continue;
        const double d2 = (graph.nodes[static_cast<std::size_t>(id)].z - z).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = id;
        }
    }
    if (best < 0) throw std::runtime_error("nearest_safe_node: graph has no safe nodes");
    return best;
}

int nearest_safe_node_by_config(const LatentGraph& graph, const JointConfig& config,
                                const std::vector<int>* restrict_to) {
    const auto config_d2 = [&](int id) {
        const JointConfig& t = graph.nodes[static_cast<std::size_t>(id)].theta_b;
        double d2 = 0;
        for (int i = 0; i < kNumLinks; ++i) {
            const double d = t[i] - config[i];
            d2 += d * d;
        }
        return d2;
    };
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    const auto consider = [&](int id) {
        if (!graph.is_safe(id)) return;
        const double d2 = config_d2(id);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = id;
        }
    };
    if (restrict_to) {
        for (const int id : *restrict_to) consider(id);
    } else {
        for (int id = 0; id < graph.size(); ++id) consider(id);
    }
    if (best < 0) throw std::runtime_error("nearest_safe_node_by_config: no candidate nodes");
    return best;
}

std::vector<int> largest_component(const LatentGraph& graph) {
    const std::unordered_set<int> empty;
    std::vector<char> seen(static_cast<std::size_t>(graph.size()), 0);
    std::vector<int> best;
    for (int root = 0; root < graph.size(); ++root) {
        if (seen[static_cast<std::size_t>(root)] || !graph.is_safe(root)) continue;
        std::vector<int> component;
        std::vector<int> stack{root};
        seen[static_cast<std::size_t>(root)] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            component.push_back(u);
            for (const auto& [v, w] : graph.adjacency[static_cast<std::size_t>(u)]) {
                (void)w;
                if (!seen[static_cast<std::size_t>(v)] && graph.is_safe(v)) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
        if (component.size() > best.size()) best = std::move(component);
    }
    std::sort(best.begin(), best.end());
    return best;
}

void validate_graph(const LatentGraph& graph) {
    if (graph.adjacency.size() != graph.nodes.size())
        throw std::runtime_error("graph: adjacency/node count mismatch");
    for (int i = 0; i < graph.size(); ++i) {
        const auto& nbrs = graph.adjacency[static_cast<std::size_t>(i)];
        if (!nbrs.empty() && !graph.is_safe(i))
            throw std::runtime_error("graph: colliding node " + std::to_string(i) + " has edges");
        for (const auto& [j, w] : nbrs) {
            if (j == i) throw std::runtime_error("graph: self-loop at " + std::to_string(i));
            if (j < 0 || j >= graph.size())
                throw std::runtime_error("graph: edge to out-of-range node");
            if (!graph.is_safe(j))
                throw std::runtime_error("graph: edge touches colliding node " +
                                         std::to_string(j));
            const auto& back = graph.adjacency[static_cast<std::size_t>(j)];
            const auto it = back.find(i);
            if (it == back.end() || it->second != w)
                throw std::runtime_error("graph: asymmetric edge " + std::to_string(i) + "-" +
                                         std::to_string(j));
            const double expect = (graph.nodes[static_cast<std::size_t>(i)].z -
                                   graph.nodes[static_cast<std::size_t>(j)].z)
                                      .norm();
            if (std::abs(w - expect) > 1e-9)
                throw std::runtime_error("graph: weight is not the latent distance on edge " +
                                         std::to_string(i) + "-" + std::to_string(j));
        }
    }
}

void save_graph(const LatentGraph& graph, const std::string& path) {
    json nodes = json::array();
    for (int id = 0; id < graph.size(); ++id) {
        const GraphNode& n = graph.nodes[static_cast<std::size_t>(id)];
        nodes.push_back(json{{"id", id},
                             {"z", vec2_to_json(n.z)},
                             {"label", label_name(n.label)},
                             {"theta_b", config_to_json(n.theta_b)},
                             {"source", source_name(n.source)}});
    }
    json edges = json::array();
    for (int i = 0; i < graph.size(); ++i)
        for (const auto& [j, w] : graph.adjacency[static_cast<std::size_t>(i)])
            if (i < j) edges.push_back(json::array({i, j, w}));
    write_file_atomic(path, json{{"nodes", nodes}, {"edges", edges}}.dump() + "\n");
}

LatentGraph load_graph(const std::string& path) {
    const json doc = json::parse(read_file(path));
    LatentGraph graph;
    const json& nodes = doc.at("nodes");
    graph.nodes.resize(nodes.size());
    for (const json& jn : nodes) {
        const int id = jn.at("id").get<int>();
        if (id < 0 || id >= static_cast<int>(nodes.size()))
            throw std::runtime_error("graph.json: node id out of range");
        GraphNode& n = graph.nodes[static_cast<std::size_t>(id)];
        n.z = vec2_from_json(jn.at("z"));
        n.label = jn.at("label").get<std::string>() == "safe" ? SafetyLabel::Safe
                                                              : SafetyLabel::Colliding;
        n.theta_b = config_from_json(jn.at("theta_b"));
        n.source = jn.at("source").get<std::string>() == "dataset" ? NodeSource::Dataset
                                                                   : NodeSource::Synthetic;
    }
    graph.adjacency.assign(graph.nodes.size(), {});
    for (const json& je : doc.at("edges")) {
        const int i = je.at(0).get<int>();
        const int j = je.at(1).get<int>();
        const double w = je.at(2).get<double>();
        graph.adjacency.at(static_cast<std::size_t>(i))[j] = w;
        graph.adjacency.at(static_cast<std::size_t>(j))[i] = w;
    }
    validate_graph(graph);
    return graph;
}

void write_latent_scatter_csv(const LatentGraph& graph, const std::string& path) {
    std::ostringstream out;
    out << "id,u,v,label,source\n";
    for (int id = 0; id < graph.size(); ++id) {
        const GraphNode& n = graph.nodes[static_cast<std::size_t>(id)];
        out << id << "," << n.z.x() << "," << n.z.y() << "," << label_name(n.label) << ","
            << source_name(n.source) << "\n";
    }
    write_file_atomic(path, out.str());
}

}  // namespace dualarm
