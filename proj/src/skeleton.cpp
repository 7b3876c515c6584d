#include "bgsim/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace bgsim::skeleton {

using nlohmann::json;

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::vector<std::string> validate(const SkeletonModel& model) {
    std::vector<std::string> out;
    const int n = model.joint_count();
    if (n == 0) {
        out.push_back("model has no joints");
        return out;
    }
    for (int k = 0; k < n; ++k)
        if (model.joints[k].id != k)
            out.push_back("joints[" + std::to_string(k) + "]: ids must be contiguous from 0");
    if (model.unary_weights.size() != static_cast<size_t>(n))
        out.push_back("unary.weights: expected one entry per joint");
    if (model.unary_bias.size() != static_cast<size_t>(n))
        out.push_back("unary.bias: expected one 3-entry row per joint");
    if (model.oks_k.size() != static_cast<size_t>(n))
        out.push_back("oks_k: expected one entry per joint");
    for (size_t k = 0; k < model.oks_k.size(); ++k)
        if (!(model.oks_k[k] > 0.0))
            out.push_back("oks_k[" + std::to_string(k) + "]: must be positive");
    for (double w : model.unary_weights)
        if (!finite(w)) out.push_back("unary.weights: non-finite value");
    for (const auto& b : model.unary_bias)
        for (double v : b)
            if (!finite(v)) out.push_back("unary.bias: non-finite value");

    std::set<std::pair<int, int>> seen;
    int kinetic_count = 0;
    UnionFind uf(n);
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeSpec& edge = model.edges[e];
        const std::string tag = "edges[" + std::to_string(e) + "]";
        if (edge.i < 0 || edge.i >= n || edge.j < 0 || edge.j >= n) {
            out.push_back(tag + ": endpoint out of range");
            continue;
        }
        if (edge.i == edge.j) {
            out.push_back(tag + ": self-loop");
            continue;
        }
        auto key = std::minmax(edge.i, edge.j);
        if (!seen.insert(key).second)
            out.push_back(tag + ": duplicate pair (" + std::to_string(key.first) + "," +
                          std::to_string(key.second) + ")");
        if (edge.num_types < 1) out.push_back(tag + ": num_types must be >= 1");
        const size_t t = static_cast<size_t>(std::max(edge.num_types, 1));
        for (const EdgeDirection* dir : {&edge.fwd, &edge.bwd}) {
            if (dir->mean_offsets.size() != t) out.push_back(tag + ": mean_offsets size != T");
            if (dir->deform_weights.size() != t)
                out.push_back(tag + ": deform_weights size != T");
            if (dir->type_priors.size() != t) out.push_back(tag + ": type_priors size != T");
            if (!finite(dir->type_weight)) out.push_back(tag + ": non-finite type_weight");
            for (const auto& w : dir->deform_weights) {
                for (double v : w)
                    if (!finite(v)) out.push_back(tag + ": non-finite deform weight");
                // Quadratic coefficients must keep the pairwise score bounded
                // above in displacement.
                if (w[1] > 0.0 || w[3] > 0.0)
                    out.push_back(tag + ": quadratic deform coefficients must be <= 0");
            }
            for (const auto& o : dir->mean_offsets)
                if (!finite(o.x) || !finite(o.y)) out.push_back(tag + ": non-finite offset");
            for (double p : dir->type_priors)
                if (!finite(p)) out.push_back(tag + ": non-finite type prior");
        }
        if (edge.occlusion_bias.size() != t * t * 9)
            out.push_back(tag + ": occlusion_bias size != T*T*9");
        for (double v : edge.occlusion_bias)
            if (!finite(v)) out.push_back(tag + ": non-finite occlusion bias");
        if (edge.kind == EdgeKind::Kinetic) {
            ++kinetic_count;
            uf.unite(edge.i, edge.j);
        }
    }
    if (kinetic_count != n - 1) {
        out.push_back("kinetic edges do not form a spanning tree: expected " +
                      std::to_string(n - 1) + " edges, found " + std::to_string(kinetic_count));
    } else {
        int components = 0;
        for (int k = 0; k < n; ++k)
            if (uf.find(k) == k) ++components;
        if (components != 1)
            out.push_back("kinetic edges do not form a spanning tree: graph is disconnected");
    }

    std::vector<int> stage_seen(n, 0);
    for (const Joint& j : model.joints) {
        if (j.stage < 1 || j.stage > 3)
            out.push_back("joints[" + std::to_string(j.id) + "]: stage must be 1, 2 or 3");
        if (j.id >= 0 && j.id < n) stage_seen[j.id]++;
    }
    for (int k = 0; k < n; ++k)
        if (stage_seen[k] != 1)
            out.push_back("stages do not partition the joints at id " + std::to_string(k));
    return out;
}

std::vector<int> kinetic_depths(const SkeletonModel& model, int root) {
    const int n = model.joint_count();
    if (root < 0 || root >= n) throw std::invalid_argument("root joint out of range");
    std::vector<int> depth(n, -1);
    depth[root] = 0;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (const EdgeSpec& e : model.edges) {
            if (e.kind != EdgeKind::Kinetic) continue;
            int other = -1;
            if (e.i == u) other = e.j;
            else if (e.j == u) other = e.i;
            else continue;
            if (depth[other] < 0) {
                depth[other] = depth[u] + 1;
                q.push(other);
            }
        }
    }
    return depth;
}

bool oriented_i_to_j(const SkeletonModel& model, const EdgeSpec& edge,
                     const std::vector<int>& depths) {
    (void)model;
    const int di = depths[edge.i];
    const int dj = depths[edge.j];
    if (di != dj) return di < dj;
    return edge.i < edge.j;
}

int out_degree(const SkeletonModel& model, int joint, int root) {
    if (joint < 0 || joint >= model.joint_count())
        throw std::invalid_argument("joint out of range");
    const std::vector<int> depths = kinetic_depths(model, root);
    int count = 0;
    for (const EdgeSpec& e : model.edges) {
        if (e.i != joint && e.j != joint) continue;
        const bool i_to_j = oriented_i_to_j(model, e, depths);
        if ((i_to_j && e.i == joint) || (!i_to_j && e.j == joint)) ++count;
    }
    return count;
}

RestrictedModel restrict(const SkeletonModel& model, std::vector<int> joint_ids) {
    std::sort(joint_ids.begin(), joint_ids.end());
    joint_ids.erase(std::unique(joint_ids.begin(), joint_ids.end()), joint_ids.end());
    std::vector<int> remap(model.joint_count(), -1);
    RestrictedModel out;
    for (size_t k = 0; k < joint_ids.size(); ++k) {
        const int id = joint_ids[k];
        if (id < 0 || id >= model.joint_count())
            throw std::invalid_argument("restrict: joint id out of range");
        remap[id] = static_cast<int>(k);
        Joint j = model.joints[id];
        j.id = static_cast<int>(k);
        out.model.joints.push_back(j);
        out.model.unary_weights.push_back(model.unary_weights[id]);
        out.model.unary_bias.push_back(model.unary_bias[id]);
        out.model.oks_k.push_back(model.oks_k[id]);
        out.orig_ids.push_back(id);
    }
    for (const EdgeSpec& e : model.edges) {
        if (remap[e.i] < 0 || remap[e.j] < 0) continue;
        EdgeSpec copy = e;
        copy.i = remap[e.i];
        copy.j = remap[e.j];
        out.model.edges.push_back(std::move(copy));
    }
    return out;
}

namespace {

Vec2 quarter(Vec2 v) { return {std::round(v.x * 4.0) / 4.0, std::round(v.y * 4.0) / 4.0}; }

Vec2 rotate(Vec2 v, double degrees) {
    const double rad = degrees * M_PI / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    return {v.x * c - v.y * s, v.x * s + v.y * c};
}

EdgeDirection make_direction(Vec2 base, double quad_coeff) {
    EdgeDirection d;
    d.mean_offsets = {base, quarter(rotate(base, 30.0)), quarter(rotate(base, -30.0)),
                      quarter(0.75 * base)};
    d.deform_weights.assign(4, {0.0, quad_coeff, 0.0, quad_coeff});
    d.type_weight = 1.0;
    d.type_priors.assign(4, 0.25);
    return d;
}

EdgeSpec make_edge(int i, int j, EdgeKind kind, Vec2 offset) {
    EdgeSpec e;
    e.i = i;
    e.j = j;
    e.kind = kind;
    e.num_types = 4;
    // Kinetic springs are stiff (generator noise sigma 0.5 -> -1/(2*0.25));
    // contextual constraints stay soft.
    const double quad = kind == EdgeKind::Kinetic ? -2.0 : -0.25;
    e.fwd = make_direction(offset, quad);
    e.bwd = make_direction({-offset.x, -offset.y}, quad);
    e.occlusion_bias.assign(static_cast<size_t>(e.num_types) * e.num_types * 9, 0.0);
    for (int tf = 0; tf < e.num_types; ++tf) {
        for (int tb = 0; tb < e.num_types; ++tb) {
            if (kind == EdgeKind::Kinetic) {
                for (int o = 0; o < 3; ++o) e.bias(tf, tb, o, o) = 0.25;
            } else {
                e.bias(tf, tb, 0, 2) = -1.0;
                e.bias(tf, tb, 2, 0) = -1.0;
            }
        }
    }
    return e;
}

}  // namespace

SkeletonModel default_model() {
    SkeletonModel m;
    const std::vector<std::pair<std::string, int>> joints = {
        {"head", 1},       {"neck", 1},       {"l_shoulder", 1}, {"r_shoulder", 1},
        {"l_elbow", 2},    {"r_elbow", 2},    {"l_wrist", 3},    {"r_wrist", 3},
        {"torso", 1},      {"l_hip", 2},      {"r_hip", 2},      {"l_knee", 3},
        {"r_knee", 3},     {"l_ankle", 3},    {"r_ankle", 3},
    };
    for (size_t k = 0; k < joints.size(); ++k)
        m.joints.push_back({static_cast<int>(k), joints[k].first, joints[k].second});

    m.edges = {
        make_edge(0, 1, EdgeKind::Kinetic, {0.0, 2.0}),      // head - neck
        make_edge(1, 2, EdgeKind::Kinetic, {-2.0, 0.5}),     // neck - l_shoulder
        make_edge(2, 4, EdgeKind::Kinetic, {-0.5, 2.5}),     // l_shoulder - l_elbow
        make_edge(4, 6, EdgeKind::Kinetic, {-0.5, 2.5}),     // l_elbow - l_wrist
        make_edge(1, 3, EdgeKind::Kinetic, {2.0, 0.5}),      // neck - r_shoulder
        make_edge(3, 5, EdgeKind::Kinetic, {0.5, 2.5}),      // r_shoulder - r_elbow
        make_edge(5, 7, EdgeKind::Kinetic, {0.5, 2.5}),      // r_elbow - r_wrist
        make_edge(1, 8, EdgeKind::Kinetic, {0.0, 3.0}),      // neck - torso
        make_edge(8, 9, EdgeKind::Kinetic, {-1.5, 1.0}),     // torso - l_hip
        make_edge(9, 11, EdgeKind::Kinetic, {0.0, 3.0}),     // l_hip - l_knee
        make_edge(11, 13, EdgeKind::Kinetic, {0.0, 3.0}),    // l_knee - l_ankle
        make_edge(8, 10, EdgeKind::Kinetic, {1.5, 1.0}),     // torso - r_hip
        make_edge(10, 12, EdgeKind::Kinetic, {0.0, 3.0}),    // r_hip - r_knee
        make_edge(12, 14, EdgeKind::Kinetic, {0.0, 3.0}),    // r_knee - r_ankle
        make_edge(2, 3, EdgeKind::Contextual, {4.0, 0.0}),   // shoulders
        make_edge(4, 5, EdgeKind::Contextual, {5.0, 0.0}),   // elbows
        make_edge(6, 7, EdgeKind::Contextual, {6.0, 0.0}),   // wrists
        make_edge(9, 10, EdgeKind::Contextual, {3.0, 0.0}),  // hips
        make_edge(11, 12, EdgeKind::Contextual, {3.0, 0.0}), // knees
        make_edge(13, 14, EdgeKind::Contextual, {3.0, 0.0}), // ankles
    };

    m.unary_weights.assign(15, 1.0);
    m.unary_bias.assign(15, {0.0, 0.0, -0.5});
    m.oks_k = {0.026, 0.079, 0.079, 0.079, 0.072, 0.072, 0.062, 0.062,
               0.107, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
    return m;
}

namespace {

json direction_to_json(const EdgeDirection& d) {
    json offsets = json::array();
    for (const Vec2& o : d.mean_offsets) offsets.push_back({o.x, o.y});
    json weights = json::array();
    for (const auto& w : d.deform_weights) weights.push_back({w[0], w[1], w[2], w[3]});
    return {{"mean_offsets", offsets},
            {"deform_weights", weights},
            {"type_weight", d.type_weight},
            {"type_priors", d.type_priors}};
}

EdgeDirection direction_from_json(const json& j, const std::string& where) {
    EdgeDirection d;
    if (!j.contains("mean_offsets")) throw std::runtime_error(where + ".mean_offsets missing");
    for (const auto& o : j.at("mean_offsets"))
        d.mean_offsets.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
    if (!j.contains("deform_weights"))
        throw std::runtime_error(where + ".deform_weights missing");
    for (const auto& w : j.at("deform_weights")) {
        if (w.size() != 4) throw std::runtime_error(where + ".deform_weights: need 4 entries");
        d.deform_weights.push_back(
            {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>(),
             w.at(3).get<double>()});
    }
    d.type_weight = j.value("type_weight", 1.0);
    if (!j.contains("type_priors")) throw std::runtime_error(where + ".type_priors missing");
    d.type_priors = j.at("type_priors").get<std::vector<double>>();
    return d;
}

}  // namespace

std::string to_json(const SkeletonModel& model) {
    json root;
    json joints = json::array();
    for (const Joint& j : model.joints) joints.push_back({{"id", j.id}, {"name", j.name}});
    root["joints"] = joints;

    json stages = json::array({json::array(), json::array(), json::array()});
    for (const Joint& j : model.joints)
        if (j.stage >= 1 && j.stage <= 3) stages[j.stage - 1].push_back(j.id);
    root["stages"] = stages;

    json edges = json::array();
    for (const EdgeSpec& e : model.edges) {
        edges.push_back({{"i", e.i},
                         {"j", e.j},
                         {"kind", e.kind == EdgeKind::Kinetic ? "kinetic" : "contextual"},
                         {"num_types", e.num_types},
                         {"forward", direction_to_json(e.fwd)},
                         {"backward", direction_to_json(e.bwd)},
                         {"occlusion_bias", e.occlusion_bias}});
    }
    root["edges"] = edges;

    json bias = json::array();
    for (const auto& b : model.unary_bias) bias.push_back({b[0], b[1], b[2]});
    root["unary"] = {{"weights", model.unary_weights}, {"bias", bias}};
    root["oks_k"] = model.oks_k;
    return root.dump(2) + "\n";
}

SkeletonModel from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model file is not valid JSON: ") + e.what());
    }
    for (const char* key : {"joints", "edges", "unary", "oks_k", "stages"})
        if (!root.contains(key))
            throw std::runtime_error(std::string("model file: missing key \"") + key + "\"");

    SkeletonModel m;
    for (const auto& j : root.at("joints")) {
        Joint joint;
        if (!j.contains("id")) throw std::runtime_error("model file: joints[].id missing");
        joint.id = j.at("id").get<int>();
        joint.name = j.value("name", std::string());
        m.joints.push_back(joint);
    }
    const auto& stages = root.at("stages");
    if (!stages.is_array() || stages.size() != 3)
        throw std::runtime_error("model file: \"stages\" must be three id arrays");
    for (size_t s = 0; s < 3; ++s) {
        for (const auto& idj : stages[s]) {
            const int id = idj.get<int>();
            if (id < 0 || id >= m.joint_count())
                throw std::runtime_error("model file: stages refers to unknown joint id " +
                                         std::to_string(id));
            m.joints[id].stage = static_cast<int>(s) + 1;
        }
    }
    size_t eidx = 0;
    for (const auto& ej : root.at("edges")) {
        const std::string where = "edges[" + std::to_string(eidx++) + "]";
        EdgeSpec e;
        if (!ej.contains("i") || !ej.contains("j"))
            throw std::runtime_error("model file: " + where + " missing endpoint");
        e.i = ej.at("i").get<int>();
        e.j = ej.at("j").get<int>();
        const std::string kind = ej.value("kind", std::string("kinetic"));
        if (kind == "kinetic") e.kind = EdgeKind::Kinetic;
        else if (kind == "contextual") e.kind = EdgeKind::Contextual;
        else throw std::runtime_error("model file: " + where + " unknown kind \"" + kind + "\"");
        e.num_types = ej.value("num_types", 1);
        if (!ej.contains("forward") || !ej.contains("backward"))
            throw std::runtime_error("model file: " + where + " missing direction tables");
        e.fwd = direction_from_json(ej.at("forward"), where + ".forward");
        e.bwd = direction_from_json(ej.at("backward"), where + ".backward");
        if (!ej.contains("occlusion_bias"))
            throw std::runtime_error("model file: " + where + ".occlusion_bias missing");
        e.occlusion_bias = ej.at("occlusion_bias").get<std::vector<double>>();
        m.edges.push_back(std::move(e));
    }
    const auto& unary = root.at("unary");
    if (!unary.contains("weights") || !unary.contains("bias"))
        throw std::runtime_error("model file: unary.weights/unary.bias missing");
    m.unary_weights = unary.at("weights").get<std::vector<double>>();
    for (const auto& b : unary.at("bias")) {
        if (b.size() != 3)
            throw std::runtime_error("model file: unary.bias rows need 3 entries");
        m.unary_bias.push_back(
            {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()});
    }
    m.oks_k = root.at("oks_k").get<std::vector<double>>();
    return m;
}

void save_model(const std::string& path, const SkeletonModel& model) {
    const std::string text = to_json(model);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f << text;
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

SkeletonModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace bgsim::skeleton
