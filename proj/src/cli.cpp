#include "bgsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "bgsim/cascade.hpp"
#include "bgsim/cmf.hpp"
#include "bgsim/metrics.hpp"
#include "bgsim/oracle.hpp"
#include "bgsim/posefile.hpp"
#include "bgsim/skeleton.hpp"
#include "bgsim/synth.hpp"

namespace bgsim::cli {

using nlohmann::json;

namespace {

skeleton::SkeletonModel load_model_or_default(const std::string& path) {
    if (path.empty()) return skeleton::default_model();
    return skeleton::load_model(path);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

void check_common(const RunConfig& config) {
    if (!(config.sigma > 0.0) || config.sigma > 1.0)
        throw std::invalid_argument("--sigma must be in (0, 1]");
    if (config.nms_radius < 1) throw std::invalid_argument("--nms-radius must be >= 1");
    if (config.max_persons < 1) throw std::invalid_argument("--max-persons must be >= 1");
    if (config.instances < 1 || config.instances > 100000)
        throw std::invalid_argument("--instances must be in [1, 100000]");
}

// ---- overlay ----------------------------------------------------------

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

constexpr Rgb kPalette[] = {{255, 80, 80},  {80, 200, 255}, {120, 255, 120},
                            {255, 200, 60}, {220, 120, 255}, {255, 140, 40}};

void write_overlay(const std::string& path, const skeleton::SkeletonModel& model,
                   const std::vector<heatmap::ConfidenceMap>& maps,
                   const std::vector<cascade::PersonResult>& persons) {
    const int w = maps[0].width;
    const int h = maps[0].height;
    std::vector<Rgb> pixels(static_cast<size_t>(w) * h);
    double peak = 1e-12;
    for (const auto& m : maps)
        for (double v : m.values) peak = std::max(peak, v);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            for (const auto& m : maps) v = std::max(v, m.at(x, y));
            const uint8_t g = static_cast<uint8_t>(std::lround(200.0 * v / peak));
            pixels[static_cast<size_t>(y) * w + x] = {g, g, g};
        }
    auto put = [&](int x, int y, Rgb c) {
        if (x >= 0 && x < w && y >= 0 && y < h) pixels[static_cast<size_t>(y) * w + x] = c;
    };
    auto line = [&](Cell a, Cell b, Rgb c) {
        const int steps = std::max(1, chebyshev(a, b));
        for (int s = 0; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            put(static_cast<int>(std::lround(a.x + t * (b.x - a.x))),
                static_cast<int>(std::lround(a.y + t * (b.y - a.y))), c);
        }
    };
    for (size_t p = 0; p < persons.size(); ++p) {
        const Rgb color = kPalette[p % (sizeof(kPalette) / sizeof(kPalette[0]))];
        for (const skeleton::EdgeSpec& edge : model.edges) {
            if (edge.kind != skeleton::EdgeKind::Kinetic) continue;
            line(persons[p].pose.positions[edge.i], persons[p].pose.positions[edge.j], color);
        }
        for (const Cell& c : persons[p].pose.positions) {
            put(c.x, c.y, color);
            put(c.x + 1, c.y, color);
            put(c.x, c.y + 1, color);
        }
    }
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + pixels.size() * 3);
    for (const Rgb& px : pixels) {
        out.push_back(static_cast<char>(px.r));
        out.push_back(static_cast<char>(px.g));
        out.push_back(static_cast<char>(px.b));
    }
    write_text_atomic(path, out);
}

// ---- scene spec JSON ---------------------------------------------------

synth::SceneSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("scene spec: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("scene spec: must be a JSON object");
    synth::SceneSpec spec;
    auto num = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number())
            throw std::runtime_error(std::string("scene spec: ") + key + " must be a number");
        out = j.at(key).get<double>();
    };
    auto integer = [&](const char* key, int& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer())
            throw std::runtime_error(std::string("scene spec: ") + key +
                                     " must be an integer");
        out = j.at(key).get<int>();
    };
    integer("width", spec.width);
    integer("height", spec.height);
    integer("n_persons", spec.n_persons);
    num("occlusion_rate", spec.occlusion_rate);
    num("offset_noise_sigma", spec.offset_noise_sigma);
    num("peak_sigma", spec.peak_sigma);
    num("min_separation", spec.min_separation);
    num("amplitude", spec.amplitude);
    num("suppressed_amplitude", spec.suppressed_amplitude);
    num("self_occlusion_rate", spec.self_occlusion_rate);
    num("displacement_fraction", spec.displacement_fraction);
    num("background_noise", spec.background_noise);
    num("margin", spec.margin);
    return spec;
}

json spec_to_json(const synth::SceneSpec& spec) {
    return json{{"width", spec.width},
                {"height", spec.height},
                {"n_persons", spec.n_persons},
                {"occlusion_rate", spec.occlusion_rate},
                {"offset_noise_sigma", spec.offset_noise_sigma},
                {"peak_sigma", spec.peak_sigma},
                {"min_separation", spec.min_separation},
                {"amplitude", spec.amplitude},
                {"suppressed_amplitude", spec.suppressed_amplitude},
                {"self_occlusion_rate", spec.self_occlusion_rate},
                {"displacement_fraction", spec.displacement_fraction},
                {"background_noise", spec.background_noise},
                {"margin", spec.margin}};
}

double person_scale(const std::vector<Vec2>& positions) {
    double min_x = positions[0].x, max_x = positions[0].x;
    double min_y = positions[0].y, max_y = positions[0].y;
    for (const Vec2& p : positions) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return std::sqrt(std::max(1.0, (max_x - min_x) * (max_y - min_y)));
}

}  // namespace

int cmd_infer(const RunConfig& config) {
    check_common(config);
    skeleton::SkeletonModel model;
    std::vector<heatmap::ConfidenceMap> maps;
    try {
        model = load_model_or_default(config.model_path);
        if (config.input_path.empty())
            throw std::invalid_argument("--input CMF file is required");
        maps = cmf::read_file(config.input_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (maps.size() != static_cast<size_t>(model.joint_count())) {
        std::cerr << "error: CMF has " << maps.size() << " maps but the model has "
                  << model.joint_count() << " joints\n";
        return kExitUsage;
    }

    cascade::CascadeOptions options;
    options.sigma = config.sigma;
    options.nms_radius = config.nms_radius;
    options.max_persons = config.max_persons;
    const std::vector<cascade::PersonResult> persons =
        cascade::assemble_persons(model, maps, options);

    // Pose-file schema (loadable by `eval` as predictions), with per-person
    // extras: directional agreement and the per-stage base points.
    json jpersons = json::array();
    for (const cascade::PersonResult& person : persons) {
        json kps = json::array();
        json occ = json::array();
        for (int j = 0; j < model.joint_count(); ++j) {
            const Cell c = person.pose.positions[j];
            const int code = static_cast<int>(person.pose.occlusions[j]);
            // v follows the pose-file convention: 2 visible, 1 occluded. The
            // exact state is in the parallel occlusions array.
            kps.push_back(json::array({c.x, c.y, code == 0 ? 2 : 1, maps[j].at(c.x, c.y)}));
            occ.push_back(code);
        }
        json bases = json::array();
        for (const cascade::StageBase& base : person.per_stage_base)
            bases.push_back({{"stage", base.stage},
                             {"joint", base.joint},
                             {"x", base.position.x},
                             {"y", base.position.y},
                             {"response", base.response}});
        jpersons.push_back({{"score", person.pose.score},
                            {"agreement", person.agreement},
                            {"keypoints", std::move(kps)},
                            {"occlusions", std::move(occ)},
                            {"bases", std::move(bases)}});
    }
    const std::string text =
        json{{"images", json::array({json{{"id", 0}, {"persons", std::move(jpersons)}}})}}
            .dump(2) +
        "\n";
    if (config.output_path.empty()) std::cout << text;
    else write_text_atomic(config.output_path, text);
    if (!config.overlay_path.empty()) write_overlay(config.overlay_path, model, maps, persons);
    return kExitOk;
}

int cmd_eval(const RunConfig& config) {
    check_common(config);
    skeleton::SkeletonModel model;
    posefile::Document gt_doc, pred_doc;
    try {
        model = load_model_or_default(config.model_path);
        if (config.gt_path.empty()) throw std::invalid_argument("--gt file is required");
        if (config.input_path.empty())
            throw std::invalid_argument("--input predictions file is required");
        gt_doc = posefile::load(config.gt_path);
        pred_doc = posefile::load(config.input_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::map<int, const posefile::Image*> preds_by_id;
    for (const posefile::Image& image : pred_doc.images) preds_by_id[image.id] = &image;

    auto to_pose = [](const posefile::Person& person) {
        skeleton::PoseConfiguration pose;
        for (size_t j = 0; j < person.keypoints.size(); ++j) {
            pose.positions.push_back({static_cast<int>(std::lround(person.keypoints[j].x)),
                                      static_cast<int>(std::lround(person.keypoints[j].y))});
            pose.occlusions.push_back(
                j < person.occlusions.size()
                    ? static_cast<skeleton::OcclusionState>(person.occlusions[j])
                    : skeleton::OcclusionState::Visible);
        }
        pose.score = person.score;
        return pose;
    };

    std::vector<metrics::ImageSample> samples;
    // PCKh accumulators: predictions aligned to ground truth by greedy OKS.
    std::vector<metrics::GroundTruthPerson> pckh_gts;
    std::vector<skeleton::PoseConfiguration> pckh_preds;
    std::vector<double> head_sizes;
    int head_joint = -1, neck_joint = -1;
    for (const skeleton::Joint& j : model.joints) {
        if (j.name == "head") head_joint = j.id;
        if (j.name == "neck") neck_joint = j.id;
    }

    for (const posefile::Image& gt_image : gt_doc.images) {
        metrics::ImageSample sample;
        for (const posefile::Person& person : gt_image.persons)
            sample.gts.push_back(posefile::to_ground_truth(person));
        const auto found = preds_by_id.find(gt_image.id);
        if (found != preds_by_id.end())
            for (const posefile::Person& person : found->second->persons)
                sample.preds.push_back(to_pose(person));
        if (!sample.gts.empty() && !sample.preds.empty()) {
            const metrics::MatchResult match =
                metrics::greedy_match(sample.gts, sample.preds, model.oks_k, 0.0);
            for (const metrics::MatchPair& pair : match.pairs) {
                const metrics::GroundTruthPerson& gt = sample.gts[pair.gt];
                pckh_gts.push_back(gt);
                pckh_preds.push_back(sample.preds[pair.pred]);
                double size = 0.0;
                if (head_joint >= 0 && neck_joint >= 0 &&
                    gt.keypoints[head_joint].v > 0 && gt.keypoints[neck_joint].v > 0) {
                    const double dx = gt.keypoints[head_joint].x - gt.keypoints[neck_joint].x;
                    const double dy = gt.keypoints[head_joint].y - gt.keypoints[neck_joint].y;
                    size = 2.0 * std::sqrt(dx * dx + dy * dy);
                }
                head_sizes.push_back(size);
            }
        }
        samples.push_back(std::move(sample));
    }

    const std::vector<double> thresholds = metrics::default_oks_thresholds();
    const metrics::ApResult ap = metrics::match_and_ap(samples, model.oks_k, thresholds);
    const metrics::PckhResult pckh = metrics::pckh_match(pckh_gts, pckh_preds, 0.5, head_sizes);

    json out;
    out["ap"] = json::object();
    for (size_t t = 0; t < thresholds.size(); ++t) {
        char key[16];
        std::snprintf(key, sizeof(key), "%.2f", thresholds[t]);
        out["ap"][key] = ap.ap[t];
    }
    out["mean_ap"] = ap.mean_ap;
    out["ar"] = ap.ar;
    out["excluded_images"] = ap.excluded_images;

    // Table columns: left/right joints pooled by their base name.
    std::map<std::string, std::pair<long long, long long>> columns;
    for (size_t j = 0; j < pckh.correct.size(); ++j) {
        std::string name = j < model.joints.size() ? model.joints[j].name : std::to_string(j);
        if (name.rfind("l_", 0) == 0 || name.rfind("r_", 0) == 0) name = name.substr(2);
        if (name == "neck" || name == "torso") continue;
        columns[name].first += pckh.correct[j];
        columns[name].second += pckh.scored[j];
    }
    json jcols = json::object();
    for (const auto& [name, counts] : columns)
        jcols[name] = counts.second > 0
                          ? static_cast<double>(counts.first) / counts.second
                          : 0.0;
    out["pckh"] = {{"alpha", 0.5},
                   {"columns", std::move(jcols)},
                   {"total", pckh.total},
                   {"skipped", pckh.skipped}};

    if (config.json_output) {
        const std::string text = out.dump(2) + "\n";
        std::cout << text;
        if (!config.output_path.empty()) write_text_atomic(config.output_path, text);
        return kExitOk;
    }
    for (size_t t = 0; t < thresholds.size(); ++t)
        std::printf("AP@%.2f: %.4f\n", thresholds[t], ap.ap[t]);
    std::printf("mean AP: %.4f\nAR: %.4f\nexcluded images: %d\n", ap.mean_ap, ap.ar,
                ap.excluded_images);
    std::printf("PCKh@0.5 total: %.4f (skipped %d)\n", pckh.total, pckh.skipped);
    for (const auto& [name, counts] : columns)
        std::printf("  %-10s %.4f\n", name.c_str(),
                    counts.second > 0 ? static_cast<double>(counts.first) / counts.second
                                      : 0.0);
    if (!config.output_path.empty()) write_text_atomic(config.output_path, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_synth(const RunConfig& config) {
    check_common(config);
    skeleton::SkeletonModel model;
    synth::SceneSpec spec;
    try {
        model = load_model_or_default(config.model_path);
        if (!config.input_path.empty()) {
            std::ifstream in(config.input_path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot open " + config.input_path);
            spec = spec_from_json(std::string((std::istreambuf_iterator<char>(in)),
                                              std::istreambuf_iterator<char>()));
        }
        if (config.output_path.empty())
            throw std::invalid_argument("--output directory is required");
        std::filesystem::create_directories(config.output_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    json manifest;
    manifest["seed"] = config.seed;
    manifest["scenes"] = config.instances;
    manifest["spec"] = spec_to_json(spec);
    json files = json::array();
    try {
        for (int s = 0; s < config.instances; ++s) {
            synth::SceneSpec scene_spec = spec;
            scene_spec.seed = config.seed + static_cast<uint64_t>(s);
            const synth::Scene scene = synth::generate_scene(model, scene_spec);

            char stem[32];
            std::snprintf(stem, sizeof(stem), "scene_%04d", s);
            const std::string base = config.output_path + "/" + stem;
            cmf::write_file(base + ".cmf", scene.maps);

            posefile::Document doc;
            posefile::Image image;
            image.id = s;
            for (const synth::GroundTruthPerson& gt : scene.gts) {
                posefile::Person person;
                for (size_t j = 0; j < gt.positions.size(); ++j) {
                    metrics::Keypoint kp;
                    kp.x = gt.positions[j].x;
                    kp.y = gt.positions[j].y;
                    kp.v = gt.occlusions[j] == skeleton::OcclusionState::Visible ? 2 : 1;
                    person.keypoints.push_back(kp);
                    person.occlusions.push_back(static_cast<int>(gt.occlusions[j]));
                }
                person.scale = person_scale(gt.positions);
                image.persons.push_back(std::move(person));
            }
            doc.images.push_back(std::move(image));
            posefile::save(base + ".json", doc);
            files.push_back({{"cmf", std::string(stem) + ".cmf"},
                             {"gt", std::string(stem) + ".json"},
                             {"seed", scene_spec.seed}});
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    manifest["files"] = std::move(files);
    write_text_atomic(config.output_path + "/manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
}

int cmd_oracle(const RunConfig& config) {
    check_common(config);
    const oracle::SuiteReport tree = oracle::run_tree_suite(config.seed, config.instances);
    std::printf("tree suite: %d instances, %d score mismatches, %d config mismatches "
                "(%d unique maxima)\n",
                tree.instances, tree.score_mismatches, tree.config_mismatches,
                tree.unique_maxima);
    if (!tree.first_failure.empty()) std::printf("  first failure: %s\n", tree.first_failure.c_str());
    const int loopy_count = std::max(1, config.instances / 5);
    const oracle::SuiteReport loopy = oracle::run_loopy_suite(config.seed + 1, loopy_count);
    std::printf("loopy suite: %d instances, %d mismatches\n", loopy.instances,
                loopy.score_mismatches);
    if (!loopy.first_failure.empty())
        std::printf("  first failure: %s\n", loopy.first_failure.c_str());
    return tree.ok() && loopy.ok() ? kExitOk : kExitFailure;
}

int run(const RunConfig& config) {
    try {
        if (config.command == "infer") return cmd_infer(config);
        if (config.command == "eval") return cmd_eval(config);
        if (config.command == "synth") return cmd_synth(config);
        if (config.command == "oracle") return cmd_oracle(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::cerr << "error: unknown command '" << config.command << "'\n";
    return kExitUsage;
}

}  // namespace bgsim::cli
