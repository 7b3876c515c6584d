#include "bgsim/posefile.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace bgsim::posefile {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw std::runtime_error("pose JSON: " + key + " " + what);
}

double number_at(const json& j, const std::string& key) {
    if (!j.is_number()) fail(key, "must be a number");
    return j.get<double>();
}

Person parse_person(const json& j, const std::string& key) {
    if (!j.is_object()) fail(key, "must be an object");
    if (!j.contains("keypoints")) fail(key + ".keypoints", "is missing");
    const json& kps = j.at("keypoints");
    if (!kps.is_array()) fail(key + ".keypoints", "must be an array");
    Person person;
    for (size_t i = 0; i < kps.size(); ++i) {
        const json& kp = kps[i];
        const std::string kkey = key + ".keypoints[" + std::to_string(i) + "]";
        // Predictions may carry a per-keypoint response as a fourth entry.
        if (!kp.is_array() || kp.size() < 3 || kp.size() > 4)
            fail(kkey, "must be [x, y, v] or [x, y, v, response]");
        metrics::Keypoint point;
        point.x = number_at(kp[0], kkey + "[0]");
        point.y = number_at(kp[1], kkey + "[1]");
        if (!kp[2].is_number_integer()) fail(kkey + "[2]", "must be an integer");
        point.v = kp[2].get<int>();
        if (kp.size() == 4 && !kp[3].is_number()) fail(kkey + "[3]", "must be a number");
        person.keypoints.push_back(point);
    }
    if (j.contains("scale")) person.scale = number_at(j.at("scale"), key + ".scale");
    if (j.contains("score")) person.score = number_at(j.at("score"), key + ".score");
    if (j.contains("occlusions")) {
        const json& occ = j.at("occlusions");
        if (!occ.is_array() || occ.size() != person.keypoints.size())
            fail(key + ".occlusions", "must be an array matching keypoints");
        for (size_t i = 0; i < occ.size(); ++i) {
            if (!occ[i].is_number_integer() || occ[i].get<int>() < 0 || occ[i].get<int>() > 2)
                fail(key + ".occlusions[" + std::to_string(i) + "]", "must be 0, 1, or 2");
            person.occlusions.push_back(occ[i].get<int>());
        }
    }
    return person;
}

}  // namespace

Document from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("pose JSON: not valid JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("images")) fail("images", "is missing");
    if (!root.at("images").is_array()) fail("images", "must be an array");
    Document doc;
    const json& images = root.at("images");
    for (size_t i = 0; i < images.size(); ++i) {
        const std::string ikey = "images[" + std::to_string(i) + "]";
        const json& jimg = images[i];
        if (!jimg.is_object()) fail(ikey, "must be an object");
        Image image;
        image.id = jimg.contains("id") && jimg.at("id").is_number_integer()
                       ? jimg.at("id").get<int>()
                       : static_cast<int>(i);
        if (!jimg.contains("persons")) fail(ikey + ".persons", "is missing");
        if (!jimg.at("persons").is_array()) fail(ikey + ".persons", "must be an array");
        const json& persons = jimg.at("persons");
        for (size_t p = 0; p < persons.size(); ++p)
            image.persons.push_back(
                parse_person(persons[p], ikey + ".persons[" + std::to_string(p) + "]"));
        doc.images.push_back(std::move(image));
    }
    return doc;
}

std::string to_json(const Document& doc) {
    json images = json::array();
    for (const Image& image : doc.images) {
        json persons = json::array();
        for (const Person& person : image.persons) {
            json kps = json::array();
            for (const metrics::Keypoint& kp : person.keypoints)
                kps.push_back(json::array({kp.x, kp.y, kp.v}));
            json jp = {{"keypoints", std::move(kps)},
                       {"scale", person.scale},
                       {"score", person.score}};
            if (!person.occlusions.empty()) jp["occlusions"] = person.occlusions;
            persons.push_back(std::move(jp));
        }
        images.push_back({{"id", image.id}, {"persons", std::move(persons)}});
    }
    return json{{"images", std::move(images)}}.dump(2) + "\n";
}

Document load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pose JSON: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

void save(const std::string& path, const Document& doc) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("pose JSON: cannot write " + tmp);
        out << to_json(doc);
    }
    std::filesystem::rename(tmp, path);
}

Person from_pose(const skeleton::PoseConfiguration& pose, double score) {
    Person person;
    person.score = score;
    for (size_t j = 0; j < pose.positions.size(); ++j) {
        metrics::Keypoint kp;
        kp.x = pose.positions[j].x;
        kp.y = pose.positions[j].y;
        kp.v = pose.occlusions[j] == skeleton::OcclusionState::Visible ? 2 : 1;
        person.keypoints.push_back(kp);
        person.occlusions.push_back(static_cast<int>(pose.occlusions[j]));
    }
    return person;
}

metrics::GroundTruthPerson to_ground_truth(const Person& person) {
    metrics::GroundTruthPerson gt;
    gt.keypoints = person.keypoints;
    gt.scale = person.scale;
    return gt;
}

}  // namespace bgsim::posefile
