#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "doctest.h"

#include "bgsim/posefile.hpp"

using namespace bgsim;
using posefile::Document;

namespace {

std::string message_of(const std::string& text) {
    try {
        (void)posefile::from_json(text);
    } catch (const std::runtime_error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("documents survive a serialization round trip") {
    Document doc;
    posefile::Image img;
    img.id = 3;
    posefile::Person a;
    a.keypoints = {{1.5, 2.0, 2}, {4.0, 5.25, 1}};
    a.scale = 2.5;
    a.score = 0.75;
    a.occlusions = {0, 2};
    posefile::Person b;
    b.keypoints = {{0.0, 0.0, 0}, {1.0, 1.0, 2}};
    img.persons = {a, b};
    doc.images = {img};

    const Document back = posefile::from_json(posefile::to_json(doc));
    CHECK(back == doc);
}

TEST_CASE("keypoints accept three or four entries") {
    const std::string text = R"({"images":[{"id":0,"persons":[
        {"keypoints":[[1,2,2],[3,4,1,0.875]]}]}]})";
    const Document doc = posefile::from_json(text);
    REQUIRE(doc.images.size() == 1);
    REQUIRE(doc.images[0].persons.size() == 1);
    const auto& kps = doc.images[0].persons[0].keypoints;
    REQUIRE(kps.size() == 2);
    CHECK(kps[0].x == 1.0);
    CHECK(kps[1].y == 4.0);
    CHECK(kps[1].v == 1);
    // Defaults when the optional keys are absent.
    CHECK(doc.images[0].persons[0].scale == 1.0);
    CHECK(doc.images[0].persons[0].score == 0.0);
    CHECK(doc.images[0].persons[0].occlusions.empty());
}

TEST_CASE("unknown keys are ignored") {
    const std::string text = R"({"extra":1,"images":[{"id":0,"note":"x","persons":[
        {"keypoints":[[0,0,2]],"confidence_maps":"ignored"}]}]})";
    CHECK_NOTHROW((void)posefile::from_json(text));
}

TEST_CASE("parse errors name the first offending key") {
    CHECK(message_of(R"({"imgs":[]})").find("images is missing") != std::string::npos);
    CHECK(message_of(R"({"images":7})").find("images must be an array") != std::string::npos);
    CHECK(message_of(R"({"images":[5]})").find("images[0] must be an object") !=
          std::string::npos);
    CHECK(message_of(R"({"images":[{"id":0}]})").find("images[0].persons is missing") !=
          std::string::npos);
    const std::string bad_kp = R"({"images":[{"persons":[{"keypoints":[[0,0,2]]}]},
        {"persons":[{"keypoints":[[0,0,2]]},
                    {"keypoints":[[0,0,2],[0,0,2],[0,0,2],[1,2]]}]}]})";
    CHECK(message_of(bad_kp).find(
              "images[1].persons[1].keypoints[3] must be [x, y, v]") != std::string::npos);
    CHECK(message_of(R"({"images":[{"persons":[{"keypoints":[[0,0,2.5]]}]}]})")
              .find("keypoints[0][2] must be an integer") != std::string::npos);
    CHECK(message_of(R"({"images":[{"persons":[{"keypoints":[[0,0,2]],"scale":"big"}]}]})")
              .find("scale must be a number") != std::string::npos);
    CHECK(message_of("{nope").find("not valid JSON") != std::string::npos);
}

TEST_CASE("occlusions must align with the keypoints") {
    const std::string mismatched = R"({"images":[{"persons":[
        {"keypoints":[[0,0,2],[1,1,2]],"occlusions":[0]}]}]})";
    CHECK(message_of(mismatched).find(
              "persons[0].occlusions must be an array matching keypoints") !=
          std::string::npos);
    const std::string out_of_range = R"({"images":[{"persons":[
        {"keypoints":[[0,0,2]],"occlusions":[3]}]}]})";
    CHECK(message_of(out_of_range).find("occlusions[0] must be 0, 1, or 2") !=
          std::string::npos);
}

TEST_CASE("file io is atomic and round trips") {
    const std::string path = "build/posefile_test_roundtrip.json";
    std::filesystem::create_directories("build");
    Document doc;
    posefile::Image img;
    posefile::Person p;
    p.keypoints = {{2.0, 3.0, 2}};
    img.persons = {p};
    doc.images = {img};
    posefile::save(path, doc);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    CHECK(posefile::load(path) == doc);
    std::filesystem::remove(path);
    CHECK_THROWS_AS((void)posefile::load(path), std::runtime_error);
}

TEST_CASE("pose conversion maps occlusion states to visibility flags") {
    skeleton::PoseConfiguration pose;
    pose.positions = {{4, 5}, {6, 7}, {8, 9}};
    pose.occlusions = {skeleton::OcclusionState::Visible,
                       skeleton::OcclusionState::SelfOccluded,
                       skeleton::OcclusionState::OtherOccluded};
    const posefile::Person person = posefile::from_pose(pose, 1.25);
    CHECK(person.score == 1.25);
    REQUIRE(person.keypoints.size() == 3);
    CHECK(person.keypoints[0].v == 2);
    CHECK(person.keypoints[1].v == 1);
    CHECK(person.keypoints[2].v == 1);
    CHECK(person.keypoints[2].x == 8.0);
    CHECK(person.occlusions == std::vector<int>{0, 1, 2});

    posefile::Person gt_person;
    gt_person.keypoints = {{1.0, 2.0, 2}};
    gt_person.scale = 3.5;
    const metrics::GroundTruthPerson gt = posefile::to_ground_truth(gt_person);
    CHECK(gt.scale == 3.5);
    CHECK(gt.keypoints == gt_person.keypoints);
}
