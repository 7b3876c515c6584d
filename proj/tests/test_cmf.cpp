#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include "doctest.h"

#include "bgsim/cmf.hpp"

using namespace bgsim;
using heatmap::ConfidenceMap;

namespace {

std::vector<ConfidenceMap> sample_stack() {
    std::mt19937 gen(7);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    std::vector<ConfidenceMap> maps;
    for (int j = 0; j < 3; ++j) {
        ConfidenceMap m = heatmap::make_map(5, 4, j);
        for (double& v : m.values) v = dist(gen);
        maps.push_back(std::move(m));
    }
    return maps;
}

}  // namespace

TEST_CASE("cmf encode/decode round-trips float32 payloads exactly") {
    const auto maps = sample_stack();
    const auto decoded = cmf::decode(cmf::encode(maps));
    REQUIRE(decoded.size() == maps.size());
    for (size_t j = 0; j < maps.size(); ++j) {
        CHECK(decoded[j].width == maps[j].width);
        CHECK(decoded[j].height == maps[j].height);
        CHECK(decoded[j].joint_id == static_cast<int>(j));
        // Inputs were generated as float, so the narrowing is lossless.
        for (size_t i = 0; i < maps[j].values.size(); ++i)
            CHECK(decoded[j].values[i] == maps[j].values[i]);
    }
}

TEST_CASE("cmf header is the documented ASCII line") {
    const auto bytes = cmf::encode(sample_stack());
    const std::string head(bytes.begin(), bytes.begin() + 10);
    CHECK(head == "CMF1 5 4 3");
    CHECK(bytes.size() == 10 + 1 + 3 * 4 * 5 * sizeof(float));
}

TEST_CASE("cmf decode reports the byte offset of the failure") {
    auto bytes = cmf::encode(sample_stack());

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        try {
            (void)cmf::decode(bytes);
            FAIL("expected a parse error");
        } catch (const cmf::ParseError& e) {
            CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
        }
    }
    SUBCASE("truncated payload") {
        bytes.resize(bytes.size() - 7);
        try {
            (void)cmf::decode(bytes);
            FAIL("expected a parse error");
        } catch (const cmf::ParseError& e) {
            CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    SUBCASE("trailing garbage") {
        bytes.push_back(0);
        CHECK_THROWS_AS((void)cmf::decode(bytes), cmf::ParseError);
    }
    SUBCASE("zero dimension") {
        const std::string bad = "CMF1 0 4 3\n";
        CHECK_THROWS_AS((void)cmf::decode({bad.begin(), bad.end()}), cmf::ParseError);
    }
}

TEST_CASE("cmf encode validates the stack") {
    CHECK_THROWS_AS((void)cmf::encode({}), std::invalid_argument);
    auto maps = sample_stack();
    maps[1] = heatmap::make_map(4, 4, 1);
    CHECK_THROWS_AS((void)cmf::encode(maps), std::invalid_argument);
}

TEST_CASE("cmf file round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "bgsim_cmf_test";
    fs::create_directories(dir);
    const std::string path = (dir / "stack.cmf").string();
    const auto maps = sample_stack();
    cmf::write_file(path, maps);
    const auto loaded = cmf::read_file(path);
    REQUIRE(loaded.size() == maps.size());
    for (size_t j = 0; j < maps.size(); ++j) CHECK(loaded[j].values == maps[j].values);
    // No temporary left behind by the atomic write.
    int entries = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++entries;
    }
    CHECK(entries == 1);
    fs::remove_all(dir);
}
