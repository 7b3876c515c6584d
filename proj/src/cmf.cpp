#include "bgsim/cmf.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace bgsim::cmf {

using heatmap::ConfidenceMap;

namespace {

void append_u32le(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    out.push_back(static_cast<uint8_t>(bits & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 24) & 0xff));
}

float read_f32le(const uint8_t* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

[[noreturn]] void fail(size_t offset, const std::string& what) {
    throw ParseError("CMF parse error at byte offset " + std::to_string(offset) + ": " + what);
}

}  // namespace

std::vector<uint8_t> encode(const std::vector<ConfidenceMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("cannot encode an empty map stack");
    const int w = maps[0].width;
    const int h = maps[0].height;
    for (const auto& m : maps)
        if (m.width != w || m.height != h)
            throw std::invalid_argument("all maps in a stack must share dimensions");
    std::string header = "CMF1 " + std::to_string(w) + " " + std::to_string(h) + " " +
                         std::to_string(maps.size()) + "\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + maps.size() * maps[0].values.size() * 4);
    for (const auto& m : maps)
        for (double v : m.values) append_u32le(out, static_cast<float>(v));
    return out;
}

std::vector<ConfidenceMap> decode(const std::vector<uint8_t>& bytes) {
    // Header: "CMF1 <width> <height> <num_joints>\n", all ASCII decimal.
    size_t pos = 0;
    auto expect = [&](const char* lit) {
        const size_t n = std::strlen(lit);
        if (bytes.size() < pos + n || std::memcmp(bytes.data() + pos, lit, n) != 0)
            fail(pos, std::string("expected \"") + lit + "\"");
        pos += n;
    };
    auto read_int = [&]() {
        size_t start = pos;
        long val = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            val = val * 10 + (bytes[pos] - '0');
            if (val > 1'000'000'000) fail(start, "dimension out of range");
            ++pos;
        }
        if (pos == start) fail(pos, "expected a decimal integer");
        return static_cast<int>(val);
    };
    expect("CMF1 ");
    const int w = read_int();
    expect(" ");
    const int h = read_int();
    expect(" ");
    const int n = read_int();
    expect("\n");
    if (w <= 0 || h <= 0 || n <= 0) fail(0, "non-positive dimension in header");

    const size_t cells = static_cast<size_t>(w) * h;
    const size_t expected = pos + cells * n * 4;
    if (bytes.size() != expected)
        fail(bytes.size() < expected ? bytes.size() : expected,
             "payload truncated or oversized: expected " + std::to_string(expected) +
                 " bytes total, got " + std::to_string(bytes.size()));

    std::vector<ConfidenceMap> maps;
    maps.reserve(n);
    for (int j = 0; j < n; ++j) {
        ConfidenceMap m = heatmap::make_map(w, h, j);
        for (size_t i = 0; i < cells; ++i) {
            m.values[i] = read_f32le(bytes.data() + pos);
            pos += 4;
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

void write_file(const std::string& path, const std::vector<ConfidenceMap>& maps) {
    const std::vector<uint8_t> bytes = encode(maps);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<ConfidenceMap> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return decode(bytes);
}

}  // namespace bgsim::cmf
