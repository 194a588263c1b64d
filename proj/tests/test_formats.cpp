// The atlas container format: header layout, float32 payload boundary,
// bit-exact round trips, and rejection of corrupted or foreign files.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "satlas/atlas_io.hpp"
#include "satlas/binary_io.hpp"
#include "satlas/sphere_lattice.hpp"

using namespace satlas;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("satlas_fmt_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

ShapeAtlas random_atlas(int side, uint64_t seed, bool float_exact) {
    ShapeAtlas a;
    a.resize(side, side);
    a.lattice_id = lattice_id_for(side * side);
    Rng rng(seed);
    for (double& v : a.data) {
        const double raw = rng.uniform(-2.0, 2.0);
        v = float_exact ? double(float(raw)) : raw;
    }
    return a;
}

}  // namespace

TEST_CASE("atlas files round-trip bit-exactly for 20 random atlases") {
    TempDir dir;
    for (int trial = 0; trial < 20; ++trial) {
        const int side = 2 + trial % 7;
        ShapeAtlas a = random_atlas(side, mix_seed({uint64_t(trial), 101}), /*float_exact=*/true);
        const auto p1 = dir.path / ("a" + std::to_string(trial) + ".satl");
        const auto p2 = dir.path / ("b" + std::to_string(trial) + ".satl");

        write_atlas(p1, a);
        ShapeAtlas b = read_atlas(p1);
        REQUIRE(b.height == a.height);
        REQUIRE(b.width == a.width);
        REQUIRE(b.lattice_id == a.lattice_id);
        REQUIRE(b.data.size() == a.data.size());
        for (size_t i = 0; i < a.data.size(); ++i) REQUIRE(b.data[i] == a.data[i]);

        // a second serialization of the read-back atlas is byte-identical
        write_atlas(p2, b);
        REQUIRE(read_file(p1) == read_file(p2));
    }
}

TEST_CASE("the float32 payload boundary is the only precision cut") {
    TempDir dir;
    ShapeAtlas a = random_atlas(4, 7, /*float_exact=*/false);
    const auto p = dir.path / "full.satl";
    write_atlas(p, a);
    ShapeAtlas b = read_atlas(p);
    for (size_t i = 0; i < a.data.size(); ++i) REQUIRE(b.data[i] == double(float(a.data[i])));
}

TEST_CASE("header fields are written at their documented offsets") {
    TempDir dir;
    ShapeAtlas a = random_atlas(3, 8, true);
    const auto p = dir.path / "h.satl";
    write_atlas(p, a);
    const std::string bytes = read_file(p);

    REQUIRE(bytes.size() == 40 + a.data.size() * 4);
    REQUIRE(bytes.substr(0, 4) == "SATL");
    auto u32_at = [&](size_t off) {
        return uint32_t(uint8_t(bytes[off])) | uint32_t(uint8_t(bytes[off + 1])) << 8 |
               uint32_t(uint8_t(bytes[off + 2])) << 16 | uint32_t(uint8_t(bytes[off + 3])) << 24;
    };
    REQUIRE(u32_at(4) == 1);   // version
    REQUIRE(u32_at(8) == 3);   // height
    REQUIRE(u32_at(12) == 3);  // width
    REQUIRE(u32_at(16) == 8);  // channels
    REQUIRE(u32_at(20) == 0);  // dtype: float32
    for (int i = 0; i < 16; ++i) REQUIRE(uint8_t(bytes[24 + size_t(i)]) == a.lattice_id[size_t(i)]);
}

TEST_CASE("corrupted or foreign files are rejected") {
    TempDir dir;
    ShapeAtlas a = random_atlas(4, 9, true);
    const auto good = dir.path / "good.satl";
    write_atlas(good, a);
    const std::string bytes = read_file(good);

    auto expect_reject = [&](std::string mutated, const char* label) {
        INFO(label);
        const auto p = dir.path / "bad.satl";
        atomic_write_file(p, mutated);
        REQUIRE_THROWS_AS(read_atlas(p), FormatError);
    };

    {
        std::string s = bytes;
        s[0] = 'X';
        expect_reject(s, "bad magic");
    }
    {
        std::string s = bytes;
        s[4] = 9;  // unsupported version
        expect_reject(s, "bad version");
    }
    {
        std::string s = bytes;
        s[8] = 0;
        s[9] = 0;
        s[10] = 0;
        s[11] = 0;  // zero height
        expect_reject(s, "zero height");
    }
    {
        std::string s = bytes;
        s[16] = 5;  // wrong channel count
        expect_reject(s, "bad channels");
    }
    {
        std::string s = bytes;
        s[20] = 7;  // unknown dtype tag
        expect_reject(s, "bad dtype");
    }
    expect_reject(bytes.substr(0, bytes.size() - 9), "truncated payload");
    expect_reject(bytes.substr(0, 17), "truncated header");
    expect_reject(bytes + std::string(1, '\0'), "trailing byte");
    expect_reject("hello, this is not an atlas", "foreign file");
    expect_reject("", "empty file");

    REQUIRE_THROWS_AS(read_atlas(dir.path / "missing.satl"), FormatError);

    // the good file still parses after all that
    REQUIRE(read_atlas(good).mask_sum() == a.mask_sum());
}

TEST_CASE("error messages name the failing field") {
    TempDir dir;
    ShapeAtlas a = random_atlas(2, 10, true);
    const auto good = dir.path / "g.satl";
    write_atlas(good, a);
    std::string s = read_file(good);

    s[0] = '?';
    const auto p = dir.path / "m.satl";
    atomic_write_file(p, s);
    REQUIRE_THROWS_WITH(read_atlas(p), Catch::Matchers::ContainsSubstring("magic"));

    s = read_file(good);
    s[20] = 3;
    atomic_write_file(p, s);
    REQUIRE_THROWS_WITH(read_atlas(p), Catch::Matchers::ContainsSubstring("dtype"));
}
