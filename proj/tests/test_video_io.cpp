// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "retime/media.hpp"
#include "retime/video_io.hpp"

using namespace retime;
namespace fs = std::filesystem;

namespace {

Clip tiny_clip(int frames = 4, int w = 16, int h = 16) {
    MotionSpec spec;
    ObjectSpec obj;
    obj.shape = ShapeKind::disc;
    obj.size = 8.0;
    obj.path = PathSpec::line(7.5, 7.5, 1.0, 0.0);
    obj.speed_profile = {{frames, 0.5}};
    spec.objects.push_back(obj);
    spec.background = BackgroundSpec::noise(0.35, 0.2);
    return generate_clip(spec, frames, w, h, 21);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("retime_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint8_t> y4m_bytes(const std::string& header, int frames, int luma_bytes,
                                    int chroma_bytes) {
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    for (int t = 0; t < frames; ++t) {
        const std::string marker = "FRAME\n";
        bytes.insert(bytes.end(), marker.begin(), marker.end());
        for (int p = 0; p < luma_bytes; ++p)
            bytes.push_back(static_cast<std::uint8_t>((t * 7 + p) % 251));
        for (int p = 0; p < chroma_bytes; ++p) bytes.push_back(128);
    }
    return bytes;
}

}  // namespace

TEST_CASE("SPDV round-trip preserves luma exactly") {
    TempDir dir;
    const Clip clip = tiny_clip();
    const std::string path = (dir.path / "clip.spdv").string();
    save_spdv(clip, path);
    const Clip back = load_spdv(path);
    REQUIRE(back.length() == clip.length());
    REQUIRE(back.fps == clip.fps);
    for (int t = 0; t < clip.length(); ++t) REQUIRE(back.frames[t].luma == clip.frames[t].luma);
}

TEST_CASE("SPDV rejects corruption with byte offsets") {
    TempDir dir;
    const Clip clip = tiny_clip();
    const std::string path = (dir.path / "clip.spdv").string();
    save_spdv(clip, path);
    auto bytes = retime::detail::read_file_bytes(path);

    SECTION("truncated final frame reports the end of the data") {
        bytes.resize(bytes.size() - 10);
        try {
            load_spdv_bytes(bytes, "x");
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            REQUIRE(e.offset() == bytes.size());
        }
    }
    SECTION("bad magic") {
        bytes[0] = 'X';
        REQUIRE_THROWS_AS(load_spdv_bytes(bytes, "x"), parse_error);
    }
    SECTION("undersized dimensions are rejected") {
        bytes[4] = 4;  // width -> 4
        REQUIRE_THROWS_AS(load_spdv_bytes(bytes, "x"), parse_error);
    }
}

TEST_CASE("Y4M header parse: W16 H16 F25:1 gives fps 25") {
    const auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F25:1 Cmono\n", 2, 256, 0);
    const Clip clip = load_y4m_bytes(bytes, "t");
    REQUIRE(clip.width() == 16);
    REQUIRE(clip.height() == 16);
    REQUIRE(clip.fps == 25.0);
    REQUIRE(clip.length() == 2);
    REQUIRE(clip.frames[0].luma[3] == Catch::Approx(3.0 / 255.0));
}

TEST_CASE("Y4M 4:2:0 chroma planes are skipped") {
    const auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F30000:1001 C420jpeg\n", 3, 256, 128);
    const Clip clip = load_y4m_bytes(bytes, "t");
    REQUIRE(clip.length() == 3);
    REQUIRE(clip.fps == Catch::Approx(30000.0 / 1001.0));
    REQUIRE(clip.frames[2].luma[0] == Catch::Approx((2 * 7) % 251 / 255.0));
}

TEST_CASE("Y4M corruption cases") {
    SECTION("truncated final frame") {
        auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F25:1 Cmono\n", 2, 256, 0);
        bytes.resize(bytes.size() - 1);
        try {
            load_y4m_bytes(bytes, "t");
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            REQUIRE(e.offset() == bytes.size());
        }
    }
    SECTION("unsupported colorspace") {
        const auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F25:1 C444\n", 1, 768, 0);
        REQUIRE_THROWS_WITH(load_y4m_bytes(bytes, "t"),
                            Catch::Matchers::ContainsSubstring("C444"));
    }
    SECTION("missing FRAME marker") {
        auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F25:1 Cmono\n", 2, 256, 0);
        bytes[30] = 'G';  // first FRAME marker starts at offset 30
        REQUIRE_THROWS_AS(load_y4m_bytes(bytes, "t"), parse_error);
    }
    SECTION("bad signature") {
        const std::vector<std::uint8_t> bytes = {'n', 'o', 'p', 'e'};
        REQUIRE_THROWS_AS(load_y4m_bytes(bytes, "t"), parse_error);
    }
}

TEST_CASE("Y4M round-trip via writer") {
    TempDir dir;
    const Clip clip = tiny_clip(3);
    const std::string path = (dir.path / "clip.y4m").string();
    save_y4m(clip, path);
    const auto bytes = retime::detail::read_file_bytes(path);
    const std::string head(bytes.begin(), bytes.begin() + 29);
    REQUIRE(head == "YUV4MPEG2 W16 H16 F25:1 Ip A1");
    const Clip back = load_y4m(path);
    REQUIRE(back.fps == 25.0);
    for (int t = 0; t < 3; ++t) REQUIRE(back.frames[t].luma == clip.frames[t].luma);
}

TEST_CASE("load_video sniffs the container, save_video dispatches on extension") {
    TempDir dir;
    const Clip clip = tiny_clip(3);
    const std::string y4m = (dir.path / "a.y4m").string();
    const std::string spdv = (dir.path / "a.spdv").string();
    save_video(clip, y4m);
    save_video(clip, spdv);
    REQUIRE(load_video(y4m).length() == 3);
    REQUIRE(load_video(spdv).length() == 3);
    REQUIRE(load_video(y4m).frames[1].luma == load_video(spdv).frames[1].luma);

    const std::string junk = (dir.path / "a.bin").string();
    retime::detail::write_file_bytes(junk, {1, 2, 3, 4, 5});
    REQUIRE_THROWS_AS(load_video(junk), parse_error);
}

TEST_CASE("single-frame files are rejected") {
    const auto bytes = y4m_bytes("YUV4MPEG2 W16 H16 F25:1 Cmono\n", 1, 256, 0);
    REQUIRE_THROWS_AS(load_y4m_bytes(bytes, "t"), data_error);
}
