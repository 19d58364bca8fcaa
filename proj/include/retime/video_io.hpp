// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "retime/errors.hpp"
#include "retime/media.hpp"

namespace retime {

// Two on-disk formats are supported:
//  - Y4M ("YUV4MPEG2 ..."), 4:2:0 or mono; only the luma plane is consumed.
//  - SPDV raw: little-endian {magic "SPDV", u32 width, u32 height,
//    u32 n_frames, f32 fps} followed by n_frames * width * height bytes of
//    luma scaled by 255. SPDV round-trips luma exactly.

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw data_error("write failed: " + path);
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint8_t luma_byte(float v) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::llround(c * 255.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SPDV
// ---------------------------------------------------------------------------

inline void save_spdv(const Clip& clip, const std::string& path) {
    validate_clip(clip, "save_spdv");
    std::vector<std::uint8_t> bytes;
    const std::size_t frame_px = static_cast<std::size_t>(clip.width()) * clip.height();
    bytes.reserve(20 + frame_px * clip.frames.size());
    bytes.insert(bytes.end(), {'S', 'P', 'D', 'V'});
    detail::put_u32le(bytes, static_cast<std::uint32_t>(clip.width()));
    detail::put_u32le(bytes, static_cast<std::uint32_t>(clip.height()));
    detail::put_u32le(bytes, static_cast<std::uint32_t>(clip.frames.size()));
    const float fps32 = static_cast<float>(clip.fps);
    std::uint32_t fps_bits;
    std::memcpy(&fps_bits, &fps32, sizeof fps_bits);
    detail::put_u32le(bytes, fps_bits);
    for (const Frame& f : clip.frames)
        for (float v : f.luma) bytes.push_back(detail::luma_byte(v));
    detail::write_file_bytes(path, bytes);
}

inline Clip load_spdv_bytes(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    if (bytes.size() < 20) throw parse_error("SPDV header truncated", bytes.size());
    if (std::memcmp(bytes.data(), "SPDV", 4) != 0) throw parse_error("bad SPDV magic", 0);
    const std::uint32_t w = detail::get_u32le(bytes.data() + 4);
    const std::uint32_t h = detail::get_u32le(bytes.data() + 8);
    const std::uint32_t n = detail::get_u32le(bytes.data() + 12);
    const std::uint32_t fps_bits = detail::get_u32le(bytes.data() + 16);
    float fps32;
    std::memcpy(&fps32, &fps_bits, sizeof fps32);
    if (w < 8 || h < 8) throw parse_error("SPDV frame dimensions must be >= 8", 4);
    if (n < 2) throw parse_error("SPDV clip must have at least 2 frames", 12);
    if (!(fps32 > 0.0f)) throw parse_error("SPDV fps must be > 0", 16);

    const std::size_t frame_px = static_cast<std::size_t>(w) * h;
    Clip clip;
    clip.fps = fps32;
    clip.source_id = name;
    clip.frames.reserve(n);
    std::size_t off = 20;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (off + frame_px > bytes.size())
            throw parse_error("SPDV frame " + std::to_string(i) + " truncated", bytes.size());
        Frame f(static_cast<int>(w), static_cast<int>(h));
        for (std::size_t p = 0; p < frame_px; ++p)
            f.luma[p] = static_cast<float>(bytes[off + p] / 255.0);
        clip.frames.push_back(std::move(f));
        off += frame_px;
    }
    reset_src_index(clip);
    return clip;
}

inline Clip load_spdv(const std::string& path) {
    return load_spdv_bytes(detail::read_file_bytes(path),
                           std::filesystem::path(path).stem().string());
}

// ---------------------------------------------------------------------------
// Y4M
// ---------------------------------------------------------------------------

namespace detail {

struct Y4mHeader {
    int width = 0;
    int height = 0;
    long fps_num = 30;
    long fps_den = 1;
    std::size_t chroma_bytes = 0;  // per frame, skipped on read
};

inline Y4mHeader parse_y4m_header(const std::vector<std::uint8_t>& bytes, std::size_t& off) {
    static const char magic[] = "YUV4MPEG2";
    if (bytes.size() < 9 || std::memcmp(bytes.data(), magic, 9) != 0)
        throw parse_error("missing YUV4MPEG2 signature", 0);
    std::size_t eol = 9;
    while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
    if (eol == bytes.size()) throw parse_error("unterminated Y4M header line", eol);

    Y4mHeader hdr;
    std::string colorspace = "420";
    std::size_t pos = 9;
    while (pos < eol) {
        if (bytes[pos] != ' ') throw parse_error("malformed Y4M header tag separator", pos);
        ++pos;
        std::size_t end = pos;
        while (end < eol && bytes[end] != ' ') ++end;
        if (end == pos) throw parse_error("empty Y4M header tag", pos);
        const char tag = static_cast<char>(bytes[pos]);
        const std::string value(bytes.begin() + pos + 1, bytes.begin() + end);
        try {
            switch (tag) {
                case 'W': hdr.width = std::stoi(value); break;
                case 'H': hdr.height = std::stoi(value); break;
                case 'F': {
                    const std::size_t colon = value.find(':');
                    if (colon == std::string::npos)
                        throw parse_error("Y4M F tag is not num:den", pos);
                    hdr.fps_num = std::stol(value.substr(0, colon));
                    hdr.fps_den = std::stol(value.substr(colon + 1));
                    break;
                }
                case 'C': colorspace = value; break;
                case 'I':
                case 'A':
                case 'X': break;  // interlacing, aspect and comments are ignored
                default: throw parse_error(std::string("unknown Y4M header tag '") + tag + "'", pos);
            }
        } catch (const std::invalid_argument&) {
            throw parse_error("non-numeric Y4M header value", pos);
        } catch (const std::out_of_range&) {
            throw parse_error("out-of-range Y4M header value", pos);
        }
        pos = end;
    }
    if (hdr.width < 8 || hdr.height < 8)
        throw parse_error("Y4M frame dimensions missing or < 8", 9);
    if (hdr.fps_num <= 0 || hdr.fps_den <= 0) throw parse_error("Y4M frame rate must be > 0", 9);

    if (colorspace == "mono") {
        hdr.chroma_bytes = 0;
    } else if (colorspace == "420" || colorspace == "420jpeg" || colorspace == "420paldv" ||
               colorspace == "420mpeg2") {
        if (hdr.width % 2 != 0 || hdr.height % 2 != 0)
            throw parse_error("Y4M 4:2:0 requires even dimensions", 9);
        hdr.chroma_bytes = 2 * static_cast<std::size_t>(hdr.width / 2) * (hdr.height / 2);
    } else {
        throw parse_error("unsupported Y4M colorspace C" + colorspace, 9);
    }
    off = eol + 1;
    return hdr;
}

}  // namespace detail

inline Clip load_y4m_bytes(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    std::size_t off = 0;
    const detail::Y4mHeader hdr = detail::parse_y4m_header(bytes, off);
    const std::size_t luma_bytes = static_cast<std::size_t>(hdr.width) * hdr.height;

    Clip clip;
    clip.fps = static_cast<double>(hdr.fps_num) / static_cast<double>(hdr.fps_den);
    clip.source_id = name;
    while (off < bytes.size()) {
        if (off + 5 > bytes.size() || std::memcmp(bytes.data() + off, "FRAME", 5) != 0)
            throw parse_error("expected FRAME marker", off);
        std::size_t eol = off + 5;
        while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
        if (eol == bytes.size()) throw parse_error("unterminated FRAME line", eol);
        off = eol + 1;
        if (off + luma_bytes > bytes.size())
            throw parse_error("truncated Y4M frame payload", bytes.size());
        Frame f(hdr.width, hdr.height);
        for (std::size_t p = 0; p < luma_bytes; ++p)
            f.luma[p] = static_cast<float>(bytes[off + p] / 255.0);
        clip.frames.push_back(std::move(f));
        off += luma_bytes;
        if (off + hdr.chroma_bytes > bytes.size())
            throw parse_error("truncated Y4M chroma payload", bytes.size());
        off += hdr.chroma_bytes;
    }
    if (clip.frames.size() < 2) throw data_error("Y4M clip must have at least 2 frames: " + name);
    reset_src_index(clip);
    return clip;
}

inline Clip load_y4m(const std::string& path) {
    return load_y4m_bytes(detail::read_file_bytes(path),
                          std::filesystem::path(path).stem().string());
}

inline void save_y4m(const Clip& clip, const std::string& path) {
    validate_clip(clip, "save_y4m");
    long num, den;
    if (std::abs(clip.fps - std::round(clip.fps)) < 1e-9) {
        num = static_cast<long>(std::llround(clip.fps));
        den = 1;
    } else {
        num = std::llround(clip.fps * 1000.0);
        den = 1000;
        const long g = std::gcd(num, den);
        num /= g;
        den /= g;
    }
    std::string header = "YUV4MPEG2 W" + std::to_string(clip.width()) + " H" +
                         std::to_string(clip.height()) + " F" + std::to_string(num) + ":" +
                         std::to_string(den) + " Ip A1:1 Cmono\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    const std::size_t frame_px = static_cast<std::size_t>(clip.width()) * clip.height();
    bytes.reserve(bytes.size() + clip.frames.size() * (frame_px + 6));
    for (const Frame& f : clip.frames) {
        bytes.insert(bytes.end(), {'F', 'R', 'A', 'M', 'E', '\n'});
        for (float v : f.luma) bytes.push_back(detail::luma_byte(v));
    }
    detail::write_file_bytes(path, bytes);
}

// ---------------------------------------------------------------------------
// Format dispatch
// ---------------------------------------------------------------------------

/// Loads a video, sniffing the container from the leading magic bytes.
inline Clip load_video(const std::string& path) {
    const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
    const std::string name = std::filesystem::path(path).stem().string();
    if (bytes.size() >= 9 && std::memcmp(bytes.data(), "YUV4MPEG2", 9) == 0)
        return load_y4m_bytes(bytes, name);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "SPDV", 4) == 0)
        return load_spdv_bytes(bytes, name);
    throw parse_error("unrecognized video container (expected Y4M or SPDV): " + path, 0);
}

/// Saves as Y4M when the extension is .y4m, SPDV otherwise.
inline void save_video(const Clip& clip, const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".y4m")
        save_y4m(clip, path);
    else
        save_spdv(clip, path);
}

}  // namespace retime
