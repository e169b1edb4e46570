#pragma once

// NVLF frame stacks: "NVLF" magic, u16 version, u16 width, u16 height,
// u32 n_frames, f64 f_mod, u32 n_cyc, then per frame the I plane followed by
// the Q plane as row-major little-endian f64.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "nvmag/lockin.hpp"

namespace nvmag {

inline constexpr std::uint16_t kNvlfVersion = 1;

struct NvlfHeader {
    std::uint16_t version = kNvlfVersion;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint32_t n_frames = 0;
    double f_mod = 0.0;
    std::uint32_t n_cyc = 0;

    double frame_duration() const { return static_cast<double>(n_cyc) / f_mod; }
};

NvlfHeader make_header(const AcquisitionProtocol& protocol, std::uint32_t n_frames);

/// Streams frames to a temporary file and renames it into place on commit().
/// Frames must arrive in index order; commit() checks the count.
class NvlfWriter {
public:
    NvlfWriter(std::filesystem::path path, const NvlfHeader& header);
    ~NvlfWriter();
    NvlfWriter(const NvlfWriter&) = delete;
    NvlfWriter& operator=(const NvlfWriter&) = delete;

    void write(const LockInFrame& frame);
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    NvlfHeader header_;
    std::ofstream out_;
    std::uint32_t written_ = 0;
    bool committed_ = false;
};

struct FrameStack {
    NvlfHeader header;
    std::vector<LockInFrame> frames;
};

FrameStack read_frames(const std::filesystem::path& path);

void write_frames(const std::filesystem::path& path, const NvlfHeader& header,
                  const std::vector<LockInFrame>& frames);

}  // namespace nvmag
