#include "nvmag/frame_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "nvmag/error.hpp"

namespace nvmag {

namespace {

constexpr std::array<char, 4> kMagic{'N', 'V', 'L', 'F'};

template <typename T>
void put(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw InputError(fmt::format("NVLF: truncated file while reading {}", what));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void put_plane(std::ostream& out, const Plane& plane) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(plane.values.data()),
                  static_cast<std::streamsize>(plane.values.size() * sizeof(double)));
    } else {
        for (double v : plane.values) put(out, v);
    }
}

Plane get_plane(std::istream& in, std::size_t w, std::size_t h) {
    Plane plane(w, h);
    if constexpr (std::endian::native == std::endian::little) {
        const auto bytes = static_cast<std::streamsize>(plane.values.size() * sizeof(double));
        if (!in.read(reinterpret_cast<char*>(plane.values.data()), bytes))
            throw InputError("NVLF: truncated frame data");
    } else {
        for (double& v : plane.values) v = get<double>(in, "plane");
    }
    return plane;
}

}  // namespace

NvlfHeader make_header(const AcquisitionProtocol& protocol, std::uint32_t n_frames) {
    NvlfHeader h;
    h.width = static_cast<std::uint16_t>(protocol.width);
    h.height = static_cast<std::uint16_t>(protocol.height);
    h.n_frames = n_frames;
    h.f_mod = protocol.f_mod;
    h.n_cyc = protocol.n_cyc;
    return h;
}

NvlfWriter::NvlfWriter(std::filesystem::path path, const NvlfHeader& header)
    : path_(std::move(path)), header_(header) {
    tmp_ = path_;
    tmp_ += ".tmp";
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw InputError(fmt::format("NVLF: cannot open {} for writing", tmp_.string()));
    out_.write(kMagic.data(), kMagic.size());
    put(out_, header_.version);
    put(out_, header_.width);
    put(out_, header_.height);
    put(out_, header_.n_frames);
    put(out_, header_.f_mod);
    put(out_, header_.n_cyc);
}

NvlfWriter::~NvlfWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(tmp_, ec);
    }
}

void NvlfWriter::write(const LockInFrame& frame) {
    if (frame.i_plane.width != header_.width || frame.i_plane.height != header_.height ||
        frame.q_plane.size() != frame.i_plane.size())
        throw InputError("NVLF: frame dimensions do not match the header");
    if (frame.frame_index != written_)
        throw InputError(fmt::format("NVLF: expected frame {}, got {}", written_, frame.frame_index));
    if (written_ >= header_.n_frames) throw InputError("NVLF: more frames than declared");
    put_plane(out_, frame.i_plane);
    put_plane(out_, frame.q_plane);
    ++written_;
}

void NvlfWriter::commit() {
    if (written_ != header_.n_frames)
        throw InputError(fmt::format("NVLF: wrote {} of {} frames", written_, header_.n_frames));
    out_.flush();
    if (!out_) throw InputError("NVLF: write failed");
    out_.close();
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
}

FrameStack read_frames(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("NVLF: cannot open {}", path.string()));
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw InputError(fmt::format("NVLF: {} is not a frame stack", path.string()));
    FrameStack stack;
    auto& h = stack.header;
    h.version = get<std::uint16_t>(in, "version");
    if (h.version != kNvlfVersion)
        throw InputError(fmt::format("NVLF: unsupported version {}", h.version));
    h.width = get<std::uint16_t>(in, "width");
    h.height = get<std::uint16_t>(in, "height");
    h.n_frames = get<std::uint32_t>(in, "n_frames");
    h.f_mod = get<double>(in, "f_mod");
    h.n_cyc = get<std::uint32_t>(in, "n_cyc");
    if (!(h.f_mod > 0.0) || h.n_cyc == 0) throw InputError("NVLF: invalid timing in header");
    stack.frames.reserve(h.n_frames);
    for (std::uint32_t f = 0; f < h.n_frames; ++f) {
        LockInFrame frame;
        frame.frame_index = f;
        frame.timestamp = static_cast<double>(f) * h.frame_duration();
        frame.i_plane = get_plane(in, h.width, h.height);
        frame.q_plane = get_plane(in, h.width, h.height);
        stack.frames.push_back(std::move(frame));
    }
    return stack;
}

void write_frames(const std::filesystem::path& path, const NvlfHeader& header,
                  const std::vector<LockInFrame>& frames) {
    NvlfWriter writer(path, header);
    for (const auto& f : frames) writer.write(f);
    writer.commit();
}

}  // namespace nvmag
