#pragma once

// Operating points shared by the tests.

#include "nvmag/lockin.hpp"
#include "nvmag/nv_physics.hpp"
#include "nvmag/odmr.hpp"

namespace fixture {

inline nvmag::NVConfiguration nv001(double bias = 3e-3) {
    nvmag::NVConfiguration nv;
    nv.bias_field = bias * nvmag::alignment_direction(nvmag::Alignment::Axis001);
    return nv;
}

inline nvmag::OdmrModel line_shape(nvmag::DriveScheme scheme = nvmag::DriveScheme::TripleTone) {
    nvmag::OdmrModel m;
    m.linewidth = 1.25e6;
    m.contrast = 0.01;
    m.scheme = scheme;
    return m;
}

/// Small noiseless field-mode DR setup.
inline nvmag::LockInSetup setup(std::size_t side = 4, bool noise = false) {
    nvmag::AcquisitionProtocol p;
    p.width = side;
    p.height = side;
    p.beam_fwhm = 0.0;
    p.shot_noise = noise;
    p.photon_rate = 1e9;
    return nvmag::make_setup(nv001(), line_shape(), p);
}

inline nvmag::Movie constant(double value, const nvmag::LockInSetup& s, std::size_t n_frames) {
    return nvmag::Movie::constant(value, static_cast<double>(n_frames) * s.protocol.frame_duration());
}

}  // namespace fixture
