#pragma once

#include <span>

namespace aeunmix {

// Angle in radians between two spectra, in [0, pi]. Throws
// DegenerateSpectrumError when either vector has zero norm.
double spectral_angle(std::span<const double> a, std::span<const double> b);

}  // namespace aeunmix
