#pragma once

#include <string>
#include <string_view>

#include "epid/image.hpp"

namespace epid {

// ssEPI acquisition parameters that set the displacement per Hz of off-resonance.
struct EpiParams {
  int s_pe = +1;          // PE direction sign, +1 or -1
  int n_pe = 128;         // phase-encoding lines
  double pf = 0.75;       // partial-Fourier factor in (0.5, 1]
  double r = 2.0;         // in-plane acceleration
  double esp_s = 5e-4;    // echo spacing [s]
  PeAxis pe_axis = PeAxis::row;

  bool operator==(const EpiParams&) const = default;
};

// Throws ValidationError naming the offending field.
void validate_epi_params(const EpiParams& p);

// The four acquisition directions used for dataset synthesis.
enum class PeDirection { LR, RL, AP, PA };

std::string_view to_string(PeDirection dir);
PeDirection parse_pe_direction(std::string_view text);  // throws ValidationError

// LR/RL shift along columns, AP/PA along rows; RL and PA carry s_pe = -1.
EpiParams with_direction(EpiParams base, PeDirection dir);
PeDirection direction_of(const EpiParams& p);

// Same acquisition with the opposite PE sign.
EpiParams reversed(EpiParams p);

}  // namespace epid
