#include "epid/epi_params.hpp"

#include <cmath>

#include "epid/error.hpp"

namespace epid {

void validate_epi_params(const EpiParams& p) {
  if (p.s_pe != 1 && p.s_pe != -1) {
    throw ValidationError("s_pe must be +1 or -1, got " + std::to_string(p.s_pe));
  }
  if (p.n_pe <= 1) throw ValidationError("n_pe must be > 1, got " + std::to_string(p.n_pe));
  if (!(p.pf > 0.5 && p.pf <= 1.0)) {
    throw ValidationError("pf must lie in (0.5, 1], got " + std::to_string(p.pf));
  }
  if (!(p.r >= 1.0) || !std::isfinite(p.r)) {
    throw ValidationError("r (acceleration) must be >= 1, got " + std::to_string(p.r));
  }
  if (!(p.esp_s > 0.0) || !std::isfinite(p.esp_s)) {
    throw ValidationError("esp_s must be > 0, got " + std::to_string(p.esp_s));
  }
  if (!(p.n_pe * p.pf / p.r > 1.0)) {
    throw ValidationError("n_pe*pf/r must exceed 1 (effective echo train)");
  }
}

std::string_view to_string(PeDirection dir) {
  switch (dir) {
    case PeDirection::LR: return "LR";
    case PeDirection::RL: return "RL";
    case PeDirection::AP: return "AP";
    case PeDirection::PA: return "PA";
  }
  return "?";
}

PeDirection parse_pe_direction(std::string_view text) {
  if (text == "LR") return PeDirection::LR;
  if (text == "RL") return PeDirection::RL;
  if (text == "AP") return PeDirection::AP;
  if (text == "PA") return PeDirection::PA;
  throw ValidationError("unknown PE direction \"" + std::string(text) +
                        "\" (expected one of LR, RL, AP, PA)");
}

EpiParams with_direction(EpiParams base, PeDirection dir) {
  base.pe_axis = (dir == PeDirection::LR || dir == PeDirection::RL) ? PeAxis::col : PeAxis::row;
  base.s_pe = (dir == PeDirection::LR || dir == PeDirection::AP) ? +1 : -1;
  return base;
}

PeDirection direction_of(const EpiParams& p) {
  if (p.pe_axis == PeAxis::col) return p.s_pe > 0 ? PeDirection::LR : PeDirection::RL;
  return p.s_pe > 0 ? PeDirection::AP : PeDirection::PA;
}

EpiParams reversed(EpiParams p) {
  p.s_pe = -p.s_pe;
  return p;
}

}  // namespace epid
