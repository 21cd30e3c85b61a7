#pragma once

#include "distreg/families/dagum.hpp"
#include "distreg/families/gamma.hpp"
#include "distreg/families/inverse_gaussian.hpp"
#include "distreg/families/lognormal.hpp"
#include "distreg/families_base.hpp"

namespace distreg {

inline const Family& family(FamilyId id) {
  static const LogNormalFamily ln;
  static const InverseGaussianFamily ig;
  static const GammaFamily ga;
  static const DagumFamily da;
  switch (id) {
    case FamilyId::lognormal: return ln;
    case FamilyId::inverse_gaussian: return ig;
    case FamilyId::gamma: return ga;
    case FamilyId::dagum: return da;
  }
  throw NumericError("unknown family id");
}

inline FamilyId family_id_from_string(const std::string& s) {
  if (s == "lognormal") return FamilyId::lognormal;
  if (s == "invgauss") return FamilyId::inverse_gaussian;
  if (s == "gamma") return FamilyId::gamma;
  if (s == "dagum") return FamilyId::dagum;
  throw ConfigError("unknown family: " + s);
}

inline std::string to_string(FamilyId id) {
  switch (id) {
    case FamilyId::lognormal: return "lognormal";
    case FamilyId::inverse_gaussian: return "invgauss";
    case FamilyId::gamma: return "gamma";
    case FamilyId::dagum: return "dagum";
  }
  return "?";
}

inline int primary_param(FamilyId id) {
  return id == FamilyId::dagum ? 1 : 0;  // b for Dagum, mu otherwise
}

}  // namespace distreg
