#include "chaoskit/format.hpp"

#include <cmath>
#include <cstdio>

namespace chaoskit {

std::string fmt_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace chaoskit
