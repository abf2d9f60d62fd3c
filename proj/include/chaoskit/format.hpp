#pragma once

#include <string>

namespace chaoskit {

/// Round-trip decimal text ("%.17g"), so payloads are byte-stable.
std::string fmt_double(double value);

}  // namespace chaoskit
