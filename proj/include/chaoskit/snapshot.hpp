#pragma once

#include <iosfwd>
#include <string>

#include "chaoskit/ensemble.hpp"

namespace chaoskit {

/// CSV: header `particle,t,x0..x{d-1},v0..v{d-1}`, one row per particle,
/// values printed round-trip exact.
void write_snapshot_csv(std::ostream& out, const Ensemble& ens);
Ensemble read_snapshot_csv(std::istream& in);

/// Binary: "CHKS", u32 version (1), u32 d, u64 n, f64 t, then n*d position
/// and n*d velocity doubles, all little-endian.
void write_snapshot_binary(std::ostream& out, const Ensemble& ens);
Ensemble read_snapshot_binary(std::istream& in);

/// File helpers; failures throw IoError.
void save_snapshot(const std::string& path, const Ensemble& ens, bool binary);
Ensemble load_snapshot(const std::string& path);

}  // namespace chaoskit
