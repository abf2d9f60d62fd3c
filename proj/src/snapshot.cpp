#include "chaoskit/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "chaoskit/error.hpp"
#include "chaoskit/format.hpp"

namespace chaoskit {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'H', 'K', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("truncated snapshot");
  return value;
}

}  // namespace

void write_snapshot_csv(std::ostream& out, const Ensemble& ens) {
  out << "particle,t";
  for (int k = 0; k < ens.d; ++k) out << ",x" << k;
  for (int k = 0; k < ens.d; ++k) out << ",v" << k;
  out << '\n';
  const std::string t = fmt_double(ens.t);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    out << i << ',' << t;
    for (double c : ens.position(i)) out << ',' << fmt_double(c);
    for (double c : ens.velocity(i)) out << ',' << fmt_double(c);
    out << '\n';
  }
}

Ensemble read_snapshot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty snapshot");
  std::size_t cols = 1;
  for (char c : line) cols += c == ',';
  if (cols < 4 || (cols - 2) % 2 != 0 || line.rfind("particle,t,x0", 0) != 0) throw IoError("bad snapshot header");
  Ensemble ens;
  ens.d = static_cast<int>((cols - 2) / 2);
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != cols) throw IoError("bad snapshot row");
    if (first) ens.t = vals[1];
    first = false;
    for (int k = 0; k < ens.d; ++k) ens.x.push_back(vals[2 + k]);
    for (int k = 0; k < ens.d; ++k) ens.v.push_back(vals[2 + ens.d + k]);
  }
  return ens;
}

void write_snapshot_binary(std::ostream& out, const Ensemble& ens) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ens.d));
  put<std::uint64_t>(out, ens.size());
  put<double>(out, ens.t);
  out.write(reinterpret_cast<const char*>(ens.x.data()), static_cast<std::streamsize>(ens.x.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(ens.v.data()), static_cast<std::streamsize>(ens.v.size() * sizeof(double)));
}

Ensemble read_snapshot_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a snapshot file");
  if (take<std::uint32_t>(in) != kVersion) throw IoError("unsupported snapshot version");
  Ensemble ens;
  ens.d = static_cast<int>(take<std::uint32_t>(in));
  const auto n = take<std::uint64_t>(in);
  ens.t = take<double>(in);
  if (ens.d < 1 || n > (std::uint64_t{1} << 32)) throw IoError("bad snapshot header");
  const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(ens.d);
  ens.x.resize(count);
  ens.v.resize(count);
  const auto bytes = static_cast<std::streamsize>(count * sizeof(double));
  if (!in.read(reinterpret_cast<char*>(ens.x.data()), bytes) || !in.read(reinterpret_cast<char*>(ens.v.data()), bytes)) {
    throw IoError("truncated snapshot");
  }
  return ens;
}

void save_snapshot(const std::string& path, const Ensemble& ens, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (binary) {
    write_snapshot_binary(out, ens);
  } else {
    write_snapshot_csv(out, ens);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Ensemble load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  char head[4] = {};
  in.read(head, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, kMagic, 4) == 0) return read_snapshot_binary(in);
  return read_snapshot_csv(in);
}

}  // namespace chaoskit
