#include "pcf/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "pcf/errors.hpp"

namespace pcf {

static_assert(std::endian::native == std::endian::little, "PCF1 snapshots assume a little-endian host");

namespace {

constexpr std::size_t kHeaderBytes = 64;

template <typename T>
void put(unsigned char* buf, std::size_t offset, T value) {
  std::memcpy(buf + offset, &value, sizeof(T));
}

template <typename T>
T get(const unsigned char* buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf + offset, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  unsigned char header[kHeaderBytes] = {};
  std::memcpy(header, "PCF1", 4);
  put<std::uint32_t>(header, 4, snap.backend == Backend::TorusPeriodic ? 0u : 1u);
  put<std::uint32_t>(header, 8, static_cast<std::uint32_t>(snap.complex_dim));
  put<std::uint32_t>(header, 12, static_cast<std::uint32_t>(snap.resolution));
  put<std::uint64_t>(header, 16, snap.values.size());
  put<double>(header, 24, snap.t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header), kHeaderBytes);
  out.write(reinterpret_cast<const char*>(snap.values.data()),
            static_cast<std::streamsize>(snap.values.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char header[kHeaderBytes];
  if (!in.read(reinterpret_cast<char*>(header), kHeaderBytes)) throw IoError(path.string() + ": truncated header");
  if (std::memcmp(header, "PCF1", 4) != 0) throw IoError(path.string() + ": not a PCF1 snapshot");
  Snapshot snap;
  const auto code = get<std::uint32_t>(header, 4);
  if (code > 1) throw IoError(path.string() + ": unknown backend code " + std::to_string(code));
  snap.backend = code == 0 ? Backend::TorusPeriodic : Backend::SphereAxisymmetric;
  snap.complex_dim = static_cast<int>(get<std::uint32_t>(header, 8));
  snap.resolution = static_cast<int>(get<std::uint32_t>(header, 12));
  const auto count = get<std::uint64_t>(header, 16);
  snap.t = get<double>(header, 24);
  snap.values.resize(count);
  if (!in.read(reinterpret_cast<char*>(snap.values.data()), static_cast<std::streamsize>(count * sizeof(double))))
    throw IoError(path.string() + ": truncated payload");
  return snap;
}

Snapshot make_snapshot(const ScalarField& phi, double t) {
  const auto& spec = phi.grid()->spec();
  Snapshot snap;
  snap.backend = spec.backend;
  snap.complex_dim = spec.complex_dim;
  snap.resolution = spec.resolution;
  snap.t = t;
  snap.values.assign(phi.values().begin(), phi.values().end());
  return snap;
}

MetricState load_state(const Snapshot& snap, const BackgroundPtr& bg) {
  const auto& spec = bg->grid->spec();
  if (snap.backend != spec.backend || snap.complex_dim != spec.complex_dim || snap.resolution != spec.resolution ||
      snap.values.size() != bg->grid->size())
    throw IoError("snapshot grid does not match the background grid");
  return assemble_state(bg, ScalarField(bg->grid, snap.values), bg->descriptor.eps_pos);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string diagnostics_header() {
  std::string line;
  for (std::size_t k = 0; k < kDiagnosticsColumns.size(); ++k) {
    if (k) line += ',';
    line += kDiagnosticsColumns[k];
  }
  return line;
}

std::array<double, kDiagnosticsColumns.size()> diagnostics_values(const DiagnosticsRecord& r) {
  return {r.t,       r.dt,          r.volume,        r.sbar_check,
          r.k_energy, r.dissipation, r.calabi_energy, r.mu0,
          r.mu1,     r.mu2,         r.i_value,       r.sup_h,
          r.inf_h,   r.osc_phi,     r.max_n_plus_lap_phi, r.ricci_min,
          r.ricci_max, r.margin,    r.futaki,        static_cast<double>(r.p_iterations),
          static_cast<double>(r.f_iterations)};
}

std::string diagnostics_row(const DiagnosticsRecord& r) {
  std::string line;
  for (double v : diagnostics_values(r)) {
    if (!line.empty()) line += ',';
    line += format_double(v);
  }
  return line;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& rows) {
  out << diagnostics_header() << '\n';
  for (const auto& r : rows) out << diagnostics_row(r) << '\n';
}

}  // namespace pcf
