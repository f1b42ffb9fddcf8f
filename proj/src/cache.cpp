#include "crsphere/spectral.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace crs::spectral {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'R', 'R', 'Z'};
constexpr std::size_t kParamCount = 8;

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  std::array<unsigned char, 4> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool get_f64(std::istream& is, double& v) {
  std::array<unsigned char, 8> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  v = std::bit_cast<double>(bits);
  return true;
}

std::vector<double> spec_parameters(const MultiplierSpec& m, int exact_degree) {
  return {static_cast<double>(static_cast<int>(m.kind)), m.delta, m.R, static_cast<double>(m.nu), m.t, m.eps, m.r,
          static_cast<double>(exact_degree)};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string header_bytes(const MultiplierSpec& m, int n, int bandlimit, std::size_t radial, int angular,
                         int exact_degree) {
  std::ostringstream os;
  os.write(kMagic.data(), 4);
  put_u32(os, kCacheVersion);
  put_u32(os, static_cast<std::uint32_t>(n));
  put_u32(os, static_cast<std::uint32_t>(bandlimit));
  put_u32(os, static_cast<std::uint32_t>(radial));
  put_u32(os, static_cast<std::uint32_t>(angular));
  for (double v : spec_parameters(m, exact_degree)) put_f64(os, v);
  return os.str();
}

}  // namespace

std::vector<double> cache_parameters(const KernelProfile& profile) {
  return spec_parameters(profile.multiplier, profile.rule.exact_degree);
}

std::string cache_key(const MultiplierSpec& spec, int n, int bandlimit) {
  const int degree = 2 * bandlimit + 4;
  const ZonalQuadrature probe = zonal_quadrature_sized(n, degree / 4 + 1, degree + 2);
  const std::string header = header_bytes(spec, n, bandlimit, probe.radial_count(), probe.angular_count, degree);
  std::ostringstream name;
  name << spec.name() << "_n" << n << "_B" << bandlimit << "_" << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a(header) << ".crrz";
  return name.str();
}

std::string cache_key(const KernelProfile& profile) {
  return cache_key(profile.multiplier, profile.n, profile.bandlimit);
}

void write_profile(std::ostream& os, const KernelProfile& p) {
  const std::string header =
      header_bytes(p.multiplier, p.n, p.bandlimit, p.rule.radial_count(), p.rule.angular_count, p.rule.exact_degree);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& v : p.grid) {
    put_f64(os, v.real());
    put_f64(os, v.imag());
  }
}

std::optional<KernelProfile> read_profile(std::istream& is) {
  std::array<char, 4> magic;
  if (!is.read(magic.data(), 4) || magic != kMagic) return std::nullopt;
  std::uint32_t version, n, bandlimit, radial, angular;
  if (!get_u32(is, version) || version != kCacheVersion) return std::nullopt;
  if (!get_u32(is, n) || !get_u32(is, bandlimit) || !get_u32(is, radial) || !get_u32(is, angular)) return std::nullopt;
  if (n < 2 || n > 64 || angular == 0 || radial == 0) return std::nullopt;
  std::vector<double> params(kParamCount);
  for (auto& v : params)
    if (!get_f64(is, v)) return std::nullopt;
  const int kind = static_cast<int>(params[0]);
  if (kind < 0 || kind > static_cast<int>(MultiplierKind::hfun)) return std::nullopt;
  KernelProfile p;
  p.n = static_cast<int>(n);
  p.bandlimit = static_cast<int>(bandlimit);
  p.multiplier.kind = static_cast<MultiplierKind>(kind);
  p.multiplier.delta = params[1];
  p.multiplier.R = params[2];
  p.multiplier.nu = static_cast<int>(params[3]);
  p.multiplier.t = params[4];
  p.multiplier.eps = params[5];
  p.multiplier.r = params[6];
  const int degree = static_cast<int>(params[7]);
  if (degree < 0) return std::nullopt;
  try {
    p.rule = zonal_quadrature(p.n, degree);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (p.rule.radial_count() != radial || p.rule.angular_count != static_cast<int>(angular)) return std::nullopt;
  p.grid.resize(static_cast<std::size_t>(radial) * angular);
  for (auto& v : p.grid) {
    double re, im;
    if (!get_f64(is, re) || !get_f64(is, im)) return std::nullopt;
    v = {re, im};
  }
  return p;
}

void store_profile(const std::filesystem::path& path, const KernelProfile& profile) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write cache file " + tmp.string());
    write_profile(os, profile);
    os.flush();
    if (!os) throw std::runtime_error("failed writing cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<KernelProfile> load_profile(const std::filesystem::path& path, std::string* warning) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  const auto size = std::filesystem::file_size(path, ec);
  std::ifstream is(path, std::ios::binary);
  if (ec || !is) {
    if (warning) *warning = "unreadable cache file " + path.string();
    return std::nullopt;
  }
  auto p = read_profile(is);
  if (!p) {
    if (warning) *warning = "corrupt, truncated, or version-mismatched cache file " + path.string();
    return std::nullopt;
  }
  const std::uintmax_t expected = 4 + 5 * 4 + kParamCount * 8 + p->grid.size() * 16;
  if (size != expected) {
    if (warning) *warning = "cache file length mismatch " + path.string();
    return std::nullopt;
  }
  return p;
}

void write_profile_csv(std::ostream& os, const KernelProfile& p) {
  os << "theta,phi,re_K,im_K\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.radial_count(); ++i)
    for (int j = 0; j < p.angular_count(); ++j) {
      const auto& v = p.at(i, j);
      os << p.rule.theta(i) << ',' << p.rule.phi(j) << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

}  // namespace crs::spectral
