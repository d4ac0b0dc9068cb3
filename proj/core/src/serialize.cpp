#include "tms/serialize.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <set>

#include "tms/error.hpp"

namespace tms {
namespace {

constexpr char kMagic[4] = {'T', 'M', 'S', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(Errc::FormatError, "truncated TMS1 file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_tms1(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::FormatError, "cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p->name().size()));
    os.write(p->name().data(), static_cast<std::streamsize>(p->name().size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.rows));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p->value.cols));
    for (double x : p->value.data) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
  }
  if (!os) throw Error(Errc::FormatError, "write failed for " + path.string());
}

std::vector<NamedArray> read_tms1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::FormatError, "cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw Error(Errc::FormatError, path.string() + " is not a TMS1 file");
  }
  const auto count = get_le<std::uint32_t>(is);
  std::vector<NamedArray> out;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw Error(Errc::FormatError, "truncated TMS1 file");
    if (!seen.insert(name).second) throw Error(Errc::FormatError, "duplicate array " + name);
    const auto rows = get_le<std::uint32_t>(is);
    const auto cols = get_le<std::uint32_t>(is);
    Matrix m(rows, cols);
    for (double& x : m.data) x = std::bit_cast<double>(get_le<std::uint64_t>(is));
    out.push_back({std::move(name), std::move(m)});
  }
  return out;
}

}  // namespace tms
