#include "dcast/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "dcast/errors.hpp"

namespace dcast {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'M', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("model file truncated");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw IoError("model file truncated");
  return s;
}

}  // namespace

std::uint64_t fingerprint(const std::string& descriptor) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : descriptor) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_params(const std::string& path, const std::string& kind, std::uint64_t fp,
                 const nn::NetworkParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write model file " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put_string(os, kind);
  put(os, fp);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& s = params.slot(static_cast<int>(i));
    put_string(os, s.name);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.value.rank()));
    for (std::size_t d : s.value.shape()) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(s.value.data()),
             static_cast<std::streamsize>(s.value.size() * sizeof(double)));
  }
  if (!os) throw IoError("short write on model file " + path);
}

void load_params(const std::string& path, const std::string& kind, std::uint64_t fp,
                 nn::NetworkParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read model file " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kMagic, 4))
    throw IoError(path + ": not a model file");
  if (get<std::uint32_t>(is) != kVersion) throw IoError(path + ": unsupported model file version");
  const std::string file_kind = get_string(is);
  if (file_kind != kind)
    throw IoError(path + ": model kind mismatch, file holds '" + file_kind + "', expected '" +
                  kind + "'");
  const auto file_fp = get<std::uint64_t>(is);
  if (file_fp != fp) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx vs expected %016llx",
                  static_cast<unsigned long long>(file_fp), static_cast<unsigned long long>(fp));
    throw IoError(path + ": config fingerprint mismatch, " + buf);
  }
  const auto nslots = get<std::uint32_t>(is);
  if (nslots != params.count()) throw IoError(path + ": slot count mismatch");
  for (std::uint32_t i = 0; i < nslots; ++i) {
    auto& s = params.slot(static_cast<int>(i));
    const std::string name = get_string(is);
    if (name != s.name) throw IoError(path + ": slot name mismatch at '" + name + "'");
    const auto rank = get<std::uint32_t>(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(is));
    if (shape != s.value.shape()) throw IoError(path + ": tensor shape mismatch at '" + name + "'");
    is.read(reinterpret_cast<char*>(s.value.data()),
            static_cast<std::streamsize>(s.value.size() * sizeof(double)));
    if (!is) throw IoError("model file truncated");
  }
}

}  // namespace dcast
