#include "ctbridge/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ctbridge/errors.hpp"

namespace ctbridge {

namespace {

static_assert(std::endian::native == std::endian::little,
              "artifact files are written in native little-endian order");

constexpr std::array<char, 8> kImageMagic{'C', 'T', 'B', 'I', 'M', 'G', '0', '1'};
constexpr std::array<char, 8> kSinoMagic{'C', 'T', 'B', 'S', 'I', 'N', '0', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& p) : path_(p), out_(p, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + p.string() + " for writing");
  }
  template <typename T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed on " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& p) : path_(p), in_(p, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + p.string());
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw IoError("truncated file " + path_.string());
    return v;
  }
  void get_bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) throw IoError("truncated file " + path_.string());
  }
  void expect_magic(const std::array<char, 8>& magic) {
    std::array<char, 8> got{};
    get_bytes(got.data(), got.size());
    if (got != magic) throw IoError("bad magic in " + path_.string());
  }
  void expect_end() {
    in_.peek();
    if (!in_.eof()) throw IoError("trailing bytes in " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw IoError(std::string(what) + " too large for file format");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_image(const std::filesystem::path& path, const ImageGrid& x) {
  Writer w(path);
  w.put_bytes(kImageMagic.data(), kImageMagic.size());
  w.put(checked_u32(x.height(), "height"));
  w.put(checked_u32(x.width(), "width"));
  w.put(x.pixel_size());
  w.put_bytes(reinterpret_cast<const char*>(x.data().data()), x.size() * sizeof(double));
  w.finish();
}

ImageGrid read_image(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kImageMagic);
  const auto h = r.get<std::uint32_t>();
  const auto wd = r.get<std::uint32_t>();
  const auto px = r.get<double>();
  std::vector<double> v(static_cast<std::size_t>(h) * wd);
  r.get_bytes(reinterpret_cast<char*>(v.data()), v.size() * sizeof(double));
  r.expect_end();
  return ImageGrid(h, wd, px, std::move(v));
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& y) {
  Writer w(path);
  w.put_bytes(kSinoMagic.data(), kSinoMagic.size());
  w.put(static_cast<std::uint32_t>(y.mask.kind));
  w.put(checked_u32(y.n_views(), "view count"));
  w.put(checked_u32(y.n_detectors(), "detector count"));
  for (std::size_t v : y.mask.kept_views) w.put(checked_u32(v, "view index"));
  for (int d : y.mask.kept_detectors) w.put(static_cast<std::int32_t>(d));
  w.put_bytes(reinterpret_cast<const char*>(y.values.data()),
              y.values.size() * sizeof(double));
  w.finish();
}

Sinogram read_sinogram(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic(kSinoMagic);
  IncompletenessMask m;
  const auto kind = r.get<std::uint32_t>();
  if (kind > static_cast<std::uint32_t>(Incompleteness::truncated)) {
    throw IoError("unknown incompleteness kind in " + path.string());
  }
  m.kind = static_cast<Incompleteness>(kind);
  const auto nv = r.get<std::uint32_t>();
  const auto nd = r.get<std::uint32_t>();
  m.kept_views.resize(nv);
  for (auto& v : m.kept_views) v = r.get<std::uint32_t>();
  m.kept_detectors.resize(nd);
  for (auto& d : m.kept_detectors) d = r.get<std::int32_t>();
  std::vector<double> values(static_cast<std::size_t>(nv) * nd);
  r.get_bytes(reinterpret_cast<char*>(values.data()), values.size() * sizeof(double));
  r.expect_end();
  return Sinogram(std::move(m), std::move(values));
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& x, double lo,
               double hi) {
  if (!(hi > lo)) throw DomainError("write_pgm: empty display window");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << x.width() << ' ' << x.height() << "\n255\n";
  std::vector<unsigned char> bytes(x.size());
  const auto v = x.values();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double f = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(255.0 * f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace ctbridge
