// SPDX-License-Identifier: Apache-2.0
#include "sagc/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "binary_io.hpp"
#include "sagc/errors.hpp"

namespace sagc {
namespace {

constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Quarter turn counter-clockwise of every slice; H and W swap.
Volume rotate_once(const Volume& v) {
  Volume out = v;
  out.height = v.width;
  out.width = v.height;
  for (std::size_t z = 0; z < v.depth; ++z) {
    const float* src = v.data.data() + z * v.slice_size();
    float* dst = out.data.data() + z * v.slice_size();
    for (std::size_t y = 0; y < v.height; ++y)
      for (std::size_t x = 0; x < v.width; ++x) dst[(v.width - 1 - x) * out.width + y] = src[y * v.width + x];
  }
  return out;
}

Volume flip_once(const Volume& v) {
  Volume out = v;
  for (std::size_t z = 0; z < v.depth; ++z)
    for (std::size_t y = 0; y < v.height; ++y) {
      float* row = out.data.data() + z * v.slice_size() + y * v.width;
      std::reverse(row, row + v.width);
    }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  return splitmix64(h ^ (c + 0x85157AF5ULL));
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ContractError("uniform_index over an empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound + 1) % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r > limit);
  return static_cast<std::size_t>(r % bound);
}

double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Volume Volume::complete(std::size_t depth, std::size_t height, std::size_t width, std::vector<float> data) {
  Volume v;
  v.depth = depth;
  v.height = height;
  v.width = width;
  v.data = std::move(data);
  v.slice_mask.assign(depth, 1);
  v.pad_mask.assign(depth, 0);
  v.validate();
  return v;
}

std::size_t Volume::n_slices() const {
  return depth - static_cast<std::size_t>(std::count(pad_mask.begin(), pad_mask.end(), std::uint8_t{1}));
}

std::size_t Volume::n_available() const {
  std::size_t m = 0;
  for (std::size_t i = 0; i < depth; ++i) m += (!pad_mask[i] && slice_mask[i]) ? 1 : 0;
  return m;
}

std::vector<std::size_t> Volume::available_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < depth; ++i)
    if (!pad_mask[i] && slice_mask[i]) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> Volume::missing_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < depth; ++i)
    if (is_missing(i)) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> Volume::real_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < depth; ++i)
    if (!pad_mask[i]) idx.push_back(i);
  return idx;
}

void Volume::set_mask(std::span<const std::uint8_t> mask) {
  const auto real = real_indices();
  if (mask.size() != real.size()) {
    throw ShapeError("mask has " + std::to_string(mask.size()) + " entries for " + std::to_string(real.size()) +
                     " slices");
  }
  for (std::size_t i = 0; i < real.size(); ++i) slice_mask[real[i]] = mask[i] ? 1 : 0;
}

void Volume::validate() const {
  if (depth == 0 || height == 0 || width == 0) throw ShapeError("volume has a zero dimension");
  if (data.size() != depth * height * width || slice_mask.size() != depth || pad_mask.size() != depth) {
    throw ShapeError("volume buffers disagree with dimensions " + std::to_string(depth) + "x" + std::to_string(height) +
                     "x" + std::to_string(width));
  }
}

std::size_t missing_count(std::size_t n_slices, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) {
    throw ConfigError("missing rate eta must lie in [0, 1), got " + std::to_string(eta));
  }
  // Round half up; the guard absorbs representation error in eta (0.7*15).
  const auto p = static_cast<std::size_t>(std::floor(eta * static_cast<double>(n_slices) + 0.5 + 1e-9));
  if (p >= n_slices) {
    throw ConfigError("eta=" + std::to_string(eta) + " leaves no available slice out of " + std::to_string(n_slices));
  }
  return p;
}

std::vector<std::uint8_t> sample_missing_mask(std::size_t n_slices, double eta, Rng& rng) {
  const std::size_t p = missing_count(n_slices, eta);
  std::vector<std::size_t> order(n_slices);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first p entries are a uniform p-subset.
  for (std::size_t i = 0; i < p; ++i) std::swap(order[i], order[i + uniform_index(rng, n_slices - i)]);
  std::vector<std::uint8_t> mask(n_slices, 1);
  for (std::size_t i = 0; i < p; ++i) mask[order[i]] = 0;
  return mask;
}

std::vector<std::uint8_t> sample_missing_mask(std::size_t n_slices, const MissingSpec& spec) {
  Rng rng(spec.rng_seed);
  return sample_missing_mask(n_slices, spec.eta, rng);
}

Normalized minmax_normalize(std::span<const double> raw) {
  if (raw.empty()) throw DegenerateInputError("minmax_normalize of an empty grid");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  if (!(*hi > *lo)) throw DegenerateInputError("minmax_normalize of a constant volume");
  Normalized out;
  out.range = {*lo, *hi};
  out.values.resize(raw.size());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = 2.0 * (raw[i] - *lo) / span - 1.0;
  return out;
}

std::vector<double> denormalize(std::span<const double> normalized, IntensityRange range) {
  std::vector<double> out(normalized.size());
  const double span = range.max - range.min;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (normalized[i] + 1.0) * 0.5 * span + range.min;
  return out;
}

Volume zero_pad(const Volume& v, std::size_t target_depth) {
  if (target_depth < v.depth) {
    throw ContractError("zero_pad target " + std::to_string(target_depth) + " is below depth " +
                        std::to_string(v.depth));
  }
  Volume out = v;
  out.depth = target_depth;
  out.data.resize(target_depth * v.slice_size(), 0.0f);
  out.slice_mask.resize(target_depth, 0);
  out.pad_mask.resize(target_depth, 1);
  return out;
}

Augmentation draw_augmentation(Rng& rng, std::size_t height, std::size_t width) {
  Augmentation a;
  a.flip = uniform_unit(rng) < 0.5;
  if (uniform_unit(rng) < 0.5) {
    a.rotations = static_cast<unsigned>(uniform_index(rng, 4));
    if (height != width) a.rotations &= 2u;
  }
  return a;
}

Volume apply_augmentation(const Volume& v, const Augmentation& aug) {
  Volume out = aug.flip ? flip_once(v) : v;
  for (unsigned k = 0; k < aug.rotations % 4; ++k) out = rotate_once(out);
  return out;
}

Volume augment(const Volume& v, Rng& rng) { return apply_augmentation(v, draw_augmentation(rng, v.height, v.width)); }

std::vector<double> phantom_raw(const PhantomParams& p) {
  if (p.n_slices == 0 || p.height == 0 || p.width == 0) throw ConfigError("phantom dimensions must be positive");
  if (!(p.smoothness > 0)) throw ConfigError("phantom smoothness must be positive");
  Rng rng(derive_seed(p.seed, 0x5048414EULL));
  auto unit = [&](double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); };

  struct Blob {
    double amp, cx, cy, vx, vy, wobble, freq, phase, radius, radius_mod, radius_phase, cz, sz;
  };
  const double H = static_cast<double>(p.height), W = static_cast<double>(p.width);
  const double extent = std::min(H, W);
  std::vector<Blob> blobs(p.n_blobs);
  for (auto& b : blobs) {
    b.amp = unit(0.4, 1.0);
    b.cx = unit(0.2, 0.8) * W;
    b.cy = unit(0.2, 0.8) * H;
    b.vx = unit(-0.08, 0.08) * extent / p.smoothness;
    b.vy = unit(-0.08, 0.08) * extent / p.smoothness;
    b.wobble = unit(0.0, 0.06) * extent;
    b.freq = unit(0.5, 1.2) / p.smoothness;
    b.phase = unit(0.0, 2 * std::numbers::pi);
    b.radius = unit(0.07, 0.18) * extent;
    b.radius_mod = unit(0.1, 0.35);
    b.radius_phase = unit(0.0, 2 * std::numbers::pi);
    b.cz = unit(0.0, static_cast<double>(p.n_slices - 1));
    b.sz = p.smoothness * unit(1.0, 2.0);
  }

  std::vector<double> out(p.n_slices * p.height * p.width, 0.0);
  for (std::size_t z = 0; z < p.n_slices; ++z) {
    const double zf = static_cast<double>(z);
    for (const auto& b : blobs) {
      const double cx = b.cx + b.vx * zf + b.wobble * std::sin(b.freq * zf + b.phase);
      const double cy = b.cy + b.vy * zf + b.wobble * std::cos(b.freq * zf + b.phase);
      const double r = b.radius * (1.0 + b.radius_mod * std::sin(b.freq * zf + b.radius_phase));
      const double dz = (zf - b.cz) / b.sz;
      const double a = b.amp * std::exp(-0.5 * dz * dz);
      const double inv2r2 = 1.0 / (2.0 * r * r);
      for (std::size_t y = 0; y < p.height; ++y)
        for (std::size_t x = 0; x < p.width; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          out[(z * p.height + y) * p.width + x] += a * std::exp(-(dx * dx + dy * dy) * inv2r2);
        }
    }
  }
  return out;
}

Volume phantom_generate(const PhantomParams& p) {
  const auto norm = minmax_normalize(phantom_raw(p));
  std::vector<float> data(norm.values.begin(), norm.values.end());
  return Volume::complete(p.n_slices, p.height, p.width, std::move(data));
}

double mean_adjacent_correlation(const Volume& v) {
  const auto real = v.real_indices();
  if (real.size() < 2) return 1.0;
  double total = 0;
  for (std::size_t q = 0; q + 1 < real.size(); ++q) {
    const auto a = v.slice(real[q]);
    const auto b = v.slice(real[q + 1]);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    total += (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : 0.0;
  }
  return total / static_cast<double>(real.size() - 1);
}

std::vector<std::uint8_t> encode_volume(const Volume& v) {
  v.validate();
  detail::ByteWriter w;
  w.magic("SGCV");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(v.depth));
  w.u32(static_cast<std::uint32_t>(v.height));
  w.u32(static_cast<std::uint32_t>(v.width));
  for (float x : v.data) w.f32(x);
  return w.take();
}

Volume decode_volume(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("SGCV");
  const std::size_t version_at = r.offset();
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported volume version " + std::to_string(version) + " (expected 1)", version_at);
  }
  const std::size_t n = r.u32(), h = r.u32(), w = r.u32();
  if (n == 0 || h == 0 || w == 0) throw FormatError("volume header has a zero dimension", r.offset());
  const std::size_t count = n * h * w;
  if (r.remaining() < count * 4) {
    throw FormatError("truncated volume payload: header promises " + std::to_string(count) + " f32 values, found " +
                          std::to_string(r.remaining()) + " bytes",
                      r.offset());
  }
  std::vector<float> data(count);
  for (auto& x : data) x = r.f32();
  if (r.remaining() != 0) {
    throw FormatError("volume payload longer than header N*H*W (" + std::to_string(r.remaining()) + " extra bytes)",
                      r.offset());
  }
  return Volume::complete(n, h, w, std::move(data));
}

std::vector<std::uint8_t> encode_mask(std::span<const std::uint8_t> mask) {
  detail::ByteWriter w;
  w.magic("SGCM");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(mask.size()));
  for (auto m : mask) w.u8(m ? 1 : 0);
  return w.take();
}

std::vector<std::uint8_t> decode_mask(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("SGCM");
  const std::size_t version_at = r.offset();
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported mask version " + std::to_string(version) + " (expected 1)", version_at);
  }
  const std::size_t n = r.u32();
  if (r.remaining() < n) {
    throw FormatError("truncated mask payload: header promises " + std::to_string(n) + " bytes, found " +
                          std::to_string(r.remaining()),
                      r.offset());
  }
  std::vector<std::uint8_t> mask(n);
  for (auto& m : mask) {
    const std::size_t at = r.offset();
    m = r.u8();
    if (m > 1) throw FormatError("mask byte must be 0 or 1, got " + std::to_string(m), at);
  }
  if (r.remaining() != 0) throw FormatError("mask payload longer than header N", r.offset());
  return mask;
}

void save_volume(const std::filesystem::path& path, const Volume& v) { detail::write_file(path, encode_volume(v)); }

Volume load_volume(const std::filesystem::path& path) { return decode_volume(detail::read_file(path)); }

void save_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask) {
  detail::write_file(path, encode_mask(mask));
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path) { return decode_mask(detail::read_file(path)); }

}  // namespace sagc
