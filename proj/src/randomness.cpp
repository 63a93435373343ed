#include "schrolab/randomness.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace schrolab {

OmegaKind parse_omega_kind(std::string_view name) {
  if (name == "gaussian") return OmegaKind::gaussian;
  if (name == "rademacher") return OmegaKind::rademacher;
  throw std::invalid_argument("unknown omega kind: " + std::string(name));
}

std::string_view to_string(OmegaKind kind) {
  return kind == OmegaKind::gaussian ? "gaussian" : "rademacher";
}

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::B: return "B";
    case Channel::B1: return "B1";
    case Channel::B2: return "B2";
    case Channel::B3: return "B3";
  }
  return "?";
}

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

VariateStream::VariateStream(SeedSpec seed, std::uint32_t purpose) noexcept
    : key_{static_cast<std::uint32_t>(seed.master_seed),
           static_cast<std::uint32_t>(seed.master_seed >> 32)},
      purpose_(purpose),
      stream_(seed.stream_id) {}

Philox4x32::Counter VariateStream::raw(std::uint64_t block) const noexcept {
  // High block bits share a word with the purpose tag (tags stay below 2^16).
  const Philox4x32::Counter ctr{
      static_cast<std::uint32_t>(block),
      purpose_ ^ (static_cast<std::uint32_t>(block >> 32) << 16),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  return Philox4x32::block(ctr, key_);
}

double VariateStream::uniform(std::uint64_t index) const noexcept {
  const auto r = raw(index);
  return to_open_unit(r[0], r[1]);
}

namespace {
// Box-Muller on one Philox block.
inline void normal_pair(const Philox4x32::Counter& r, double& a, double& b) {
  const double u1 = to_open_unit(r[0], r[1]);
  const double u2 = to_open_unit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  a = rad * std::cos(ang);
  b = rad * std::sin(ang);
}
}  // namespace

double VariateStream::normal(std::uint64_t index) const noexcept {
  double a, b;
  normal_pair(raw(index >> 1), a, b);
  return (index & 1u) ? b : a;
}

void VariateStream::fill_normal(std::span<double> out, double scale,
                                std::uint64_t first) const noexcept {
  std::size_t j = 0;
  std::uint64_t idx = first;
  if ((idx & 1u) && j < out.size()) {
    out[j++] = scale * normal(idx++);
  }
  for (; j + 1 < out.size(); j += 2, idx += 2) {
    double a, b;
    normal_pair(raw(idx >> 1), a, b);
    out[j] = scale * a;
    out[j + 1] = scale * b;
  }
  if (j < out.size()) out[j] = scale * normal(idx);
}

std::vector<double> sample_omega(OmegaKind kind, SeedSpec seed, std::size_t count) {
  std::vector<double> out(count);
  VariateStream vs(seed, purpose::omega);
  if (kind == OmegaKind::gaussian) {
    vs.fill_normal(out);
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = vs.uniform(i) < 0.5 ? -1.0 : 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TapeView::Storage {
  std::array<std::vector<double>, kChannelCount> data;
  ChannelSet present;
  SeedSpec seed;
  std::uint32_t level = 0;  // number of refinements applied
  bool zero = false;
};

bool TapeView::has(Channel c) const noexcept { return data_ && data_->present.contains(c); }

ChannelSet TapeView::channels() const noexcept { return data_ ? data_->present : ChannelSet{}; }

std::span<const double> TapeView::channel(Channel c) const {
  if (!has(c)) throw std::out_of_range("tape has no channel " + std::string(to_string(c)));
  const auto& v = data_->data[static_cast<std::size_t>(c)];
  return std::span<const double>(v).subspan(offset_, steps_);
}

TapeView TapeView::slice(double t0, double t1) const {
  if (!(t0 >= 0.0) || !(t1 > t0) || t1 > duration() * (1.0 + 1e-12)) {
    throw std::invalid_argument("tape slice out of range");
  }
  const double k0 = t0 / dt_;
  const double k1 = t1 / dt_;
  const double r0 = std::round(k0);
  const double r1 = std::round(k1);
  if (std::abs(k0 - r0) > 1e-9 * std::max(1.0, r0) || std::abs(k1 - r1) > 1e-9 * std::max(1.0, r1)) {
    throw std::invalid_argument("tape slice bounds not on step boundaries");
  }
  const auto i0 = static_cast<std::size_t>(r0);
  const auto i1 = static_cast<std::size_t>(r1);
  if (i1 > steps_ || i1 <= i0) throw std::invalid_argument("tape slice out of range");
  return TapeView(data_, dt_, offset_ + i0, i1 - i0);
}

namespace {
void check_shape(double dt, std::size_t steps, ChannelSet channels) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("tape dt must be positive");
  if (steps == 0) throw std::invalid_argument("tape needs at least one step");
  if (channels.empty()) throw std::invalid_argument("tape needs at least one channel");
}

constexpr std::array<Channel, kChannelCount> kAllChannels{Channel::B, Channel::B1, Channel::B2,
                                                         Channel::B3};
}  // namespace

NoiseTape NoiseTape::make(SeedSpec seed, double dt, std::size_t steps, ChannelSet channels) {
  check_shape(dt, steps, channels);
  auto st = std::make_shared<TapeView::Storage>();
  st->present = channels;
  st->seed = seed;
  const double scale = std::sqrt(dt);
  for (Channel c : kAllChannels) {
    if (!channels.contains(c)) continue;
    auto& v = st->data[static_cast<std::size_t>(c)];
    v.resize(steps);
    VariateStream(seed, purpose::tape_base + static_cast<std::uint32_t>(c)).fill_normal(v, scale);
  }
  return NoiseTape(TapeView(std::move(st), dt, 0, steps));
}

NoiseTape NoiseTape::zero(double dt, std::size_t steps, ChannelSet channels) {
  check_shape(dt, steps, channels);
  auto st = std::make_shared<TapeView::Storage>();
  st->present = channels;
  st->zero = true;
  for (Channel c : kAllChannels) {
    if (channels.contains(c)) st->data[static_cast<std::size_t>(c)].assign(steps, 0.0);
  }
  return NoiseTape(TapeView(std::move(st), dt, 0, steps));
}

NoiseTape NoiseTape::from_increments(
    double dt, std::span<const std::pair<Channel, std::vector<double>>> increments) {
  if (increments.empty()) throw std::invalid_argument("tape needs at least one channel");
  const std::size_t steps = increments.front().second.size();
  ChannelSet cs;
  auto st = std::make_shared<TapeView::Storage>();
  for (const auto& [c, v] : increments) {
    if (v.size() != steps) throw std::invalid_argument("tape channels differ in length");
    if (cs.contains(c)) throw std::invalid_argument("duplicate tape channel");
    cs = cs.with(c);
    st->data[static_cast<std::size_t>(c)] = v;
  }
  check_shape(dt, steps, cs);
  st->present = cs;
  return NoiseTape(TapeView(std::move(st), dt, 0, steps));
}

NoiseTape NoiseTape::coarsened() const {
  const std::size_t n = steps();
  if (n % 2 != 0) throw std::invalid_argument("coarsening needs an even step count");
  auto st = std::make_shared<TapeView::Storage>();
  const auto& src = *view_.data_;
  st->present = src.present;
  st->seed = src.seed;
  st->zero = src.zero;
  st->level = src.level;
  for (Channel c : kAllChannels) {
    if (!src.present.contains(c)) continue;
    auto in = channel(c);
    auto& out = st->data[static_cast<std::size_t>(c)];
    out.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) out[k] = in[2 * k] + in[2 * k + 1];
  }
  return NoiseTape(TapeView(std::move(st), 2.0 * dt(), 0, n / 2));
}

NoiseTape NoiseTape::refined() const {
  const std::size_t n = steps();
  const auto& src = *view_.data_;
  auto st = std::make_shared<TapeView::Storage>();
  st->present = src.present;
  st->seed = src.seed;
  st->zero = src.zero;
  st->level = src.level + 1;
  // Given W(t+dt) - W(t) = d, the midpoint increment is d/2 + N(0, dt/4).
  const double half_sd = 0.5 * std::sqrt(dt());
  for (Channel c : kAllChannels) {
    if (!src.present.contains(c)) continue;
    auto in = channel(c);
    auto& out = st->data[static_cast<std::size_t>(c)];
    out.resize(2 * n);
    if (src.zero) continue;
    VariateStream vs(src.seed, purpose::bridge_base + 8u * src.level + static_cast<std::uint32_t>(c));
    std::vector<double> z(n);
    vs.fill_normal(z, half_sd, view_.offset_);
    for (std::size_t k = 0; k < n; ++k) {
      const double a = 0.5 * in[k] + z[k];
      out[2 * k] = a;
      out[2 * k + 1] = in[k] - a;
    }
  }
  return NoiseTape(TapeView(std::move(st), 0.5 * dt(), 0, 2 * n));
}

}  // namespace schrolab
