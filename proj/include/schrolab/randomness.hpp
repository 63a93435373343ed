#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace schrolab {

// (master_seed, stream_id) addresses an independent stream. Everything random
// in the library is a pure function of one or more SeedSpecs.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

enum class OmegaKind { gaussian, rademacher };

OmegaKind parse_omega_kind(std::string_view name);
std::string_view to_string(OmegaKind kind);

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

// Purpose tags keep the variates used for different jobs (potential, tape
// channels, bridge refinement, shifts) disjoint for the same SeedSpec.
namespace purpose {
inline constexpr std::uint32_t omega = 0x10;
inline constexpr std::uint32_t tape_base = 0x100;  // + channel index
inline constexpr std::uint32_t bridge_base = 0x200;  // + refinement level * 8 + channel
inline constexpr std::uint32_t uniform_shift = 0x400;
inline constexpr std::uint32_t inverse_iteration = 0x500;
inline constexpr std::uint32_t limit_law = 0x600;
}  // namespace purpose

// Counter-based variate source. The i-th variate of a (seed, purpose) stream
// is computed directly; nothing is carried between calls.
class VariateStream {
 public:
  VariateStream(SeedSpec seed, std::uint32_t purpose) noexcept;

  // Uniform on the open interval (0, 1), 53 bits.
  double uniform(std::uint64_t index) const noexcept;
  double normal(std::uint64_t index) const noexcept;

  // out[j] = scale * normal(first + j).
  void fill_normal(std::span<double> out, double scale = 1.0,
                   std::uint64_t first = 0) const noexcept;

 private:
  Philox4x32::Counter raw(std::uint64_t block) const noexcept;

  Philox4x32::Key key_;
  std::uint32_t purpose_;
  std::uint64_t stream_;
};

// i.i.d. mean-zero, unit-variance potential variables.
std::vector<double> sample_omega(OmegaKind kind, SeedSpec seed, std::size_t count);

enum class Channel : std::uint8_t { B = 0, B1 = 1, B2 = 2, B3 = 3 };
inline constexpr std::size_t kChannelCount = 4;

std::string_view to_string(Channel c);

class ChannelSet {
 public:
  constexpr ChannelSet() = default;
  constexpr ChannelSet(std::initializer_list<Channel> cs) {
    for (Channel c : cs) bits_ |= bit(c);
  }
  constexpr bool contains(Channel c) const { return (bits_ & bit(c)) != 0; }
  constexpr ChannelSet with(Channel c) const {
    ChannelSet s = *this;
    s.bits_ |= bit(c);
    return s;
  }
  constexpr bool empty() const { return bits_ == 0; }
  friend constexpr bool operator==(ChannelSet, ChannelSet) = default;

  static constexpr ChannelSet critical() { return {Channel::B, Channel::B2, Channel::B3}; }
  static constexpr ChannelSet all() {
    return {Channel::B, Channel::B1, Channel::B2, Channel::B3};
  }

 private:
  static constexpr std::uint8_t bit(Channel c) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
  }
  std::uint8_t bits_ = 0;
};

class NoiseTape;

// Read-only window [offset, offset + steps) into a tape's increments.
class TapeView {
 public:
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return steps_; }
  double duration() const noexcept { return dt_ * static_cast<double>(steps_); }
  bool has(Channel c) const noexcept;
  ChannelSet channels() const noexcept;

  // Throws std::out_of_range if the channel was not recorded.
  std::span<const double> channel(Channel c) const;

  // Sub-window in time units relative to this view; bounds must fall on step
  // boundaries.
  TapeView slice(double t0, double t1) const;

 private:
  friend class NoiseTape;
  struct Storage;
  TapeView(std::shared_ptr<const Storage> data, double dt, std::size_t offset,
           std::size_t steps) noexcept
      : data_(std::move(data)), dt_(dt), offset_(offset), steps_(steps) {}

  std::shared_ptr<const Storage> data_;
  double dt_ = 0.0;
  std::size_t offset_ = 0;
  std::size_t steps_ = 0;
};

// Immutable record of Brownian increments, each channel ~ Normal(0, dt) per
// step. Copies share storage.
class NoiseTape {
 public:
  // Throws std::invalid_argument for dt <= 0, steps == 0 or no channels.
  static NoiseTape make(SeedSpec seed, double dt, std::size_t steps, ChannelSet channels);

  // All increments zero; deterministic flows for testing.
  static NoiseTape zero(double dt, std::size_t steps, ChannelSet channels);

  // Wraps caller-provided increments. Every span must have the same length.
  static NoiseTape from_increments(
      double dt, std::span<const std::pair<Channel, std::vector<double>>> increments);

  double dt() const noexcept { return view_.dt(); }
  std::size_t steps() const noexcept { return view_.steps(); }
  double duration() const noexcept { return view_.duration(); }
  bool has(Channel c) const noexcept { return view_.has(c); }
  ChannelSet channels() const noexcept { return view_.channels(); }
  std::span<const double> channel(Channel c) const { return view_.channel(c); }

  const TapeView& view() const noexcept { return view_; }
  operator const TapeView&() const noexcept { return view_; }

  TapeView slice(double t0, double t1) const { return view_.slice(t0, t1); }

  // Same Brownian path sampled at 2*dt: consecutive increments summed.
  // Requires an even step count.
  NoiseTape coarsened() const;

  // Same Brownian path sampled at dt/2, midpoints drawn from the Brownian
  // bridge. Deterministic: the bridge variates come from the tape's own seed,
  // so refining the same tape twice gives identical results.
  NoiseTape refined() const;

 private:
  explicit NoiseTape(TapeView v) : view_(std::move(v)) {}
  TapeView view_;
};

}  // namespace schrolab
