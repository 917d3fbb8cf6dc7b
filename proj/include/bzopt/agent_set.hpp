#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace bzopt {

using Agent = std::size_t;

inline constexpr std::size_t kMaxAgents = 64;

/// A set of agent ids in [0, 64), stored as a bitmask.
class AgentSet {
 public:
  constexpr AgentSet() = default;
  constexpr explicit AgentSet(std::uint64_t mask) : mask_(mask) {}
  AgentSet(std::initializer_list<Agent> ids) {
    for (Agent a : ids) insert(a);
  }
  explicit AgentSet(const std::vector<Agent>& ids) {
    for (Agent a : ids) insert(a);
  }

  static constexpr AgentSet range(std::size_t n) {
    return AgentSet(n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
  }

  void insert(Agent a) {
    if (a >= kMaxAgents) throw std::out_of_range("agent id exceeds 63");
    mask_ |= std::uint64_t{1} << a;
  }
  void erase(Agent a) {
    if (a < kMaxAgents) mask_ &= ~(std::uint64_t{1} << a);
  }
  [[nodiscard]] constexpr bool contains(Agent a) const {
    return a < kMaxAgents && ((mask_ >> a) & 1U) != 0;
  }
  [[nodiscard]] constexpr std::size_t size() const {
    return static_cast<std::size_t>(std::popcount(mask_));
  }
  [[nodiscard]] constexpr bool empty() const { return mask_ == 0; }
  [[nodiscard]] constexpr std::uint64_t mask() const { return mask_; }

  [[nodiscard]] constexpr bool is_subset_of(AgentSet other) const {
    return (mask_ & ~other.mask_) == 0;
  }

  [[nodiscard]] std::vector<Agent> to_vector() const {
    std::vector<Agent> out;
    out.reserve(size());
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
      out.push_back(static_cast<Agent>(std::countr_zero(m)));
    }
    return out;
  }

  friend constexpr AgentSet operator|(AgentSet a, AgentSet b) { return AgentSet(a.mask_ | b.mask_); }
  friend constexpr AgentSet operator&(AgentSet a, AgentSet b) { return AgentSet(a.mask_ & b.mask_); }
  /// Set difference.
  friend constexpr AgentSet operator-(AgentSet a, AgentSet b) { return AgentSet(a.mask_ & ~b.mask_); }
  friend constexpr bool operator==(AgentSet a, AgentSet b) = default;

 private:
  std::uint64_t mask_ = 0;
};

}  // namespace bzopt
