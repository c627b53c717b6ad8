#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <utility>

namespace peerbargain {

/// Premium-quality services per (ISP, CSP) pair, keyed by dataset indices.
/// Entries only ever grow.
class PeeringLedger {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;  // (isp, csp)

  bool has(std::size_t isp, std::size_t csp, std::size_t service) const;
  bool has_any(std::size_t isp, std::size_t csp) const;
  const std::set<std::size_t>& services(std::size_t isp, std::size_t csp) const;

  void add(std::size_t isp, std::size_t csp, std::size_t service);

  const std::map<Pair, std::set<std::size_t>>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  bool operator==(const PeeringLedger&) const = default;

 private:
  std::map<Pair, std::set<std::size_t>> entries_;
};

}  // namespace peerbargain
