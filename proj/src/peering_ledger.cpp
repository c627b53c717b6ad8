#include "peerbargain/peering_ledger.hpp"

namespace peerbargain {

namespace {
const std::set<std::size_t> kEmpty;
}

bool PeeringLedger::has(std::size_t isp, std::size_t csp, std::size_t service) const {
  auto it = entries_.find({isp, csp});
  return it != entries_.end() && it->second.contains(service);
}

bool PeeringLedger::has_any(std::size_t isp, std::size_t csp) const {
  auto it = entries_.find({isp, csp});
  return it != entries_.end() && !it->second.empty();
}

const std::set<std::size_t>& PeeringLedger::services(std::size_t isp, std::size_t csp) const {
  auto it = entries_.find({isp, csp});
  return it == entries_.end() ? kEmpty : it->second;
}

void PeeringLedger::add(std::size_t isp, std::size_t csp, std::size_t service) {
  entries_[{isp, csp}].insert(service);
}

}  // namespace peerbargain
