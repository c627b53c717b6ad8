#include "peerbargain/market_model.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "peerbargain/error.hpp"

namespace peerbargain {

double snap_count(double value) {
  return std::nearbyint(value / kCountResolution) * kCountResolution;
}

double ContentProvider::share(std::string_view service) const {
  auto it = service_shares.find(std::string(service));
  return it == service_shares.end() ? 0.0 : it->second;
}

namespace {

template <typename T>
std::optional<std::size_t> find_by_id(const std::vector<T>& items, std::string_view id) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return i;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> Market::find_service(std::string_view id) const { return find_by_id(services, id); }
std::optional<std::size_t> Market::find_isp(std::string_view id) const { return find_by_id(isps, id); }
std::optional<std::size_t> Market::find_csp(std::string_view id) const { return find_by_id(csps, id); }

std::size_t Market::service_index(std::string_view id) const {
  if (auto i = find_service(id)) return *i;
  throw ModelError("unknown service '" + std::string(id) + "'");
}

std::size_t Market::isp_index(std::string_view id) const {
  if (auto i = find_isp(id)) return *i;
  throw ModelError("unknown isp '" + std::string(id) + "'");
}

std::size_t Market::csp_index(std::string_view id) const {
  if (auto i = find_csp(id)) return *i;
  throw ModelError("unknown csp '" + std::string(id) + "'");
}

RevenueTerms Market::revenue_terms(std::size_t csp, std::size_t service) const {
  const ServiceSpec& s = services.at(service);
  const auto& overrides = csps.at(csp).revenue_overrides;
  if (auto it = overrides.find(s.id); it != overrides.end()) return it->second;
  return RevenueTerms{s.subscription_usd_per_month, s.post_subscription_usd_per_month, s.ad_rate_usd_per_min,
                      s.post_ad_rate_usd_per_min};
}

// --- TypeSpace -------------------------------------------------------------

std::optional<std::size_t> TypeSpace::slot_of(std::size_t service, std::size_t csp) const {
  const auto& s = slots_.at(service);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k].csp == csp) return k;
  }
  return std::nullopt;
}

std::size_t TypeSpace::type_index(std::size_t preferred, std::span<const std::size_t> slot_vector) const {
  std::size_t index = preferred * combinations_;
  for (std::size_t k = 0; k < slot_vector.size(); ++k) index += slot_vector[k] * strides_[k];
  return index;
}

CustomerType TypeSpace::describe(const Market& market, std::size_t isp, std::size_t type) const {
  CustomerType out;
  out.isp = market.isps.at(isp).id;
  out.preferred_service = market.services.at(preferred(type)).id;
  out.providers.reserve(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const Slot& s = slots_[k][slot(type, k)];
    out.providers.emplace_back(market.services[k].id, s.csp ? market.csps[*s.csp].id : std::string(kNoProvider));
  }
  return out;
}

bool TypeSpace::operator==(const TypeSpace& other) const {
  if (combinations_ != other.combinations_ || strides_ != other.strides_ || slots_.size() != other.slots_.size())
    return false;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    if (slots_[k].size() != other.slots_[k].size()) return false;
    for (std::size_t j = 0; j < slots_[k].size(); ++j) {
      if (slots_[k][j].csp != other.slots_[k][j].csp || slots_[k][j].share != other.slots_[k][j].share) return false;
    }
  }
  return true;
}

TypeSpace build_type_space(std::span<const ServiceSpec> services, std::span<const ContentProvider> providers) {
  if (services.empty()) throw ValidationError("services", "at least one service is required");

  std::vector<Violation> problems;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < services.size(); ++k) {
    if (!seen.insert(services[k].id).second)
      problems.push_back({"services[" + std::to_string(k) + "].id", "duplicate id '" + services[k].id + "'"});
  }
  seen.clear();
  for (std::size_t x = 0; x < providers.size(); ++x) {
    if (!seen.insert(providers[x].id).second)
      problems.push_back({"csps[" + std::to_string(x) + "].id", "duplicate id '" + providers[x].id + "'"});
  }

  TypeSpace space;
  space.slots_.resize(services.size());
  for (std::size_t k = 0; k < services.size(); ++k) {
    double covered = 0.0;
    for (std::size_t x = 0; x < providers.size(); ++x) {
      const double share = providers[x].share(services[k].id);
      if (share > 0.0) {
        space.slots_[k].push_back({x, share});
        covered += share;
      }
    }
    const double remainder = 1.0 - covered;
    if (remainder > kShareTolerance) space.slots_[k].push_back({std::nullopt, remainder});
    if (space.slots_[k].empty())
      problems.push_back({"services[" + std::to_string(k) + "]", "service '" + services[k].id + "' has no users"});
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  space.strides_.assign(services.size(), 1);
  std::size_t stride = 1;
  for (std::size_t k = services.size(); k-- > 0;) {
    space.strides_[k] = stride;
    stride *= space.slots_[k].size();
  }
  space.combinations_ = stride;
  return space;
}

// --- MarketState -----------------------------------------------------------

MarketState::MarketState(std::shared_ptr<const Market> market, std::shared_ptr<const TypeSpace> types,
                         std::vector<double> counts, PeeringLedger ledger)
    : market_(std::move(market)), types_(std::move(types)), counts_(std::move(counts)), ledger_(std::move(ledger)) {
  if (counts_.size() != market_->isps.size() * types_->types_per_isp())
    throw ModelError("market state size does not match its type space");
  for (double n : counts_) {
    if (!(n >= 0.0)) throw ModelError("negative or non-finite customer count");
  }
}

std::span<const double> MarketState::isp_counts(std::size_t isp) const {
  const std::size_t per = types_->types_per_isp();
  return std::span<const double>(counts_).subspan(isp * per, per);
}

double MarketState::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0.0); }

MarketState initialize_market(std::shared_ptr<const Market> market) {
  auto types = std::make_shared<const TypeSpace>(build_type_space(market->services, market->csps));
  const std::size_t per = types->types_per_isp();
  const std::size_t service_count = types->service_count();

  std::vector<double> counts(market->isps.size() * per, 0.0);
  for (std::size_t i = 0; i < market->isps.size(); ++i) {
    for (std::size_t t = 0; t < per; ++t) {
      double n = market->isps[i].subscribers * market->services[types->preferred(t)].importance_weight;
      for (std::size_t k = 0; k < service_count; ++k) n *= types->slots(k)[types->slot(t, k)].share;
      counts[i * per + t] = snap_count(n);
    }
  }
  return MarketState(std::move(market), std::move(types), std::move(counts), PeeringLedger{});
}

double customers_of(const MarketState& state, std::size_t isp, std::size_t csp, std::size_t service) {
  const TypeSpace& types = state.types();
  auto slot = types.slot_of(service, csp);
  if (!slot) return 0.0;
  auto counts = state.isp_counts(isp);
  double sum = 0.0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (types.slot(t, service) == *slot) sum += counts[t];
  }
  return sum;
}

double customers_of(const MarketState& state, std::string_view isp, std::string_view csp, std::string_view service) {
  const Market& m = state.market();
  return customers_of(state, m.isp_index(isp), m.csp_index(csp), m.service_index(service));
}

double preferred_customers_of(const MarketState& state, std::size_t isp, std::size_t csp, std::size_t service) {
  const TypeSpace& types = state.types();
  auto slot = types.slot_of(service, csp);
  if (!slot) return 0.0;
  auto counts = state.isp_counts(isp);
  const std::size_t begin = service * types.provider_combinations();
  const std::size_t end = begin + types.provider_combinations();
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    if (types.slot(t, service) == *slot) sum += counts[t];
  }
  return sum;
}

double preferring_population(const MarketState& state, std::size_t isp, std::size_t service) {
  auto counts = state.isp_counts(isp);
  const std::size_t width = state.types().provider_combinations();
  return std::accumulate(counts.begin() + service * width, counts.begin() + (service + 1) * width, 0.0);
}

double isp_population(const MarketState& state, std::size_t isp) {
  auto counts = state.isp_counts(isp);
  return std::accumulate(counts.begin(), counts.end(), 0.0);
}

double isp_population(const MarketState& state, std::string_view isp) {
  return isp_population(state, state.market().isp_index(isp));
}

nlohmann::ordered_json ledger_to_json(const Market& market, const PeeringLedger& ledger) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& [pair, services] : ledger.entries()) {
    nlohmann::ordered_json entry;
    entry["isp"] = market.isps.at(pair.first).id;
    entry["csp"] = market.csps.at(pair.second).id;
    auto names = nlohmann::ordered_json::array();
    for (std::size_t s : services) names.push_back(market.services.at(s).id);
    entry["services"] = std::move(names);
    out.push_back(std::move(entry));
  }
  return out;
}

nlohmann::ordered_json state_to_json(const MarketState& state) {
  const Market& market = state.market();
  const TypeSpace& types = state.types();
  auto counts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < market.isps.size(); ++i) {
    for (std::size_t t = 0; t < types.types_per_isp(); ++t) {
      CustomerType ct = types.describe(market, i, t);
      nlohmann::ordered_json providers = nlohmann::ordered_json::object();
      for (auto& [service, provider] : ct.providers) providers[service] = provider;
      nlohmann::ordered_json row;
      row["isp"] = ct.isp;
      row["preferred"] = ct.preferred_service;
      row["providers"] = std::move(providers);
      row["n"] = state.count(i, t);
      counts.push_back(std::move(row));
    }
  }
  nlohmann::ordered_json out;
  out["counts"] = std::move(counts);
  out["ledger"] = ledger_to_json(market, state.ledger());
  return out;
}

}  // namespace peerbargain
