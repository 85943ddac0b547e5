#include "delta/baselines.hpp"

#include <stdexcept>

namespace delta {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::RR: return "RR";
    case BaselineKind::MAF: return "MAF";
    case BaselineKind::ZW: return "ZW";
    case BaselineKind::LZW: return "LZW";
    case BaselineKind::GZW: return "GZW";
  }
  return "?";
}

void BaselineConfig::validate() const {
  const auto ok = [](double p) { return p > 0.0 && p <= 1.0; };
  if (uses_p1() && !ok(p1)) throw std::invalid_argument("baseline: p1 must be in (0,1]");
  if (uses_p2() && !ok(p2)) throw std::invalid_argument("baseline: p2 must be in (0,1]");
}

NodeId maf_poll(std::span<const Age> gateway_aoi, std::optional<NodeId> lost) {
  if (lost) return *lost;
  NodeId best = 0;
  for (std::size_t n = 1; n < gateway_aoi.size(); ++n)
    if (gateway_aoi[n] > gateway_aoi[best]) best = static_cast<NodeId>(n);
  return best;
}

bool zw_family_decide(BaselineKind kind, bool x, bool failed_local, bool backoff_global,
                      double p1, double p2, Rng& rng) {
  if (!x) return false;
  switch (kind) {
    case BaselineKind::ZW: return bernoulli(rng, p1);
    case BaselineKind::LZW: return bernoulli(rng, failed_local ? p2 : p1);
    case BaselineKind::GZW: return bernoulli(rng, backoff_global ? p2 : p1);
    default: throw std::invalid_argument("zw_family_decide: not a zero-wait protocol");
  }
}

}  // namespace delta
