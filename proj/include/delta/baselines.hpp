#pragma once

#include <optional>
#include <span>
#include <string>

#include "delta/core.hpp"

namespace delta {

enum class BaselineKind { RR, MAF, ZW, LZW, GZW };

std::string to_string(BaselineKind kind);

/// Parameters of a benchmark protocol. p2 only matters for LZW and GZW.
struct BaselineConfig {
  BaselineKind kind = BaselineKind::ZW;
  double p1 = 1.0;
  double p2 = 1.0;

  bool uses_p1() const { return kind == BaselineKind::ZW || uses_p2(); }
  bool uses_p2() const { return kind == BaselineKind::LZW || kind == BaselineKind::GZW; }
  void validate() const;
  bool operator==(const BaselineConfig&) const = default;
};

/// Node polled by round robin in slot t (0-based slots and ids).
inline NodeId rr_poll(std::int64_t t, int n) { return static_cast<NodeId>(t % n); }

/// Node polled by maximum-age-first: the last polled node again after a
/// loss, otherwise the largest gateway AoI with ties to the lowest id.
NodeId maf_poll(std::span<const Age> gateway_aoi, std::optional<NodeId> lost);

/// Transmission decision of the zero-wait family. failed_local is the LZW
/// back-off flag, backoff_global the GZW one.
bool zw_family_decide(BaselineKind kind, bool x, bool failed_local, bool backoff_global,
                      double p1, double p2, Rng& rng);

}  // namespace delta
