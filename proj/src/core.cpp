#include "delta/core.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace delta {

SystemParams::SystemParams(std::vector<double> lambda, std::vector<double> epsilon)
    : lambda_(std::move(lambda)), epsilon_(std::move(epsilon)) {
  if (lambda_.empty()) throw std::invalid_argument("SystemParams: need at least one node");
  if (lambda_.size() != epsilon_.size())
    throw std::invalid_argument("SystemParams: lambda and epsilon sizes differ");
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    if (!(lambda_[i] >= 0.0 && lambda_[i] <= 1.0))
      throw std::invalid_argument("SystemParams: lambda[" + std::to_string(i) + "] outside [0,1]");
    if (!(epsilon_[i] >= 0.0 && epsilon_[i] < 1.0))
      throw std::invalid_argument("SystemParams: epsilon[" + std::to_string(i) + "] outside [0,1)");
  }
}

SystemParams SystemParams::symmetric(int n, double lambda, double epsilon) {
  if (n < 1) throw std::invalid_argument("SystemParams: N must be >= 1");
  return SystemParams(std::vector<double>(n, lambda), std::vector<double>(n, epsilon));
}

SystemParams SystemParams::from_load(int n, double rho, double epsilon) {
  if (n < 1) throw std::invalid_argument("SystemParams: N must be >= 1");
  return symmetric(n, rho / n, epsilon);
}

double SystemParams::rho() const { return std::accumulate(lambda_.begin(), lambda_.end(), 0.0); }

double SystemParams::mean_epsilon() const {
  return std::accumulate(epsilon_.begin(), epsilon_.end(), 0.0) / n();
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

bool step_anomaly(bool x, double lambda, Rng& rng) {
  const bool activate = bernoulli(rng, lambda);
  return x || activate;
}

NodeRecord update_ages(NodeRecord rec, bool success) {
  if (success) {
    rec.x = false;
    rec.delta = 0;
    rec.theta = 0;
    return rec;
  }
  ++rec.delta;
  if (rec.x) ++rec.theta;
  return rec;
}

}  // namespace delta
