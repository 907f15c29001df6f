// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "rps/pathloss.hpp"

#include <cmath>
#include <string>

#include "rps/error.hpp"

namespace rps {

void PathLossParams::validate() const {
  if (!(n_pl >= 1.5 && n_pl <= 6.0)) {
    throw ConfigError("n_pl must lie in [1.5, 6.0], got " + std::to_string(n_pl));
  }
  if (!(d0_m > 0.0)) throw ConfigError("d0_m must be > 0");
  if (!(shadowing_sigma_db >= 0.0)) throw ConfigError("shadowing_sigma_db must be >= 0");
  if (!std::isfinite(tx_power_dbm)) throw ConfigError("tx_power_dbm must be finite");
}

double free_space_pl0(double fc_mhz, double d0_m) {
  if (!(fc_mhz > 0.0)) throw DomainError("free_space_pl0: frequency must be > 0 MHz");
  if (!(d0_m > 0.0)) throw DomainError("free_space_pl0: reference distance must be > 0");
  return 20.0 * std::log10(d0_m) + 20.0 * std::log10(fc_mhz) - 27.55;
}

double path_loss(double prx_dbm, const PathLossParams& params) {
  if (!std::isfinite(prx_dbm)) throw DomainError("path_loss: received power must be finite");
  return params.tx_power_dbm - prx_dbm;
}

double invert_distance(double pl_db, double pl0_db, const PathLossParams& params) {
  if (!(params.n_pl > 0.0)) throw DomainError("invert_distance: n_pl must be > 0");
  return params.d0_m * std::pow(10.0, (pl_db - pl0_db) / (10.0 * params.n_pl));
}

double rss_to_distance(double theta_dbm, double fc_mhz, const PathLossParams& params) {
  return invert_distance(path_loss(theta_dbm, params), free_space_pl0(fc_mhz, params.d0_m),
                         params);
}

double rss_at_distance(double d_m, double fc_mhz, const PathLossParams& params) {
  if (!(d_m > 0.0)) throw DomainError("rss_at_distance: distance must be > 0");
  return params.tx_power_dbm -
         (free_space_pl0(fc_mhz, params.d0_m) + 10.0 * params.n_pl * std::log10(d_m / params.d0_m));
}

}  // namespace rps
