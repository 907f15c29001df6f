// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Log-distance path-loss ranging.
//
// Loss grows with distance: PL(d) = PL0 + 10 n log10(d / d0), so the inverse is
// d = d0 * 10^((PL - PL0) / (10 n)). PL0 comes from the free-space model at the
// reference distance, and PL = P_T - P_R with a single nominal transmit power.
// A wrong nominal P_T scales every range by the same factor, which the
// relative frame absorbs.

namespace rps {

struct PathLossParams {
  double n_pl = 2.8;
  double d0_m = 1.0;
  double tx_power_dbm = 43.0;
  double shadowing_sigma_db = 4.0;

  /// Throws ConfigError when n_pl is outside [1.5, 6], d0 <= 0 or sigma < 0.
  void validate() const;
};

/// Free-space loss at the reference distance: 20 log10(d0) + 20 log10(fc) - 27.55.
/// fc in MHz, d0 in meters. fc <= 0 -> DomainError.
double free_space_pl0(double fc_mhz, double d0_m = 1.0);

/// P_T - P_R in dB.
double path_loss(double prx_dbm, const PathLossParams& params);

double invert_distance(double pl_db, double pl0_db, const PathLossParams& params);

/// Range estimate from a (windowed) mean RSS.
double rss_to_distance(double theta_dbm, double fc_mhz, const PathLossParams& params);

/// Noise-free RSS at distance d (the forward model without shadowing).
double rss_at_distance(double d_m, double fc_mhz, const PathLossParams& params);

}  // namespace rps
