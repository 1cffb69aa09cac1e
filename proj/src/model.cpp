#include "dsdsim/model.hpp"

#include <cmath>
#include <stdexcept>

namespace dsd {

double SystemConfig::max_doppler() const {
  return two_pi * carrier_hz * speed_mps * symbol_s / light_mps;
}

void SystemConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (n_tx < 1 || n_rx < 1) fail("array sizes must be >= 1");
  if (n_taps < 2) fail("n_taps must be >= 2");
  if (grid_tx < 1 || grid_rx < 1) fail("grid sizes must be >= 1");
  if (phase_bits < 1 || phase_bits > 30) fail("phase_bits must be in [1,30]");
  if (!(carrier_hz > 0)) fail("carrier_hz must be > 0");
  if (!(symbol_s > 0)) fail("symbol_s must be > 0");
  if (!(light_mps > 0)) fail("light_mps must be > 0");
  if (speed_mps < 0) fail("speed_mps must be >= 0");
  if (noise_var < 0) fail("noise_var must be >= 0");
}

double spatial_freq(double angle_rad) { return wrap_unit(std::sin(angle_rad) / 2.0); }

cvec steering_vector(int n, double y) {
  cvec a(n);
  const double s = 1.0 / std::sqrt(double(n));
  for (int k = 0; k < n; ++k) a[k] = std::polar(s, two_pi * k * y);
  return a;
}

cmat grid_dictionary(int n, int g) {
  cmat d(n, g);
  for (int i = 0; i < g; ++i) d.col(i) = steering_vector(n, double(i) / g);
  return d;
}

double raised_cosine(double t, double symbol_s) {
  double x = t / symbol_s;
  if (std::fabs(x) > 4.0) return 0.0;
  if (x == 0.0) return 1.0;
  double den = 1.0 - 4.0 * x * x;
  if (std::fabs(den) < 1e-9) return 0.5;  // limit at |x| = 1/2
  return std::sin(pi * x) / (pi * x) * std::cos(pi * x) / den;
}

ChannelRealization realize_paths(const SystemConfig& cfg, std::vector<PathParams> paths) {
  const int p = int(paths.size());
  if (p < 1) throw std::invalid_argument("need at least one path");
  ChannelRealization ch;
  ch.paths = std::move(paths);
  ch.tap_gains.resize(cfg.n_taps, p);
  ch.steer_rx.resize(cfg.n_rx, p);
  ch.steer_tx.resize(cfg.n_tx, p);
  const double scale = std::sqrt(double(cfg.n_tx) * cfg.n_rx / p);
  for (int i = 0; i < p; ++i) {
    const PathParams& pp = ch.paths[i];
    ch.steer_rx.col(i) = steering_vector(cfg.n_rx, spatial_freq(pp.aoa_rad));
    ch.steer_tx.col(i) = steering_vector(cfg.n_tx, spatial_freq(pp.aod_rad));
    for (int d = 0; d < cfg.n_taps; ++d)
      ch.tap_gains(d, i) = scale * pp.gain * raised_cosine(d * cfg.symbol_s - pp.delay_s, cfg.symbol_s);
  }
  return ch;
}

ChannelRealization sample_channel(const SystemConfig& cfg, int n_paths, rng_t& rng) {
  cfg.validate();
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  std::uniform_real_distribution<double> udelay(0.0, (cfg.n_taps - 1) * cfg.symbol_s);
  std::uniform_real_distribution<double> uangle(0.0, two_pi);
  std::vector<PathParams> paths(n_paths);
  const double wm = cfg.max_doppler();
  for (auto& p : paths) {
    p.gain = randn_c(rng);
    p.delay_s = udelay(rng);
    p.aoa_rad = uangle(rng);
    p.aod_rad = uangle(rng);
    p.doppler = wm * std::sin(p.aoa_rad);
  }
  return realize_paths(cfg, std::move(paths));
}

cmat tap_matrix(const ChannelRealization& ch, int tap, double instant) {
  if (tap < 0 || tap >= ch.tap_gains.rows()) throw std::out_of_range("tap index");
  const int p = int(ch.paths.size());
  cvec g(p);
  for (int i = 0; i < p; ++i)
    g[i] = ch.tap_gains(tap, i) * std::polar(1.0, ch.paths[i].doppler * instant);
  return (ch.steer_rx * g.asDiagonal()) * ch.steer_tx.adjoint();
}

rvec tap_energies(const ChannelRealization& ch, double instant) {
  const int nd = int(ch.tap_gains.rows());
  rvec e(nd);
  for (int d = 0; d < nd; ++d) e[d] = tap_matrix(ch, d, instant).squaredNorm();
  return e;
}

cmat beamspace_of(const SystemConfig& cfg, const cmat& tap_mat) {
  if (tap_mat.rows() != cfg.n_rx || tap_mat.cols() != cfg.n_tx)
    throw std::invalid_argument("tap matrix does not match array sizes");
  cmat dr = grid_dictionary(cfg.n_rx, cfg.grid_rx);
  cmat dt = grid_dictionary(cfg.n_tx, cfg.grid_tx);
  const double s = double(cfg.n_rx) * cfg.n_tx / (double(cfg.grid_rx) * cfg.grid_tx);
  return s * (dr.adjoint() * tap_mat * dt);
}

}  // namespace dsd
