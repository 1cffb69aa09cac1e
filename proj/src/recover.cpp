#include "dsdsim/recover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsd {

cplx SensingMatrix::entry(int l, int pair) const {
  auto [m, n] = pair_of(pair);
  return bs_rx(l, m) * bs_tx(l, n);
}

cvec SensingMatrix::column(int pair) const {
  auto [m, n] = pair_of(pair);
  return bs_rx.col(m).cwiseProduct(bs_tx.col(n));
}

cmat SensingMatrix::dense() const {
  cmat a(subframes(), pairs());
  for (int g = 0; g < pairs(); ++g) a.col(g) = column(g);
  return a;
}

SensingMatrix build_sensing(std::span<const ProbeSchedule> scheds, const SystemConfig& cfg) {
  int total = 0;
  for (const auto& s : scheds) total += s.subframes();
  if (total == 0) throw std::invalid_argument("empty schedule set");
  SensingMatrix a;
  a.grid_rx = cfg.grid_rx;
  a.grid_tx = cfg.grid_tx;
  a.bs_rx.resize(total, cfg.grid_rx);
  a.bs_tx.resize(total, cfg.grid_tx);
  a.raw_rx.resize(total, cfg.n_rx);
  a.raw_tx.resize(total, cfg.n_tx);
  cmat dr = grid_dictionary(cfg.n_rx, cfg.grid_rx);
  cmat dt = grid_dictionary(cfg.n_tx, cfg.grid_tx);
  int l = 0;
  for (const auto& s : scheds)
    for (int i = 0; i < s.subframes(); ++i, ++l) {
      a.bs_rx.row(l) = s.rx[i].adjoint() * dr;
      a.bs_tx.row(l) = (dt.adjoint() * s.tx[i]).transpose();
      a.raw_rx.row(l) = s.rx[i].transpose();
      a.raw_tx.row(l) = s.tx[i].transpose();
    }
  a.abs_rx = a.bs_rx.cwiseAbs();
  a.abs_tx = a.bs_tx.cwiseAbs();
  return a;
}

TapMeasurement stack_tap_samples(std::span<const RxTrace> traces, const SensingMatrix& sensing,
                                 const SystemConfig& cfg, int tap) {
  if (tap < 0 || tap >= cfg.n_taps) throw std::out_of_range("tap index");
  TapMeasurement m;
  m.tap = tap;
  m.sensing = &sensing;
  m.samples.resize(sensing.subframes());
  int k = 0;
  for (const auto& tr : traces) {
    const auto len = tr.samples.size();
    if (len % cfg.n_taps != 0) throw std::invalid_argument("trace length must be a multiple of n_taps");
    const int l = int(len / cfg.n_taps);
    for (int i = 0; i < l; ++i) {
      if (k >= m.samples.size()) throw std::invalid_argument("traces exceed sensing schedule");
      m.samples[k++] = tr.samples[i * cfg.n_taps + tap];
    }
  }
  if (k != m.samples.size()) throw std::invalid_argument("traces shorter than sensing schedule");
  return m;
}

int iteration_bound(int detected, int n_taps, double miss_prob) {
  if (detected < 1 || n_taps < 2) throw std::invalid_argument("bad iteration_bound arguments");
  if (!(miss_prob > 0 && miss_prob < 1)) throw std::invalid_argument("miss_prob must be in (0,1)");
  const double q = 1.0 / n_taps;
  for (int k = 1;; ++k) {
    double p = 0.0;
    if (k <= detected) {
      double logc = std::lgamma(detected + 1.0) - std::lgamma(k + 1.0) - std::lgamma(detected - k + 1.0);
      p = std::exp(logc + k * std::log(q) + (detected - k) * std::log(1.0 - q));
    }
    if (p < miss_prob) return std::max(k - 1, 1);
  }
}

int group_size_for(double omega_max, int n_taps, double corr_floor, int total_subframes) {
  if (total_subframes < 1) throw std::invalid_argument("total_subframes must be >= 1");
  if (!(corr_floor >= 0 && corr_floor < 1)) throw std::invalid_argument("corr_floor must be in [0,1)");
  if (omega_max < 0) throw std::invalid_argument("omega_max must be >= 0");
  if (omega_max == 0) return total_subframes;
  int s = int(std::floor(std::acos(corr_floor) / (omega_max * n_taps)));
  return std::clamp(s, 1, total_subframes);
}

bool pairs_overlap(std::pair<int, int> a, std::pair<int, int> b, int grid_rx, int grid_tx) {
  auto close = [](int u, int v, int g) {
    int d = std::abs(u - v) % g;
    return std::min(d, g - d) <= 1;
  };
  return close(a.first, b.first, grid_rx) && close(a.second, b.second, grid_tx);
}

OmpResult omp_recover(const cvec& y, const cmat& dict, int max_atoms, double res_tol) {
  OmpResult res;
  cvec r = y;
  const double y0 = y.norm();
  cmat phi(y.size(), 0);
  while (res.iterations < max_atoms && r.norm() > res_tol * std::max(y0, 1e-300)) {
    int best = -1;
    double best_v = 0;
    for (int g = 0; g < dict.cols(); ++g) {
      if (std::find(res.support.begin(), res.support.end(), g) != res.support.end()) continue;
      double nrm = dict.col(g).norm();
      if (nrm <= 0) continue;
      double v = std::abs(dict.col(g).dot(r)) / nrm;
      if (v > best_v) {
        best_v = v;
        best = g;
      }
    }
    if (best < 0 || best_v <= 0) break;
    res.support.push_back(best);
    phi.conservativeResize(Eigen::NoChange, phi.cols() + 1);
    phi.col(phi.cols() - 1) = dict.col(best);
    res.coeffs = phi.completeOrthogonalDecomposition().solve(y);
    r = y - phi * res.coeffs;
    ++res.iterations;
  }
  return res;
}

namespace {

struct GreedyCore {
  std::vector<std::pair<int, int>> coarse;
  std::vector<std::pair<int, int>> fine;
  std::vector<std::pair<double, double>> freqs;
  cvec coeffs;
  int iterations = 0;
  double beta = std::numeric_limits<double>::infinity();
  bool regularized = false;
  std::vector<double> resid_norms;
};

// grouped magnitude-profile greedy pursuit; bomp is the group==L, refine==false case
GreedyCore greedy_block(const TapMeasurement& m, int kmax, int group, double beta_tol,
                        bool refine, std::span<const std::pair<int, int>> prior) {
  if (!m.sensing) throw std::invalid_argument("measurement lacks sensing matrix");
  const SensingMatrix& a = *m.sensing;
  const int L = a.subframes();
  if (m.samples.size() != L) throw std::invalid_argument("sample count does not match sensing matrix");
  if (kmax < 1) throw std::invalid_argument("max iterations must be >= 1");
  group = std::clamp(group, 1, L);
  BlockView view{a.pairs(), L, group};

  GreedyCore res;
  std::vector<std::pair<int, int>> blocked(prior.begin(), prior.end());

  const rmat den2 = (a.abs_rx.array().square().matrix().transpose() *
                     a.abs_tx.array().square().matrix());
  cvec r = m.samples;
  cmat phi(L, 0);
  double x_prev = 0.0;
  const double floor = 1e-12 * m.samples.norm();  // numerically exact fit

  while (res.iterations < kmax && r.norm() > floor) {
    // score(m,n) = sum_l |psi_(m,n)(l)| |r_l| / ||psi_(m,n)||
    rvec w = r.cwiseAbs();
    rmat num = a.abs_rx.transpose() * (w.asDiagonal() * a.abs_tx);
    int bm = -1, bn = -1;
    double best = 0;
    for (int n = 0; n < a.grid_tx; ++n)
      for (int mm = 0; mm < a.grid_rx; ++mm) {
        double d = den2(mm, n);
        if (d <= 0) continue;
        double v = num(mm, n) / std::sqrt(d);
        if (v <= best) continue;
        bool masked = false;
        for (const auto& s : blocked)
          if (pairs_overlap({mm, n}, s, a.grid_rx, a.grid_tx)) {
            masked = true;
            break;
          }
        if (!masked) {
          best = v;
          bm = mm;
          bn = n;
        }
      }
    if (bm < 0 || best <= 0) break;

    double ya = double(bm) / a.grid_rx;
    double yd = double(bn) / a.grid_tx;
    int fa = bm * a.grid_rx, fd = bn * a.grid_tx;
    if (refine) {
      // candidates m/G + j/G^2, j in [-G/2, G/2)
      const int gr = a.grid_rx, gt = a.grid_tx;
      rmat fr(gr, L), ft(gt, L);
      for (int j = 0; j < gr; ++j) {
        double y = ya + double(j - gr / 2) / (double(gr) * gr);
        fr.row(j) =
            (steering_vector(int(a.raw_rx.cols()), y).adjoint() * a.raw_rx.transpose()).cwiseAbs();
      }
      for (int j = 0; j < gt; ++j) {
        double y = yd + double(j - gt / 2) / (double(gt) * gt);
        ft.row(j) =
            (steering_vector(int(a.raw_tx.cols()), y).adjoint() * a.raw_tx.transpose()).cwiseAbs();
      }
      rmat numf = fr * w.asDiagonal() * ft.transpose();
      rmat denf =
          ((fr.array().square().matrix() * ft.array().square().matrix().transpose()).array() +
           1e-300)
              .sqrt();
      rmat ratio = numf.array() / denf.array();
      int jr = 0, jt = 0;
      ratio.maxCoeff(&jr, &jt);
      ya = wrap_unit(ya + double(jr - gr / 2) / (double(gr) * gr));
      yd = wrap_unit(yd + double(jt - gt / 2) / (double(gt) * gt));
      fa = ((bm * gr + jr - gr / 2) % (gr * gr) + gr * gr) % (gr * gr);
      fd = ((bn * gt + jt - gt / 2) % (gt * gt) + gt * gt) % (gt * gt);
    }

    res.coarse.emplace_back(bm, bn);
    res.fine.emplace_back(fa, fd);
    res.freqs.emplace_back(ya, yd);
    blocked.emplace_back(bm, bn);

    cvec col = (a.raw_rx.conjugate() * steering_vector(int(a.raw_rx.cols()), ya))
                   .cwiseProduct(a.raw_tx * steering_vector(int(a.raw_tx.cols()), yd).conjugate());
    phi.conservativeResize(Eigen::NoChange, phi.cols() + 1);
    phi.col(phi.cols() - 1) = col;

    double x = 0.0;
    res.coeffs.resize(phi.cols() * view.groups());
    for (int j = 0; j < view.groups(); ++j) {
      auto [start, len] = view.group_span(j);
      auto cod = phi.middleRows(start, len).completeOrthogonalDecomposition();
      if (cod.rank() < phi.cols()) res.regularized = true;
      cvec c = cod.solve(m.samples.segment(start, len));
      r.segment(start, len) = m.samples.segment(start, len) - phi.middleRows(start, len) * c;
      res.coeffs.segment(j * phi.cols(), phi.cols()) = c;
      x += c.norm();
    }
    ++res.iterations;
    res.resid_norms.push_back(r.norm());
    res.beta = x > 0 ? std::fabs(x - x_prev) / x : 0.0;
    x_prev = x;
    if (res.beta <= beta_tol) break;
  }
  return res;
}

}  // namespace

BompResult bomp_recover(const TapMeasurement& m, int max_blocks, double beta_tol,
                        std::span<const std::pair<int, int>> prior) {
  const int L = m.sensing ? m.sensing->subframes() : 1;
  GreedyCore core = greedy_block(m, max_blocks, L, beta_tol, false, prior);
  BompResult res;
  res.pairs = std::move(core.coarse);
  res.coeffs = std::move(core.coeffs);
  res.iterations = core.iterations;
  res.regularized = core.regularized;
  return res;
}

SupportEstimate abomp_recover(const TapMeasurement& m, const AbompOptions& opt,
                              std::span<const std::pair<int, int>> prior) {
  GreedyCore core = greedy_block(m, opt.max_iters, opt.group, opt.beta_tol, opt.refine, prior);
  SupportEstimate se;
  se.tap = m.tap;
  se.coarse = std::move(core.coarse);
  se.fine = std::move(core.fine);
  se.freqs = std::move(core.freqs);
  se.iterations = core.iterations;
  se.beta = std::isfinite(core.beta) ? core.beta : 0.0;
  se.regularized = core.regularized;
  se.resid_norms = std::move(core.resid_norms);
  return se;
}

}  // namespace dsd
