#include "dsdsim/detect.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dsd {

TapStats tap_statistics(std::span<const RxTrace> traces, const SystemConfig& cfg) {
  if (traces.empty()) throw std::invalid_argument("no traces");
  const int nc = cfg.n_taps;
  TapStats st;
  st.ts = rvec::Zero(nc);
  st.noise_var = traces[0].noise_var;
  long total = 0;
  for (const auto& tr : traces) {
    const auto len = tr.samples.size();
    if (len == 0 || len % nc != 0)
      throw std::invalid_argument("trace length must be a positive multiple of n_taps");
    const int l = int(len / nc);
    for (int i = 0; i < l; ++i)
      for (int d = 0; d < nc; ++d) st.ts[d] += std::norm(tr.samples[i * nc + d]);
    total += l;
  }
  st.ts /= double(total);
  st.subframes = int(total);
  double peak = (st.ts.array() - st.noise_var).maxCoeff();
  st.nts = rvec::Zero(nc);
  if (peak > 0) st.nts = (st.ts.array() - st.noise_var) / peak;
  return st;
}

std::vector<int> select_taps(const TapStats& stats, const DetectorOptions& opt) {
  if (!(opt.threshold > 0 && opt.threshold < 1)) throw std::invalid_argument("threshold must be in (0,1)");
  if (opt.cap < 1) throw std::invalid_argument("cap must be >= 1");
  const int nc = int(stats.ts.size());
  std::vector<int> cand;
  for (int d = 0; d < nc; ++d)
    if (stats.nts[d] >= opt.threshold && stats.ts[d] > stats.noise_var) cand.push_back(d);

  auto top_by = [&](const rvec& key) {
    std::vector<int> idx(nc);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key[a] > key[b]; });
    idx.resize(std::min<int>(opt.cap, nc));
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  if (!cand.empty() && int(cand.size()) <= opt.cap) return cand;
  if (int(cand.size()) > opt.cap) return top_by(stats.nts);
  return top_by(stats.ts);
}

}  // namespace dsd
