#include "polymer/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

#include "polymer/numeric.hpp"

namespace polymer::fft {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// fftw's planner is not thread-safe; executing a plan on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* r = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* c = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
  if (!r || !c) throw std::bad_alloc();
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r, c, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, r, FFTW_ESTIMATE);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(n, p).first->second;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void FreeDeleter::operator()(void* p) const noexcept { fftw_free(p); }

std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  std::size_t best = 1;
  while (best < n) best <<= 1;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5)
    for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
      std::size_t v = p35;
      while (v < n) v <<= 1;
      best = std::min(best, v);
    }
  return best;
}

Workspace::Workspace(std::size_t n_)
    : n(n_),
      real(static_cast<double*>(fftw_malloc(sizeof(double) * n_))),
      spectrum(reinterpret_cast<std::complex<double>*>(
          fftw_malloc(sizeof(fftw_complex) * (n_ / 2 + 1)))) {
  if (!real || !spectrum) throw std::bad_alloc();
}

Correlator::Correlator(std::span<const double> kernel, std::size_t out_len)
    : kernel_size_(kernel.size()), out_len_(out_len) {
  if (kernel.empty() || out_len == 0) throw std::invalid_argument("Correlator: empty kernel or output");
  n_ = good_size(out_len_ + kernel_size_ - 1);
  Workspace ws(n_);
  std::fill_n(ws.real.get(), n_, 0.0);
  std::copy(kernel.begin(), kernel.end(), ws.real.get());
  fftw_execute_dft_r2c(plans_for(n_).forward, ws.real.get(), as_fftw(ws.spectrum.get()));
  kernel_spectrum_.assign(ws.spectrum.get(), ws.spectrum.get() + n_ / 2 + 1);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& z : kernel_spectrum_) z = std::conj(z) * scale;
}

void Correlator::apply_in_place(Workspace& ws) const {
  const std::size_t len = signal_len();
  std::fill(ws.real.get() + len, ws.real.get() + n_, 0.0);
  const auto& p = plans_for(n_);
  fftw_execute_dft_r2c(p.forward, ws.real.get(), as_fftw(ws.spectrum.get()));
  const std::size_t m = n_ / 2 + 1;
  for (std::size_t i = 0; i < m; ++i) ws.spectrum[i] *= kernel_spectrum_[i];
  fftw_execute_dft_c2r(p.inverse, as_fftw(ws.spectrum.get()), ws.real.get());
}

void Correlator::apply(std::span<const double> signal, std::span<double> out, Workspace& ws) const {
  if (signal.size() != signal_len() || out.size() != out_len_)
    throw std::invalid_argument("Correlator::apply: size mismatch");
  std::copy(signal.begin(), signal.end(), ws.real.get());
  apply_in_place(ws);
  std::copy_n(ws.real.get(), out_len_, out.begin());
}

std::vector<double> autocorrelation(std::span<const double> v, std::size_t max_lag) {
  const std::size_t n = good_size(v.size() + max_lag + 1);
  Workspace ws(n);
  std::fill_n(ws.real.get(), n, 0.0);
  std::copy(v.begin(), v.end(), ws.real.get());
  const auto& p = plans_for(n);
  fftw_execute_dft_r2c(p.forward, ws.real.get(), as_fftw(ws.spectrum.get()));
  for (std::size_t i = 0; i < n / 2 + 1; ++i) ws.spectrum[i] = std::norm(ws.spectrum[i]);
  fftw_execute_dft_c2r(p.inverse, as_fftw(ws.spectrum.get()), ws.real.get());
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) r[k] = ws.real[k] / static_cast<double>(n);
  return r;
}

void correlate_direct(std::span<const double> h, std::span<const double> s, std::span<double> out) {
  if (s.size() + 1 < out.size() + h.size())
    throw std::invalid_argument("correlate_direct: signal too short");
  for (std::size_t u = 0; u < out.size(); ++u) {
    KahanSum acc;
    for (std::size_t t = 0; t < h.size(); ++t) acc.add(h[t] * s[u + t]);
    out[u] = acc.value();
  }
}

}  // namespace polymer::fft
