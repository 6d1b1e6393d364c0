#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace polymer::fft {

/// Smallest 2^a 3^b 5^c that is >= n.
std::size_t good_size(std::size_t n);

struct FreeDeleter {
  void operator()(void* p) const noexcept;
};

/// SIMD-aligned scratch arrays for one transform size. Not shared between threads.
struct Workspace {
  explicit Workspace(std::size_t n);
  std::size_t n;
  std::unique_ptr<double[], FreeDeleter> real;
  std::unique_ptr<std::complex<double>[], FreeDeleter> spectrum;
};

/// out[u] = sum_t h[t] * s[u + t] for u in [0, out_len), with s of length
/// out_len + h.size() - 1. Kernel spectrum is computed once; apply() is const
/// and may be called concurrently with distinct workspaces.
class Correlator {
 public:
  Correlator(std::span<const double> kernel, std::size_t out_len);

  std::size_t kernel_size() const noexcept { return kernel_size_; }
  std::size_t out_len() const noexcept { return out_len_; }
  std::size_t signal_len() const noexcept { return out_len_ + kernel_size_ - 1; }
  std::size_t transform_size() const noexcept { return n_; }

  Workspace make_workspace() const { return Workspace(n_); }

  /// Signal must be written into ws.real[0 .. signal_len()) before the call;
  /// the result is left in ws.real[0 .. out_len()).
  void apply_in_place(Workspace& ws) const;

  void apply(std::span<const double> signal, std::span<double> out, Workspace& ws) const;

 private:
  std::size_t kernel_size_;
  std::size_t out_len_;
  std::size_t n_;
  std::vector<std::complex<double>> kernel_spectrum_;
};

/// r[k] = sum_j v[j] v[j+k] for k = 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> v, std::size_t max_lag);

/// out[u] = sum_t h[t] s[u+t] by direct summation (reference path).
void correlate_direct(std::span<const double> h, std::span<const double> s, std::span<double> out);

}  // namespace polymer::fft
