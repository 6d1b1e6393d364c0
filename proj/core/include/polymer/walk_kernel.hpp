#pragma once

#include <span>
#include <vector>

namespace polymer {

inline constexpr bool same_parity(long a, long b) noexcept { return ((a - b) & 1L) == 0; }

/// P(S_n = x) for the simple symmetric walk from 0; 0 off the parity cone.
double walk_p(int n, int x);

/// Product-of-ratios evaluation (used for small n).
double walk_p_ratio(int n, int x);
/// Log-space evaluation through the binomial pmf (used for large n).
double walk_p_logspace(int n, int x);

/// p(n, x) for x = -n..n, stored at index x + n (zeros at the wrong parity).
std::vector<double> walk_row(int n);

enum class TupleKind { Ordered, Distinct };

/// Checks membership of a time tuple in D_k^n (Ordered) or E_k^n (Distinct).
bool valid_time_tuple(std::span<const int> times, int n, TupleKind kind);

/// Joint kernel prod_j p(i_j - i_{j-1}, x_j - x_{j-1}) with i_0 = x_0 = 0.
double walk_pk(std::span<const int> times, std::span<const int> sites);

/// Integer with the parity of i closest to x; ties go to the smaller one.
int nearest_parity_int(double x, int i);

/// 2^{-k} p_k(i, [x]_i), a density on R^k constant on parity cells.
double pbar_k(std::span<const int> times, std::span<const double> x);

/// Cell value 2^{-k} p_k(i, x) for integer sites already on the lattice.
double pbar_cell(std::span<const int> times, std::span<const int> sites);

/// p^n_k(t, x) = pbar_k(floor(n t), sqrt(n) x) on the ordered simplex, else 0.
double p_scaled(std::span<const double> t, std::span<const double> x, int n);

}  // namespace polymer
