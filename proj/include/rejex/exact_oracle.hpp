/*
 * Copyright 2026 The RejEx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

/// Exact rational evaluation of the stability tail, independent of the
/// floating-point path. Requires GMP.
namespace rejex::exact {

/// A non-negative rational num/den with small integer parts.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

/// P(Y=1|s) as an exact rational for psi = psi.num/psi.den and
/// gamma = gamma.num/gamma.den, summing the tail term by term over big
/// integers with a = floor(n gamma).
inline mpq_class StabilityProbability(std::size_t n, Ratio psi, Ratio gamma) {
  const mpz_class nz(static_cast<unsigned long>(n));
  // a = floor(n * gamma) exactly.
  mpz_class a_z = nz * gamma.num;
  mpz_fdiv_q_ui(a_z.get_mpz_t(), a_z.get_mpz_t(), static_cast<unsigned long>(gamma.den));
  const std::size_t a = a_z.get_ui();
  if (a == 0) return mpq_class(0);

  // q = (1 + n psi) / (n + 2) = (psi.den + n psi.num) / (psi.den (n + 2)) = u / v.
  const mpz_class u = mpz_class(psi.den) + nz * psi.num;
  const mpz_class v = mpz_class(psi.den) * (nz + 2);
  const mpz_class w = v - u;

  mpz_class sum = 0;
  mpz_class choose;
  mpz_class up;
  mpz_class down;
  for (std::size_t i = n - a + 1; i <= n; ++i) {
    mpz_bin_uiui(choose.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(i));
    mpz_pow_ui(up.get_mpz_t(), u.get_mpz_t(), static_cast<unsigned long>(i));
    mpz_pow_ui(down.get_mpz_t(), w.get_mpz_t(), static_cast<unsigned long>(n - i));
    sum += choose * up * down;
  }
  mpz_class denom;
  mpz_pow_ui(denom.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(n));
  mpq_class out(sum, denom);
  out.canonicalize();
  return out;
}

/// Natural log of a positive rational, accurate to double precision even
/// when the value is far outside the double range.
inline double Log(const mpq_class& x) {
  long exp_num = 0;
  long exp_den = 0;
  const double mant_num = mpz_get_d_2exp(&exp_num, x.get_num_mpz_t());
  const double mant_den = mpz_get_d_2exp(&exp_den, x.get_den_mpz_t());
  return std::log(mant_num) - std::log(mant_den) +
         static_cast<double>(exp_num - exp_den) * std::log(2.0);
}

/// Relative error |approx - exact| / exact computed in exact arithmetic.
/// Both zero counts as agreement.
inline double RelativeError(double approx, const mpq_class& exact_value) {
  if (exact_value == 0) return approx == 0.0 ? 0.0 : INFINITY;
  mpq_class diff = mpq_class(approx) - exact_value;
  if (diff < 0) diff = -diff;
  const mpq_class rel = diff / exact_value;
  return rel.get_d();
}

}  // namespace rejex::exact
