// Compiled with -mavx2 (and without -mfma); only reached after a runtime CPU check.

#include "forcesolve/simd/kernels.hpp"

#if defined(FORCESOLVE_HAVE_AVX2)

#include <immintrin.h>

namespace forcesolve::simd {

namespace {

constexpr std::size_t kLanes = 4;

void transform_avx2(const Affine& a, PointsSoA in, std::size_t n, MutablePointsSoA out) {
  const __m256d r0 = _mm256_set1_pd(a.r[0]), r1 = _mm256_set1_pd(a.r[1]), r2 = _mm256_set1_pd(a.r[2]);
  const __m256d r3 = _mm256_set1_pd(a.r[3]), r4 = _mm256_set1_pd(a.r[4]), r5 = _mm256_set1_pd(a.r[5]);
  const __m256d r6 = _mm256_set1_pd(a.r[6]), r7 = _mm256_set1_pd(a.r[7]), r8 = _mm256_set1_pd(a.r[8]);
  const __m256d t0 = _mm256_set1_pd(a.t[0]), t1 = _mm256_set1_pd(a.t[1]), t2 = _mm256_set1_pd(a.t[2]);

  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(in.x + i);
    const __m256d y = _mm256_loadu_pd(in.y + i);
    const __m256d z = _mm256_loadu_pd(in.z + i);
    // ((r0*x + r1*y) + r2*z) + t0, the scalar evaluation order.
    __m256d ox = _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r0, x), _mm256_mul_pd(r1, y)),
                                             _mm256_mul_pd(r2, z)), t0);
    __m256d oy = _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r3, x), _mm256_mul_pd(r4, y)),
                                             _mm256_mul_pd(r5, z)), t1);
    __m256d oz = _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r6, x), _mm256_mul_pd(r7, y)),
                                             _mm256_mul_pd(r8, z)), t2);
    _mm256_storeu_pd(out.x + i, ox);
    _mm256_storeu_pd(out.y + i, oy);
    _mm256_storeu_pd(out.z + i, oz);
  }
  for (; i < n; ++i) {
    const double x = in.x[i];
    const double y = in.y[i];
    const double z = in.z[i];
    out.x[i] = a.r[0] * x + a.r[1] * y + a.r[2] * z + a.t[0];
    out.y[i] = a.r[3] * x + a.r[4] * y + a.r[5] * z + a.t[1];
    out.z[i] = a.r[6] * x + a.r[7] * y + a.r[8] * z + a.t[2];
  }
}

std::size_t project_avx2(const Intrinsics& k, PointsSoA cam, std::size_t n, double* u, double* v) {
  const __m256d fx = _mm256_set1_pd(k.fx), fy = _mm256_set1_pd(k.fy);
  const __m256d cx = _mm256_set1_pd(k.cx), cy = _mm256_set1_pd(k.cy);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t first_bad = n;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(cam.x + i);
    const __m256d y = _mm256_loadu_pd(cam.y + i);
    const __m256d z = _mm256_loadu_pd(cam.z + i);
    // Lanes where !(z > 0), NaN included.
    const int bad = _mm256_movemask_pd(_mm256_cmp_pd(z, zero, _CMP_NGT_UQ));
    if (bad != 0 && first_bad == n) first_bad = i + static_cast<std::size_t>(__builtin_ctz(bad));
    _mm256_storeu_pd(u + i, _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fx, x), z), cx));
    _mm256_storeu_pd(v + i, _mm256_add_pd(_mm256_div_pd(_mm256_mul_pd(fy, y), z), cy));
  }
  for (; i < n; ++i) {
    if (!(cam.z[i] > 0.0) && first_bad == n) first_bad = i;
    u[i] = k.fx * cam.x[i] / cam.z[i] + k.cx;
    v[i] = k.fy * cam.y[i] / cam.z[i] + k.cy;
  }
  return first_bad;
}

void squared_residuals_avx2(const double* u, const double* v, const double* obs_u,
                            const double* obs_v, const double* weight, std::size_t n,
                            double* out) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d du = _mm256_sub_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(obs_u + i));
    const __m256d dv = _mm256_sub_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(obs_v + i));
    const __m256d sq = _mm256_add_pd(_mm256_mul_pd(du, du), _mm256_mul_pd(dv, dv));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(weight + i), sq));
  }
  for (; i < n; ++i) {
    const double du = u[i] - obs_u[i];
    const double dv = v[i] - obs_v[i];
    out[i] = weight[i] * (du * du + dv * dv);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::kAvx2, &transform_avx2, &project_avx2,
                                 &squared_residuals_avx2};
  return &table;
}

}  // namespace forcesolve::simd

#else

namespace forcesolve::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace forcesolve::simd

#endif
