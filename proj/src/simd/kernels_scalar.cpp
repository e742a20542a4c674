#include "forcesolve/simd/kernels.hpp"

namespace forcesolve::simd {

namespace {

void transform_scalar(const Affine& a, PointsSoA in, std::size_t n, MutablePointsSoA out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = in.x[i];
    const double y = in.y[i];
    const double z = in.z[i];
    out.x[i] = a.r[0] * x + a.r[1] * y + a.r[2] * z + a.t[0];
    out.y[i] = a.r[3] * x + a.r[4] * y + a.r[5] * z + a.t[1];
    out.z[i] = a.r[6] * x + a.r[7] * y + a.r[8] * z + a.t[2];
  }
}

std::size_t project_scalar(const Intrinsics& k, PointsSoA cam, std::size_t n, double* u,
                           double* v) {
  std::size_t first_bad = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cam.z[i] > 0.0) && first_bad == n) first_bad = i;
    u[i] = k.fx * cam.x[i] / cam.z[i] + k.cx;
    v[i] = k.fy * cam.y[i] / cam.z[i] + k.cy;
  }
  return first_bad;
}

void squared_residuals_scalar(const double* u, const double* v, const double* obs_u,
                              const double* obs_v, const double* weight, std::size_t n,
                              double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double du = u[i] - obs_u[i];
    const double dv = v[i] - obs_v[i];
    out[i] = weight[i] * (du * du + dv * dv);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::kScalar, &transform_scalar, &project_scalar,
                                 &squared_residuals_scalar};
  return table;
}

}  // namespace forcesolve::simd
